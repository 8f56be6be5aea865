use nalgebra::DVector;
use rand::{Rng, RngCore};

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::rng::unit_sphere;

/// Absolute tolerance for membership checks.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A nonempty convex compact subset of R^dim with a Euclidean projection.
pub trait ConvexCompactSet: Send + Sync {
    fn dim(&self) -> usize;

    /// Euclidean projection. Callers must pass finite points.
    fn project(&self, z: &DVector<f64>) -> DVector<f64>;

    /// Membership up to [`MEMBERSHIP_TOL`].
    fn contains(&self, z: &DVector<f64>) -> bool;

    fn diameter(&self) -> f64;

    /// A point drawn uniformly from the set.
    fn sample(&self, rng: &mut dyn RngCore) -> DVector<f64>;

    /// A distinguished interior point (starting point of solvers).
    fn center(&self) -> DVector<f64>;
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: DVector<f64>,
    radius: f64,
}

impl Ball {
    pub fn new(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidArgument(format!("ball radius {radius}")));
        }
        ensure_finite(&center)?;
        if center.is_empty() {
            return Err(Error::InvalidArgument("ball dimension must be positive".into()));
        }
        Ok(Self { center, radius })
    }

    pub fn unit(n: usize) -> Self {
        Self {
            center: DVector::zeros(n),
            radius: 1.0,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Distance from `z` to the set (zero inside).
    pub fn distance(&self, z: &DVector<f64>) -> f64 {
        ((z - &self.center).norm() - self.radius).max(0.0)
    }

    pub fn check_member(&self, z: &DVector<f64>) -> Result<()> {
        ensure_dim(self.dim(), z.len())?;
        ensure_finite(z)?;
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::OutsideSet {
                distance: self.distance(z),
            })
        }
    }
}

impl ConvexCompactSet for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        let d = z - &self.center;
        let norm = d.norm();
        if norm <= self.radius {
            z.clone()
        } else {
            &self.center + d * (self.radius / norm)
        }
    }

    fn contains(&self, z: &DVector<f64>) -> bool {
        z.len() == self.dim() && (z - &self.center).norm() <= self.radius + MEMBERSHIP_TOL
    }

    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    /// Normalized Gaussian direction times `radius·U^(1/n)`.
    fn sample(&self, rng: &mut dyn RngCore) -> DVector<f64> {
        let n = self.dim();
        let u: f64 = rng.random();
        let r = self.radius * u.powf(1.0 / n as f64);
        &self.center + unit_sphere(n, rng) * r
    }

    fn center(&self) -> DVector<f64> {
        self.center.clone()
    }
}

/// Projection of `z` onto the ball of the given `radius` around `center`.
pub fn project_ball(radius: f64, center: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    ensure_dim(center.len(), z.len())?;
    ensure_finite(z)?;
    ensure_finite(center)?;
    let d = z - center;
    let norm = d.norm();
    Ok(if norm <= radius {
        z.clone()
    } else {
        center + d * (radius / norm)
    })
}
