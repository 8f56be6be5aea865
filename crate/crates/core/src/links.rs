//! Scalar link functions, their diagonal lifts, and the radial profile of the
//! population field under standard normal regressors.
//!
//! With `η ~ N(0, I_n)` the field `F(z) = E{η f(ηᵀz)}` is radial:
//! `F(z) = h(‖z‖)·z/‖z‖` with `h(t) = E{ζ f(tζ)}`, `ζ ~ N(0,1)`. The Jacobian
//! of a radial field has eigenvalue `h'(r)` along `z` and `h(r)/r` across it,
//! so its modulus on the ball of radius `R` is `min_{r ≤ R} min(h'(r), h(r)/r)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::{expect_normal_adaptive, NormalRule};
use crate::vi::VectorField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarLink {
    /// `1/(1+e^{-s})`
    Logistic,
    /// `s`
    Linear,
    /// `max(s, 0)`
    Hinge,
    /// `min(1, max(s, 0))`
    Ramp,
    /// `arctan(s)`
    Arctan,
}

impl ScalarLink {
    pub const ALL: [ScalarLink; 5] = [
        ScalarLink::Logistic,
        ScalarLink::Linear,
        ScalarLink::Hinge,
        ScalarLink::Ramp,
        ScalarLink::Arctan,
    ];

    /// The four GLM cases A-D, in order.
    pub const GLM_CASES: [ScalarLink; 4] = [
        ScalarLink::Logistic,
        ScalarLink::Linear,
        ScalarLink::Hinge,
        ScalarLink::Ramp,
    ];

    #[inline]
    pub fn eval(self, s: f64) -> f64 {
        match self {
            ScalarLink::Logistic => {
                if s >= 0.0 {
                    1.0 / (1.0 + (-s).exp())
                } else {
                    let e = s.exp();
                    e / (1.0 + e)
                }
            }
            ScalarLink::Linear => s,
            ScalarLink::Hinge => s.max(0.0),
            ScalarLink::Ramp => s.clamp(0.0, 1.0),
            ScalarLink::Arctan => s.atan(),
        }
    }

    /// Derivative (right-continuous choice at kinks is irrelevant a.e.; the
    /// value at a kink is 0).
    #[inline]
    pub fn derivative(self, s: f64) -> f64 {
        match self {
            ScalarLink::Logistic => {
                let f = self.eval(s);
                f * (1.0 - f)
            }
            ScalarLink::Linear => 1.0,
            ScalarLink::Hinge => {
                if s > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarLink::Ramp => {
                if s > 0.0 && s < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarLink::Arctan => 1.0 / (1.0 + s * s),
        }
    }

    /// Points where the link is not differentiable.
    pub fn kinks(self) -> &'static [f64] {
        match self {
            ScalarLink::Hinge => &[0.0],
            ScalarLink::Ramp => &[0.0, 1.0],
            _ => &[],
        }
    }

    /// Whether the link maps into `[0, 1]`, as a Bernoulli mean must.
    pub fn is_probability(self) -> bool {
        matches!(self, ScalarLink::Logistic | ScalarLink::Ramp)
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarLink::Logistic => "logistic",
            ScalarLink::Linear => "linear",
            ScalarLink::Hinge => "hinge",
            ScalarLink::Ramp => "ramp",
            ScalarLink::Arctan => "arctan",
        }
    }

    /// Lipschitz constant of the link on R.
    pub fn max_derivative(self) -> f64 {
        match self {
            ScalarLink::Logistic => 0.25,
            _ => 1.0,
        }
    }

    /// Smallest derivative over `[-bound, bound]`.
    pub fn min_derivative_on(self, bound: f64) -> f64 {
        let b = bound.abs();
        match self {
            ScalarLink::Logistic => self.derivative(b),
            ScalarLink::Linear => 1.0,
            ScalarLink::Hinge | ScalarLink::Ramp => 0.0,
            ScalarLink::Arctan => self.derivative(b),
        }
    }
}

impl fmt::Display for ScalarLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalarLink {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" | "a" => Ok(ScalarLink::Logistic),
            "linear" | "b" => Ok(ScalarLink::Linear),
            "hinge" | "c" => Ok(ScalarLink::Hinge),
            "ramp" | "d" => Ok(ScalarLink::Ramp),
            "arctan" => Ok(ScalarLink::Arctan),
            other => Err(Error::Config(format!("unknown link '{other}'"))),
        }
    }
}

pub fn eval_link(kind: ScalarLink, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(kind.eval(s))
}

/// Elementwise lift of a scalar link to R^m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalField {
    pub link: ScalarLink,
    pub dim: usize,
}

pub fn diagonal_field(link: ScalarLink, m: usize) -> Result<DiagonalField> {
    if m == 0 {
        return Err(Error::InvalidArgument("diagonal field dimension must be positive".into()));
    }
    Ok(DiagonalField { link, dim: m })
}

impl VectorField for DiagonalField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, u: &DVector<f64>) -> DVector<f64> {
        u.map(|s| self.link.eval(s))
    }
    fn jacobian(&self, u: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_diagonal(&u.map(|s| self.link.derivative(s))))
    }
}

/// `h(t) = E{ζ f(tζ)}` evaluated by quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub link: ScalarLink,
    /// `None` selects the kink-aware composite rule.
    pub hermite_nodes: Option<usize>,
}

impl RadialProfile {
    pub fn new(link: ScalarLink) -> Self {
        Self {
            link,
            hermite_nodes: None,
        }
    }

    /// Plain Gauss-Hermite with the given starting node count (doubled while
    /// successive counts disagree by more than 1e-8, up to 512).
    pub fn hermite(link: ScalarLink, nodes: usize) -> Self {
        Self {
            link,
            hermite_nodes: Some(nodes),
        }
    }

    /// `h(t)` for `t ≥ 0`; extended to `t < 0` as an odd function.
    pub fn h(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        if t < 0.0 {
            return -self.h(-t);
        }
        let link = self.link;
        let integrand = |z: f64| z * link.eval(t * z);
        match self.hermite_nodes {
            Some(nodes) => {
                expect_normal_adaptive(integrand, &[], NormalRule::Hermite { nodes }, 1e-8, 512)
            }
            None => {
                let breaks: Vec<f64> = link.kinks().iter().map(|k| k / t).collect();
                let rule = NormalRule::composite(0.5 / t.max(1.0));
                expect_normal_adaptive(integrand, &breaks, rule, 1e-8, 256)
            }
        }
    }

    /// Central difference of `h` with step `1e-4·max(1, r)`.
    pub fn h_prime(&self, r: f64) -> f64 {
        let e = 1e-4 * r.abs().max(1.0);
        (self.h(r + e) - self.h(r - e)) / (2.0 * e)
    }

    /// `min(h'(r), h(r)/r)` over a log-spaced grid of `grid_size` points on
    /// `[1e-3·R, R]`.
    pub fn modulus(&self, radius: f64, grid_size: usize) -> Result<f64> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if grid_size < 16 {
            return Err(Error::InvalidArgument("modulus grid needs at least 16 points".into()));
        }
        let lo = (1e-3 * radius).ln();
        let hi = radius.ln();
        let mut best = f64::INFINITY;
        for i in 0..grid_size {
            let r = (lo + (hi - lo) * i as f64 / (grid_size - 1) as f64).exp();
            best = best.min(self.h_prime(r)).min(self.h(r) / r);
        }
        Ok(best)
    }

    /// The radial field value `h(‖z‖)·z/‖z‖` (zero at the origin).
    pub fn field(&self, z: &DVector<f64>) -> DVector<f64> {
        let r = z.norm();
        if r == 0.0 {
            return DVector::zeros(z.len());
        }
        z * (self.h(r) / r)
    }
}

pub fn h_profile(link: ScalarLink, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("h is defined for t ≥ 0, got {t}")));
    }
    Ok(RadialProfile::new(link).h(t))
}

pub const DEFAULT_MODULUS_GRID: usize = 128;

pub fn modulus_profile(link: ScalarLink, radius: f64, grid_size: usize) -> Result<f64> {
    RadialProfile::new(link).modulus(radius, grid_size)
}

/// The population field `F(z) = h(‖z‖)·z/‖z‖` as a [`VectorField`].
#[derive(Debug, Clone, Copy)]
pub struct RadialField {
    pub profile: RadialProfile,
    pub dim: usize,
}

impl VectorField for RadialField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        self.profile.field(z)
    }
}
