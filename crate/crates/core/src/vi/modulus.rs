//! Empirical monotonicity moduli and Lipschitz constants.
//!
//! Two estimators of the modulus `κ` on a set are provided:
//!
//! * [`estimate_modulus`] samples point pairs and takes the smallest ratio
//!   `⟨g(z)-g(z'), z-z'⟩ / ‖z-z'‖²`. Every field works, but long random
//!   segments average the local behaviour, so the value is an optimistic
//!   estimate of the infimum.
//! * [`jacobian_modulus`] samples points and takes the smallest eigenvalue of
//!   the symmetric part of the Jacobian, the pointwise form of
//!   `dᵀg'(z)d ≥ κ dᵀd`. It needs a field that exposes its Jacobian and is
//!   much closer to the infimum.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::RngCore;

use crate::error::{ensure_dim, Error, Result};
use crate::vi::{ConvexCompactSet, VectorField};

#[derive(Debug, Clone)]
pub struct MonotonicityEstimate {
    pub modulus_lower: f64,
    pub pair_count: usize,
    pub worst_pair: (DVector<f64>, DVector<f64>),
}

/// Ratio `⟨g(z)-g(z'), z-z'⟩ / ‖z-z'‖²`, or `None` for coincident points.
pub fn pair_ratio<G: VectorField + ?Sized>(g: &G, z: &DVector<f64>, w: &DVector<f64>) -> Option<f64> {
    let d = z - w;
    let dd = d.norm_squared();
    if dd == 0.0 {
        return None;
    }
    Some((g.eval(z) - g.eval(w)).dot(&d) / dd)
}

fn check_set<G, S>(g: &G, set: &S) -> Result<()>
where
    G: VectorField + ?Sized,
    S: ConvexCompactSet + ?Sized,
{
    ensure_dim(set.dim(), g.dim())?;
    if set.diameter() <= 0.0 {
        return Err(Error::DegenerateSet);
    }
    Ok(())
}

/// Smallest pair ratio over `num_pairs` uniformly drawn pairs.
pub fn estimate_modulus<G, S>(
    g: &G,
    set: &S,
    num_pairs: usize,
    rng: &mut dyn RngCore,
) -> Result<MonotonicityEstimate>
where
    G: VectorField + ?Sized,
    S: ConvexCompactSet + ?Sized,
{
    if num_pairs == 0 {
        return Err(Error::InvalidArgument("num_pairs must be at least 1".into()));
    }
    check_set(g, set)?;
    let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
    let mut count = 0;
    while count < num_pairs {
        let z = set.sample(rng);
        let w = set.sample(rng);
        let Some(r) = pair_ratio(g, &z, &w) else {
            continue;
        };
        count += 1;
        if best.as_ref().is_none_or(|b| r < b.0) {
            best = Some((r, z, w));
        }
    }
    let (modulus_lower, z, w) = best.expect("at least one pair");
    Ok(MonotonicityEstimate {
        modulus_lower,
        pair_count: count,
        worst_pair: (z, w),
    })
}

/// Smallest eigenvalue of `(J + Jᵀ)/2`.
pub fn min_symmetric_eigenvalue(j: &DMatrix<f64>) -> f64 {
    let sym = (j + j.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

#[derive(Debug, Clone)]
pub struct JacobianModulus {
    pub modulus_lower: f64,
    pub point_count: usize,
    pub worst_point: DVector<f64>,
}

/// Smallest symmetric-Jacobian eigenvalue over `num_points` uniform points of
/// the set, plus the set's center.
pub fn jacobian_modulus<G, S>(
    g: &G,
    set: &S,
    num_points: usize,
    rng: &mut dyn RngCore,
) -> Result<JacobianModulus>
where
    G: VectorField + ?Sized,
    S: ConvexCompactSet + ?Sized,
{
    check_set(g, set)?;
    let mut worst_point = set.center();
    let mut best = min_symmetric_eigenvalue(&g.jacobian(&worst_point).ok_or(Error::NoJacobian)?);
    for _ in 0..num_points {
        let z = set.sample(rng);
        let j = g.jacobian(&z).ok_or(Error::NoJacobian)?;
        let lam = min_symmetric_eigenvalue(&j);
        if lam < best {
            best = lam;
            worst_point = z;
        }
    }
    Ok(JacobianModulus {
        modulus_lower: best,
        point_count: num_points + 1,
        worst_point,
    })
}

/// Largest `‖g(z)-g(z')‖ / ‖z-z'‖` over `num_pairs` uniform pairs (no
/// safety factor applied).
pub fn estimate_lipschitz<G, S>(g: &G, set: &S, num_pairs: usize, rng: &mut dyn RngCore) -> Result<f64>
where
    G: VectorField + ?Sized,
    S: ConvexCompactSet + ?Sized,
{
    check_set(g, set)?;
    let mut best = 0.0f64;
    let mut count = 0;
    while count < num_pairs {
        let z = set.sample(rng);
        let w = set.sample(rng);
        let d = (&z - &w).norm();
        if d == 0.0 {
            continue;
        }
        count += 1;
        best = best.max((g.eval(&z) - g.eval(&w)).norm() / d);
    }
    Ok(best)
}

/// Lipschitz hint used by the solvers: 200 sampled pairs, inflated by 1.5.
pub fn lipschitz_hint<G, S>(g: &G, set: &S, rng: &mut dyn RngCore) -> Result<f64>
where
    G: VectorField + ?Sized,
    S: ConvexCompactSet + ?Sized,
{
    Ok(1.5 * estimate_lipschitz(g, set, 200, rng)?)
}
