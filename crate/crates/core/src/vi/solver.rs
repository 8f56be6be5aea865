//! Deterministic solver for strongly monotone variational inequalities on a
//! convex compact set, and weak/strong residual certificates.

use nalgebra::DVector;

use crate::error::{ensure_dim, Error, Result};
use crate::vi::{ConvexCompactSet, VectorField};

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `γ_k = γ`.
    Constant(f64),
    /// `γ_k = c / k`.
    Diminishing(f64),
}

impl StepRule {
    pub fn step(&self, k: usize) -> f64 {
        match *self {
            StepRule::Constant(g) => g,
            StepRule::Diminishing(c) => c / k as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ViSolution {
    pub point: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Last `‖z_k - z_{k-1}‖ / γ_k`.
    pub residual: f64,
    pub rule: StepRule,
}

/// `z_k = Proj(z_{k-1} - γ_k g(z_{k-1}))` until `‖z_k - z_{k-1}‖/γ_k ≤ tol`.
pub fn projected_field_iteration<G, S>(
    g: &G,
    set: &S,
    start: DVector<f64>,
    rule: StepRule,
    tol: f64,
    max_iters: usize,
) -> ViSolution
where
    G: VectorField + ?Sized,
    S: ConvexCompactSet + ?Sized,
{
    let mut z = set.project(&start);
    let mut residual = f64::INFINITY;
    for k in 1..=max_iters {
        let gamma = rule.step(k);
        let next = set.project(&(&z - g.eval(&z) * gamma));
        if !next.iter().all(|v| v.is_finite()) {
            return ViSolution {
                point: z,
                iterations: k,
                converged: false,
                residual: f64::INFINITY,
                rule,
            };
        }
        residual = (&next - &z).norm() / gamma;
        z = next;
        if residual <= tol {
            return ViSolution {
                point: z,
                iterations: k,
                converged: true,
                residual,
                rule,
            };
        }
    }
    ViSolution {
        point: z,
        iterations: max_iters,
        converged: false,
        residual,
        rule,
    }
}

/// Constant step `κ/L²` from the set's center. `κ` is capped at `L` so the
/// step never exceeds `1/L`.
pub fn solve_strongly_monotone_vi<G, S>(
    g: &G,
    set: &S,
    kappa: f64,
    lipschitz_hint: f64,
    tol: f64,
    max_iters: usize,
) -> Result<ViSolution>
where
    G: VectorField + ?Sized,
    S: ConvexCompactSet + ?Sized,
{
    solve_strongly_monotone_vi_from(g, set, kappa, lipschitz_hint, tol, max_iters, set.center())
}

pub fn solve_strongly_monotone_vi_from<G, S>(
    g: &G,
    set: &S,
    kappa: f64,
    lipschitz_hint: f64,
    tol: f64,
    max_iters: usize,
    start: DVector<f64>,
) -> Result<ViSolution>
where
    G: VectorField + ?Sized,
    S: ConvexCompactSet + ?Sized,
{
    ensure_dim(set.dim(), g.dim())?;
    ensure_dim(set.dim(), start.len())?;
    if !(kappa > 0.0 && lipschitz_hint > 0.0 && tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kappa, lipschitz hint and tol must be positive (got {kappa}, {lipschitz_hint}, {tol})"
        )));
    }
    let kappa = kappa.min(lipschitz_hint);
    let gamma = kappa / (lipschitz_hint * lipschitz_hint);
    Ok(projected_field_iteration(
        g,
        set,
        start,
        StepRule::Constant(gamma),
        tol,
        max_iters,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViResidual {
    /// `max_z -g(z)ᵀ(z - z̄)`; nonpositive when no probe witnesses a violation.
    pub weak: f64,
    /// `max_z -g(z̄)ᵀ(z - z̄)`.
    pub strong: f64,
}

pub fn weak_solution_residual<G, S>(
    g: &G,
    set: &S,
    candidate: &DVector<f64>,
    probes: &[DVector<f64>],
) -> Result<ViResidual>
where
    G: VectorField + ?Sized,
    S: ConvexCompactSet + ?Sized,
{
    if probes.is_empty() {
        return Err(Error::Empty("probe list"));
    }
    ensure_dim(set.dim(), candidate.len())?;
    if !set.contains(candidate) {
        return Err(Error::OutsideSet { distance: f64::NAN });
    }
    let g_bar = g.eval(candidate);
    let mut weak = f64::NEG_INFINITY;
    let mut strong = f64::NEG_INFINITY;
    for z in probes {
        ensure_dim(set.dim(), z.len())?;
        if !set.contains(z) {
            return Err(Error::OutsideSet { distance: f64::NAN });
        }
        let d = z - candidate;
        weak = weak.max(-g.eval(z).dot(&d));
        strong = strong.max(-g_bar.dot(&d));
    }
    Ok(ViResidual { weak, strong })
}
