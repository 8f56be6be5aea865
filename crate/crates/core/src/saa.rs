//! Sample average approximation: the weak solution of `VI(G_ωK, X)` with the
//! empirical field `G_ωK(z) = (1/K) Σ_k [η_k f(η_kᵀz) - η_k y_k]`.
//!
//! For the logistic link `G_ωK` is the gradient of the average negative
//! log-likelihood, so the SAA estimate is the constrained ML estimate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::RngCore;

use crate::error::{ensure_dim, Error, Result};
use crate::glm::Observation;
use crate::links::ScalarLink;
use crate::vi::{
    estimate_modulus, projected_field_iteration, solve_strongly_monotone_vi, ConvexCompactSet, StepRule,
    VectorField, DEFAULT_TOL,
};

/// The empirical field, with the `K` regressors stacked column-wise into one
/// `n × Km` matrix.
#[derive(Debug, Clone)]
pub struct EmpiricalField {
    pub link: ScalarLink,
    eta: DMatrix<f64>,
    y: DVector<f64>,
    count: usize,
}

pub fn empirical_field(observations: &[Observation], link: ScalarLink) -> Result<EmpiricalField> {
    let first = observations.first().ok_or(Error::Empty("observation list"))?;
    let (n, m) = (first.n(), first.m());
    for o in observations {
        ensure_dim(n, o.n())?;
        ensure_dim(m, o.m())?;
    }
    let k = observations.len();
    let mut eta = DMatrix::zeros(n, k * m);
    let mut y = DVector::zeros(k * m);
    for (i, o) in observations.iter().enumerate() {
        eta.columns_mut(i * m, m).copy_from(&o.eta);
        y.rows_mut(i * m, m).copy_from(&o.y);
    }
    Ok(EmpiricalField {
        link,
        eta,
        y,
        count: k,
    })
}

impl EmpiricalField {
    /// Number of observations `K`.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// `(1/K) η ηᵀ` over all stacked columns.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.eta * self.eta.transpose() / self.count as f64
    }

    /// `sup f' · λ_max((1/K) η ηᵀ)`, a global Lipschitz constant.
    pub fn lipschitz_bound(&self) -> f64 {
        let top = SymmetricEigen::new(self.gram()).eigenvalues.max().max(0.0);
        self.link.max_derivative() * top
    }
}

impl VectorField for EmpiricalField {
    fn dim(&self) -> usize {
        self.eta.nrows()
    }

    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        let residual = self.eta.tr_mul(z).map(|s| self.link.eval(s)) - &self.y;
        &self.eta * residual / self.count as f64
    }

    fn jacobian(&self, z: &DVector<f64>) -> Option<DMatrix<f64>> {
        let d = self.eta.tr_mul(z).map(|s| self.link.derivative(s));
        let mut scaled = self.eta.clone();
        for (mut col, w) in scaled.column_iter_mut().zip(d.iter()) {
            col *= *w;
        }
        Some(scaled * self.eta.transpose() / self.count as f64)
    }
}

fn logistic_inputs(observations: &[Observation], z: &DVector<f64>) -> Result<()> {
    if observations.is_empty() {
        return Err(Error::Empty("observation list"));
    }
    for o in observations {
        if o.m() != 1 {
            return Err(Error::InvalidArgument("logistic likelihood needs scalar labels".into()));
        }
        ensure_dim(z.len(), o.n())?;
        if o.y[0] != 0.0 && o.y[0] != 1.0 {
            return Err(Error::InvalidArgument(format!("label {} is not binary", o.y[0])));
        }
    }
    Ok(())
}

fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

/// `(1/K) Σ [ln(1 + e^{η_kᵀz}) - y_k η_kᵀz]`.
pub fn logistic_nll(observations: &[Observation], z: &DVector<f64>) -> Result<f64> {
    logistic_inputs(observations, z)?;
    let total: f64 = observations
        .iter()
        .map(|o| {
            let s = o.eta.column(0).dot(z);
            softplus(s) - o.y[0] * s
        })
        .sum();
    Ok(total / observations.len() as f64)
}

/// `(1/K) Σ [e^{s}/(1+e^{s}) - y_k] η_k` with `s = η_kᵀz`.
pub fn logistic_nll_gradient(observations: &[Observation], z: &DVector<f64>) -> Result<DVector<f64>> {
    logistic_inputs(observations, z)?;
    let mut grad = DVector::zeros(z.len());
    for o in observations {
        let col = o.eta.column(0);
        let s = col.dot(z);
        let p = (s - softplus(s)).exp();
        grad.axpy(p - o.y[0], &col, 1.0);
    }
    Ok(grad / observations.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaaOptions {
    /// Modulus used for the step size; estimated from pairs when `None`.
    pub kappa: Option<f64>,
    pub modulus_pairs: usize,
    /// Estimated moduli at or below this engage the diminishing-step fallback.
    pub modulus_floor: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SaaOptions {
    fn default() -> Self {
        Self {
            kappa: None,
            modulus_pairs: 500,
            modulus_floor: 1e-6,
            tol: DEFAULT_TOL,
            max_iters: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaaResult {
    pub point: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub kappa: f64,
    pub lipschitz: f64,
    /// The empirical field showed no usable strong monotonicity.
    pub degenerate: bool,
}

pub fn solve_saa<S>(
    observations: &[Observation],
    link: ScalarLink,
    set: &S,
    options: &SaaOptions,
    rng: &mut dyn RngCore,
) -> Result<SaaResult>
where
    S: ConvexCompactSet + ?Sized,
{
    let field = empirical_field(observations, link)?;
    solve_saa_field(&field, set, options, rng)
}

pub fn solve_saa_field<S>(
    field: &EmpiricalField,
    set: &S,
    options: &SaaOptions,
    rng: &mut dyn RngCore,
) -> Result<SaaResult>
where
    S: ConvexCompactSet + ?Sized,
{
    ensure_dim(set.dim(), field.dim())?;
    let lipschitz = field.lipschitz_bound();
    if lipschitz == 0.0 {
        return Ok(SaaResult {
            point: set.center(),
            converged: true,
            iterations: 0,
            residual: field.eval(&set.center()).norm(),
            kappa: 0.0,
            lipschitz,
            degenerate: true,
        });
    }
    let kappa = match options.kappa {
        Some(k) => k,
        None => estimate_modulus(field, set, options.modulus_pairs, rng)?.modulus_lower,
    };
    if kappa <= options.modulus_floor {
        let sol = projected_field_iteration(
            field,
            set,
            set.center(),
            StepRule::Diminishing(1.0 / lipschitz),
            options.tol,
            options.max_iters,
        );
        return Ok(SaaResult {
            point: sol.point,
            converged: sol.converged,
            iterations: sol.iterations,
            residual: sol.residual,
            kappa,
            lipschitz,
            degenerate: true,
        });
    }
    let sol = solve_strongly_monotone_vi(field, set, kappa, lipschitz, options.tol, options.max_iters)?;
    Ok(SaaResult {
        point: sol.point,
        converged: sol.converged,
        iterations: sol.iterations,
        residual: sol.residual,
        kappa,
        lipschitz,
        degenerate: false,
    })
}
