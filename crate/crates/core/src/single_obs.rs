//! Fixed-design estimation from one vector observation
//! `y = φ(ηᵀx) + λξ`, `η ∈ R^{n×K}` deterministic, `ξ ~ N(0, I_K)`.
//!
//! The estimate is the weak solution of `VI(G_y, X)` with
//! `G_y(z) = η φ(ηᵀz) - η y`. If `F(z) = η φ(ηᵀz)` is `κ`-strongly monotone
//! on `X`, then `‖x̂ - x‖ ≤ κ⁻¹ ‖η (y - φ(ηᵀx))‖` for every realization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::links::ScalarLink;
use crate::rng::normal_matrix;
use crate::vi::{jacobian_modulus, solve_strongly_monotone_vi, Ball, ConvexCompactSet, VectorField};

/// Points sampled (besides the center) for the Jacobian modulus.
pub const MODULUS_POINTS: usize = 64;

/// `n × K` matrix with i.i.d. N(0,1) entries.
pub fn gaussian_ensemble(n: usize, k: usize, rng: &mut dyn RngCore) -> Result<DMatrix<f64>> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument("ensemble dimensions must be positive".into()));
    }
    Ok(normal_matrix(n, k, rng))
}

#[derive(Debug, Clone)]
pub struct SingleObsModel {
    pub eta: DMatrix<f64>,
    pub link: ScalarLink,
    pub noise_sigma: f64,
}

impl SingleObsModel {
    pub fn new(eta: DMatrix<f64>, link: ScalarLink, noise_sigma: f64) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::InvalidArgument("empty regressor matrix".into()));
        }
        if !eta.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
            return Err(Error::Config(format!("noise level must be ≥ 0, got {noise_sigma}")));
        }
        Ok(Self { eta, link, noise_sigma })
    }

    pub fn n(&self) -> usize {
        self.eta.nrows()
    }

    pub fn k(&self) -> usize {
        self.eta.ncols()
    }

    /// `φ(ηᵀz)`.
    pub fn mean(&self, z: &DVector<f64>) -> DVector<f64> {
        self.eta.tr_mul(z).map(|s| self.link.eval(s))
    }

    /// `y = φ(ηᵀx) + λξ`.
    pub fn observe(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> Result<DVector<f64>> {
        ensure_dim(self.n(), x.len())?;
        ensure_finite(x)?;
        let xi = DVector::from_fn(self.k(), |_, _| rng.sample::<f64, _>(StandardNormal));
        Ok(self.mean(x) + xi * self.noise_sigma)
    }

    /// `G_y(z) = η φ(ηᵀz) - η y`.
    pub fn field(&self, y: &DVector<f64>) -> Result<SingleObsField<'_>> {
        ensure_dim(self.k(), y.len())?;
        ensure_finite(y)?;
        Ok(SingleObsField {
            model: self,
            eta_y: &self.eta * y,
        })
    }

    fn gram_eigenvalues(&self) -> DVector<f64> {
        SymmetricEigen::new(&self.eta * self.eta.transpose()).eigenvalues
    }

    /// `sup φ' · λ_max(ηηᵀ)`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.link.max_derivative() * self.gram_eigenvalues().max().max(0.0)
    }

    /// `κ_φ · λ_min(ηηᵀ)` with `κ_φ` the smallest link derivative over the
    /// arguments `ηᵀz`, `z ∈ set`, can reach. A guaranteed lower bound on the
    /// modulus of `F` on the set.
    pub fn certified_modulus(&self, set: &Ball) -> Result<f64> {
        ensure_dim(self.n(), set.dim())?;
        let reach = self
            .eta
            .column_iter()
            .map(|c| c.dot(&set.center()).abs() + c.norm() * set.radius())
            .fold(0.0, f64::max);
        let lam = self.gram_eigenvalues().min().max(0.0);
        Ok(self.link.min_derivative_on(reach) * lam)
    }
}

#[derive(Debug, Clone)]
pub struct SingleObsField<'a> {
    model: &'a SingleObsModel,
    eta_y: DVector<f64>,
}

impl VectorField for SingleObsField<'_> {
    fn dim(&self) -> usize {
        self.model.n()
    }

    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.model.eta * self.model.mean(z) - &self.eta_y
    }

    fn jacobian(&self, z: &DVector<f64>) -> Option<DMatrix<f64>> {
        let eta = &self.model.eta;
        let d = eta.tr_mul(z).map(|s| self.model.link.derivative(s));
        let mut scaled = eta.clone();
        for (mut col, w) in scaled.column_iter_mut().zip(d.iter()) {
            col *= *w;
        }
        Some(scaled * eta.transpose())
    }
}

#[derive(Debug, Clone)]
pub struct SingleObsResult {
    pub estimate: DVector<f64>,
    /// Jacobian-based modulus estimate, used for the step and the bound.
    pub kappa: f64,
    /// Guaranteed lower bound on the modulus.
    pub kappa_certified: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `‖η(y - φ(ηᵀx))‖` once the truth is attached.
    pub residual_norm: Option<f64>,
    /// `κ⁻¹ ‖η(y - φ(ηᵀx))‖` once the truth is attached.
    pub bound: Option<f64>,
}

impl SingleObsResult {
    pub fn with_truth(mut self, model: &SingleObsModel, x: &DVector<f64>, y: &DVector<f64>) -> Result<Self> {
        let r = noise_image_norm(model, x, y)?;
        self.residual_norm = Some(r);
        self.bound = Some(r / self.kappa);
        Ok(self)
    }
}

pub fn solve_single_obs(
    model: &SingleObsModel,
    y: &DVector<f64>,
    set: &Ball,
    tol: f64,
    max_iters: usize,
    rng: &mut dyn RngCore,
) -> Result<SingleObsResult> {
    let field = model.field(y)?;
    ensure_dim(set.dim(), model.n())?;
    let kappa = jacobian_modulus(&field, set, MODULUS_POINTS, rng)?.modulus_lower;
    if kappa <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "field is not strongly monotone on the set (modulus estimate {kappa})"
        )));
    }
    let kappa_certified = model.certified_modulus(set)?;
    let sol = solve_strongly_monotone_vi(&field, set, kappa, model.lipschitz_bound(), tol, max_iters)?;
    Ok(SingleObsResult {
        estimate: sol.point,
        kappa,
        kappa_certified,
        converged: sol.converged,
        iterations: sol.iterations,
        residual_norm: None,
        bound: None,
    })
}

fn noise_image_norm(model: &SingleObsModel, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    ensure_dim(model.n(), x.len())?;
    ensure_dim(model.k(), y.len())?;
    Ok((&model.eta * (y - model.mean(x))).norm())
}

/// `κ⁻¹ ‖η(y - φ(ηᵀx))‖`.
pub fn deterministic_error_bound(model: &SingleObsModel, x: &DVector<f64>, y: &DVector<f64>, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    Ok(noise_image_norm(model, x, y)? / kappa)
}
