//! Vector fields on R^n and the two monotonicity-preserving combinators:
//! affine substitution of the argument and weighted averaging.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dim, Error, Result};

/// A deterministic map R^dim → R^dim.
///
/// `jacobian` is optional. Fields built from links with known derivatives
/// provide it, which enables the Jacobian-eigenvalue modulus estimate.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, z: &DVector<f64>) -> DVector<f64>;

    fn jacobian(&self, _z: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        (**self).eval(z)
    }
    fn jacobian(&self, z: &DVector<f64>) -> Option<DMatrix<f64>> {
        (**self).jacobian(z)
    }
}

impl<T: VectorField + ?Sized> VectorField for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        (**self).eval(z)
    }
    fn jacobian(&self, z: &DVector<f64>) -> Option<DMatrix<f64>> {
        (**self).jacobian(z)
    }
}

type JacFn = Box<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// A field given by a closure.
pub struct FnField<F> {
    dim: usize,
    f: F,
    jac: Option<JacFn>,
}

impl<F> FnField<F>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, jac: None }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jac = Some(Box::new(jac));
        self
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        (self.f)(z)
    }
    fn jacobian(&self, z: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.jac.as_ref().map(|j| j(z))
    }
}

/// The affine field `z ↦ Q z - b`.
#[derive(Debug, Clone)]
pub struct AffineField {
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineField {
    pub fn new(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidArgument("affine field matrix must be square".into()));
        }
        ensure_dim(matrix.nrows(), offset.len())?;
        Ok(Self { matrix, offset })
    }

    /// The identity shifted by `c`: `z ↦ z - c`.
    pub fn shifted_identity(c: DVector<f64>) -> Self {
        let n = c.len();
        Self {
            matrix: DMatrix::identity(n, n),
            offset: c,
        }
    }
}

impl VectorField for AffineField {
    fn dim(&self) -> usize {
        self.offset.len()
    }
    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.matrix * z - &self.offset
    }
    fn jacobian(&self, _z: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(self.matrix.clone())
    }
}

/// `x ↦ A·f(Aᵀx + a)` for an `n×m` matrix `A` and a field `f` on R^m.
pub struct AffineSubstitution<F> {
    inner: F,
    matrix: DMatrix<f64>,
    shift: DVector<f64>,
}

/// Builds `x ↦ A·f(Aᵀx + a)`. Monotone whenever `f` is; the modulus on `X`
/// is at least `σ_min(A)²` times the modulus of `f` on `AᵀX + a`.
pub fn affine_substitution<F: VectorField>(
    f: F,
    matrix: DMatrix<f64>,
    shift: DVector<f64>,
) -> Result<AffineSubstitution<F>> {
    ensure_dim(f.dim(), matrix.ncols())?;
    ensure_dim(f.dim(), shift.len())?;
    Ok(AffineSubstitution {
        inner: f,
        matrix,
        shift,
    })
}

impl<F: VectorField> VectorField for AffineSubstitution<F> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let u = self.matrix.tr_mul(x) + &self.shift;
        &self.matrix * self.inner.eval(&u)
    }

    fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let u = self.matrix.tr_mul(x) + &self.shift;
        let inner = self.inner.jacobian(&u)?;
        Some(&self.matrix * inner * self.matrix.transpose())
    }
}

/// Weighted average of fields sharing one dimension.
pub struct AverageField<F> {
    fields: Vec<F>,
    weights: Vec<f64>,
}

/// `Σ_i w_i f_i`. Weights must be nonnegative and sum to one within 1e-12.
pub fn average_field<F: VectorField>(fields: Vec<F>, weights: Vec<f64>) -> Result<AverageField<F>> {
    if fields.is_empty() {
        return Err(Error::Empty("field list"));
    }
    ensure_dim(fields.len(), weights.len())?;
    let dim = fields[0].dim();
    for f in &fields {
        ensure_dim(dim, f.dim())?;
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "weights must sum to 1 (got {total})"
        )));
    }
    Ok(AverageField { fields, weights })
}

/// Uniform weights over `fields`.
pub fn uniform_average<F: VectorField>(fields: Vec<F>) -> Result<AverageField<F>> {
    let k = fields.len();
    if k == 0 {
        return Err(Error::Empty("field list"));
    }
    let w = 1.0 / k as f64;
    let mut weights = vec![w; k];
    // absorb rounding so the sum check is exact
    let rest: f64 = weights[..k - 1].iter().sum();
    weights[k - 1] = 1.0 - rest;
    average_field(fields, weights)
}

impl<F: VectorField> VectorField for AverageField<F> {
    fn dim(&self) -> usize {
        self.fields[0].dim()
    }

    fn eval(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut acc = DVector::zeros(self.dim());
        for (f, &w) in self.fields.iter().zip(&self.weights) {
            acc.axpy(w, &f.eval(z), 1.0);
        }
        acc
    }

    fn jacobian(&self, z: &DVector<f64>) -> Option<DMatrix<f64>> {
        let n = self.dim();
        let mut acc = DMatrix::zeros(n, n);
        for (f, &w) in self.fields.iter().zip(&self.weights) {
            acc += f.jacobian(z)? * w;
        }
        Some(acc)
    }
}
