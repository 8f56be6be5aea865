//! The observation model: standard normal regressors `η ∈ R^{n×m}`, labels
//! with conditional mean `f(ηᵀx)`, and the stochastic field oracle
//! `G_(η,y)(z) = η f(ηᵀz) - η y`, an unbiased sample of `F(z) - F(x)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::links::{RadialProfile, ScalarLink};
use crate::rng::{normal_matrix, unit_sphere};
use crate::vi::{Ball, ConvexCompactSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressorLaw {
    /// i.i.d. N(0,1) entries.
    StdNormalMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelLaw {
    /// Each label coordinate is 1 with probability `f(ηᵀx)`, else 0.
    Bernoulli,
    /// `y = f(ηᵀx) + σ·ξ`, `ξ ~ N(0, I_m)`.
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `n×m` regressor.
    pub eta: DMatrix<f64>,
    /// `m` labels.
    pub y: DVector<f64>,
}

impl Observation {
    pub fn new(eta: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        ensure_dim(eta.ncols(), y.len())?;
        if !eta.iter().chain(y.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { eta, y })
    }

    pub fn n(&self) -> usize {
        self.eta.nrows()
    }

    pub fn m(&self) -> usize {
        self.eta.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmModel {
    pub n: usize,
    pub m: usize,
    pub link: ScalarLink,
    pub regressor_law: RegressorLaw,
    pub label_law: LabelLaw,
}

/// Monte Carlo mean with per-coordinate standard errors.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub mean: DVector<f64>,
    pub std_error: DVector<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SecondMoment {
    /// Largest per-signal Monte Carlo mean of `‖ηy‖²`.
    pub max_mean: f64,
    /// Standard error of that mean.
    pub std_error: f64,
}

impl GlmModel {
    pub fn new(n: usize, m: usize, link: ScalarLink, label_law: LabelLaw) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        match label_law {
            LabelLaw::Bernoulli if !link.is_probability() => {
                return Err(Error::Config(format!(
                    "Bernoulli labels need a link with range in [0,1]; {link} is not"
                )))
            }
            LabelLaw::Gaussian { sigma } if !(sigma.is_finite() && sigma >= 0.0) => {
                return Err(Error::Config(format!("noise sigma must be ≥ 0, got {sigma}")))
            }
            _ => {}
        }
        Ok(Self {
            n,
            m,
            link,
            regressor_law: RegressorLaw::StdNormalMatrix,
            label_law,
        })
    }

    /// Scalar-label model of the experiments: Bernoulli labels for the
    /// logistic link, Gaussian labels with the given `sigma` otherwise.
    pub fn scalar(n: usize, link: ScalarLink, sigma: f64) -> Result<Self> {
        let law = if link == ScalarLink::Logistic {
            LabelLaw::Bernoulli
        } else {
            LabelLaw::Gaussian { sigma }
        };
        Self::new(n, 1, link, law)
    }

    /// The signal set: unit ball in R^n.
    pub fn signal_set(&self) -> Ball {
        Ball::unit(self.n)
    }

    pub fn sample_regressor(&self, rng: &mut dyn RngCore) -> DMatrix<f64> {
        match self.regressor_law {
            RegressorLaw::StdNormalMatrix => normal_matrix(self.n, self.m, rng),
        }
    }

    /// Labels drawn from the conditional law given `eta` under signal `x`.
    pub fn sample_labels(&self, eta: &DMatrix<f64>, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let mean = eta.tr_mul(x).map(|s| self.link.eval(s));
        match self.label_law {
            LabelLaw::Bernoulli => mean.map(|p| {
                let u: f64 = rng.random();
                if u < p {
                    1.0
                } else {
                    0.0
                }
            }),
            LabelLaw::Gaussian { sigma } => mean.map(|mu| {
                let xi: f64 = rng.sample(StandardNormal);
                mu + sigma * xi
            }),
        }
    }

    pub fn sample_observation(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> Result<Observation> {
        ensure_dim(self.n, x.len())?;
        ensure_finite(x)?;
        let eta = self.sample_regressor(rng);
        let y = self.sample_labels(&eta, x, rng);
        Ok(Observation { eta, y })
    }

    pub fn sample_observations(
        &self,
        x: &DVector<f64>,
        count: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Observation>> {
        (0..count).map(|_| self.sample_observation(x, rng)).collect()
    }

    /// `G_(η,y)(z) = η f(ηᵀz) - η y`.
    pub fn stochastic_field_sample(&self, obs: &Observation, z: &DVector<f64>) -> DVector<f64> {
        stochastic_field_sample(self.link, obs, z)
    }

    /// Exact population field `F(z) = m·h(‖z‖)·z/‖z‖` for standard normal
    /// regressors.
    pub fn population_field(&self, z: &DVector<f64>) -> DVector<f64> {
        RadialProfile::new(self.link).field(z) * self.m as f64
    }

    /// Monte Carlo estimate of `F(z) = E{η f(ηᵀz)}`.
    pub fn expected_field(&self, z: &DVector<f64>, num_samples: usize, rng: &mut dyn RngCore) -> Result<McEstimate> {
        ensure_dim(self.n, z.len())?;
        if num_samples == 0 {
            return Err(Error::InvalidArgument("num_samples must be at least 1".into()));
        }
        Ok(mc_mean(self.n, num_samples, || {
            let eta = self.sample_regressor(rng);
            &eta * eta.tr_mul(z).map(|s| self.link.eval(s))
        }))
    }

    /// Monte Carlo mean and standard error of `‖ηy‖²` under signal `x`.
    pub fn signal_second_moment(&self, x: &DVector<f64>, samples: usize, rng: &mut dyn RngCore) -> (f64, f64) {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..samples {
            let eta = self.sample_regressor(rng);
            let y = self.sample_labels(&eta, x, rng);
            let v = (&eta * y).norm_squared();
            sum += v;
            sum_sq += v * v;
        }
        let k = samples as f64;
        let mean = sum / k;
        let var = if samples > 1 {
            ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, (var / k).sqrt())
    }

    /// Largest per-signal second moment over signals drawn on the boundary
    /// sphere of `set`.
    pub fn second_moment_bound(
        &self,
        set: &Ball,
        num_signals: usize,
        samples_per_signal: usize,
        rng: &mut dyn RngCore,
    ) -> Result<SecondMoment> {
        ensure_dim(self.n, set.dim())?;
        if num_signals == 0 || samples_per_signal == 0 {
            return Err(Error::InvalidArgument("sample counts must be at least 1".into()));
        }
        let mut best = SecondMoment {
            max_mean: f64::NEG_INFINITY,
            std_error: 0.0,
        };
        for _ in 0..num_signals {
            let x = set.center() + unit_sphere(self.n, rng) * set.radius();
            let (mean, se) = self.signal_second_moment(&x, samples_per_signal, rng);
            if mean > best.max_mean {
                best = SecondMoment {
                    max_mean: mean,
                    std_error: se,
                };
            }
        }
        Ok(best)
    }

    /// `M` with `E{‖ηy‖²} ≤ M²` on the set: square root of the largest
    /// sampled second moment, inflated by 1.2.
    pub fn estimate_m(
        &self,
        set: &Ball,
        num_signals: usize,
        samples_per_signal: usize,
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let b = self.second_moment_bound(set, num_signals, samples_per_signal, rng)?;
        Ok(1.2 * b.max_mean.sqrt())
    }
}

/// `G_(η,y)(z) = η (f(ηᵀz) - y)`.
pub fn stochastic_field_sample(link: ScalarLink, obs: &Observation, z: &DVector<f64>) -> DVector<f64> {
    let residual = obs.eta.tr_mul(z).map(|s| link.eval(s)) - &obs.y;
    &obs.eta * residual
}

/// A uniform point on the unit sphere of R^n.
pub fn draw_signal_on_sphere(n: usize, rng: &mut dyn RngCore) -> DVector<f64> {
    unit_sphere(n, rng)
}

pub(crate) fn mc_mean(dim: usize, samples: usize, mut draw: impl FnMut() -> DVector<f64>) -> McEstimate {
    let mut sum = DVector::zeros(dim);
    let mut sum_sq = DVector::zeros(dim);
    for _ in 0..samples {
        let v = draw();
        sum_sq += v.component_mul(&v);
        sum += v;
    }
    let k = samples as f64;
    let mean = sum / k;
    let std_error = if samples > 1 {
        DVector::from_fn(dim, |i, _| {
            (((sum_sq[i] - k * mean[i] * mean[i]) / (k - 1.0)).max(0.0) / k).sqrt()
        })
    } else {
        DVector::zeros(dim)
    };
    McEstimate { mean, std_error }
}
