//! Stochastic approximation: `z_k = Proj_X[z_{k-1} - γ_k G_(η_k,y_k)(z_{k-1})]`
//! with `γ_k = 1/(κ(k+1))`, whose iterates satisfy
//! `E‖z_k - x‖² ≤ 4M²/(κ²(k+1))`.

use nalgebra::DVector;
use rand::RngCore;

use crate::error::{ensure_dim, Error, Result};
use crate::glm::{stochastic_field_sample, GlmModel, Observation};
use crate::links::ScalarLink;
use crate::rng::unit_sphere;
use crate::vi::ConvexCompactSet;

#[derive(Debug, Clone, PartialEq)]
pub struct SaConfig {
    pub kappa: f64,
    pub z0: DVector<f64>,
    pub k: usize,
    pub record_trajectory: bool,
}

impl SaConfig {
    /// Starts at the origin, no trajectory.
    pub fn new(kappa: f64, n: usize, k: usize) -> Self {
        Self {
            kappa,
            z0: DVector::zeros(n),
            k,
            record_trajectory: false,
        }
    }

    pub fn with_trajectory(mut self) -> Self {
        self.record_trajectory = true;
        self
    }

    pub fn with_start(mut self, z0: DVector<f64>) -> Self {
        self.z0 = z0;
        self
    }

    fn validate<S: ConvexCompactSet + ?Sized>(&self, set: &S) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be positive, got {}", self.kappa)));
        }
        ensure_dim(set.dim(), self.z0.len())?;
        if !set.contains(&self.z0) {
            return Err(Error::OutsideSet {
                distance: (set.project(&self.z0) - &self.z0).norm(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SaRun {
    pub estimate: DVector<f64>,
    /// `z_0, z_1, ..., z_K` when requested.
    pub trajectory: Option<Vec<DVector<f64>>>,
    pub steps_taken: usize,
    pub seed: Option<u64>,
}

/// `γ_k = 1/(κ(k+1))`.
pub fn step_size(kappa: f64, k: usize) -> f64 {
    1.0 / (kappa * (k + 1) as f64)
}

/// `4M²/(κ²(k+1))`.
pub fn error_bound(m: f64, kappa: f64, k: usize) -> f64 {
    4.0 * m * m / (kappa * kappa * (k + 1) as f64)
}

/// One projected step from a point of the set.
pub fn sa_step<S>(z_prev: &DVector<f64>, gamma: f64, g_sample: &DVector<f64>, set: &S) -> Result<DVector<f64>>
where
    S: ConvexCompactSet + ?Sized,
{
    ensure_dim(set.dim(), z_prev.len())?;
    ensure_dim(set.dim(), g_sample.len())?;
    if !set.contains(z_prev) {
        return Err(Error::OutsideSet {
            distance: (set.project(z_prev) - z_prev).norm(),
        });
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {gamma}")));
    }
    Ok(set.project(&(z_prev - g_sample * gamma)))
}

fn run<S, I>(link: ScalarLink, set: &S, config: &SaConfig, observations: I) -> Result<SaRun>
where
    S: ConvexCompactSet + ?Sized,
    I: Iterator<Item = Result<Observation>>,
{
    config.validate(set)?;
    let mut z = config.z0.clone();
    let mut trajectory = config.record_trajectory.then(|| vec![z.clone()]);
    let mut steps = 0;
    for (k, obs) in observations.take(config.k).enumerate() {
        let obs = obs?;
        let g = stochastic_field_sample(link, &obs, &z);
        z = sa_step(&z, step_size(config.kappa, k + 1), &g, set)?;
        if let Some(t) = trajectory.as_mut() {
            t.push(z.clone());
        }
        steps += 1;
    }
    Ok(SaRun {
        estimate: z,
        trajectory,
        steps_taken: steps,
        seed: None,
    })
}

/// Synthetic mode: draws `K` fresh observations under `x_true`.
pub fn run_sa(model: &GlmModel, x_true: &DVector<f64>, config: &SaConfig, rng: &mut dyn RngCore) -> Result<SaRun> {
    let set = model.signal_set();
    ensure_dim(model.n, x_true.len())?;
    set.check_member(x_true)?;
    run(
        model.link,
        &set,
        config,
        (0..config.k).map(|_| model.sample_observation(x_true, rng)),
    )
}

/// Data mode: runs over the first `K` of the given observations.
pub fn run_sa_on_observations<S>(
    link: ScalarLink,
    set: &S,
    observations: &[Observation],
    config: &SaConfig,
) -> Result<SaRun>
where
    S: ConvexCompactSet + ?Sized,
{
    if observations.len() < config.k {
        return Err(Error::InvalidArgument(format!(
            "{} observations supplied for K = {}",
            observations.len(),
            config.k
        )));
    }
    run(link, set, config, observations.iter().cloned().map(Ok))
}

/// Nine log-spaced values on `[hint/8, 8·hint]`.
pub fn kappa_grid(hint: f64) -> Vec<f64> {
    (0..9).map(|i| hint * 8f64.powf((i as f64 - 4.0) / 4.0)).collect()
}

/// Picks the grid value with the best recovery of a synthetic training
/// signal whose labels are regenerated over the real regressors.
pub fn tune_kappa(
    model: &GlmModel,
    observations: &[Observation],
    grid: &[f64],
    rng: &mut dyn RngCore,
) -> Result<f64> {
    tune_kappa_averaged(model, observations, grid, 1, rng)
}

/// As [`tune_kappa`], averaging the recovery error over `training_signals`
/// independent training signals. Ties go to the smaller κ.
pub fn tune_kappa_averaged(
    model: &GlmModel,
    observations: &[Observation],
    grid: &[f64],
    training_signals: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Empty("kappa grid"));
    }
    if observations.is_empty() {
        return Err(Error::Empty("observation list"));
    }
    if training_signals == 0 {
        return Err(Error::InvalidArgument("training_signals must be at least 1".into()));
    }
    if grid.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
        return Err(Error::InvalidArgument("kappa grid values must be positive".into()));
    }
    let set = model.signal_set();
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut errors = vec![0.0; sorted.len()];
    for _ in 0..training_signals {
        let x = set.center() + unit_sphere(model.n, rng) * set.radius();
        let relabeled: Vec<Observation> = observations
            .iter()
            .map(|o| Observation {
                y: model.sample_labels(&o.eta, &x, rng),
                eta: o.eta.clone(),
            })
            .collect();
        for (err, &kappa) in errors.iter_mut().zip(&sorted) {
            let config = SaConfig::new(kappa, model.n, relabeled.len());
            let run = run_sa_on_observations(model.link, &set, &relabeled, &config)?;
            *err += (run.estimate - &x).norm();
        }
    }
    let mut best = 0;
    for i in 1..sorted.len() {
        if errors[i] < errors[best] {
            best = i;
        }
    }
    Ok(sorted[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::LabelLaw;
    use crate::rng::seeded;
    use crate::vi::Ball;
    use approx::assert_relative_eq;
    use nalgebra::{dvector, DMatrix};

    #[test]
    fn bound_examples() {
        assert_eq!(error_bound(1.0, 1.0, 0), 4.0);
        assert_eq!(error_bound(1.0, 2.0, 0), 1.0);
        assert_relative_eq!(error_bound(1.3, 0.7, 3), error_bound(1.3, 0.7, 1) / 2.0, max_relative = 1e-15);
        assert_eq!(step_size(2.0, 1), 0.25);
    }

    #[test]
    fn step_examples() {
        let ball = Ball::unit(1);
        let z = dvector![0.5];
        assert_eq!(sa_step(&z, 1.0, &dvector![0.0], &ball).unwrap(), z);
        assert_eq!(sa_step(&z, 1.0, &dvector![2.0], &ball).unwrap(), dvector![-1.0]);
        assert!(sa_step(&dvector![1.5], 1.0, &dvector![0.0], &ball).is_err());
        assert!(sa_step(&z, 0.0, &dvector![0.0], &ball).is_err());
    }

    #[test]
    fn zero_steps_return_start() {
        let model = GlmModel::scalar(3, ScalarLink::Linear, 1.0).unwrap();
        let z0 = dvector![0.1, 0.2, 0.3];
        let config = SaConfig::new(1.0, 3, 0).with_start(z0.clone());
        let run = run_sa(&model, &dvector![1.0, 0.0, 0.0], &config, &mut seeded(0)).unwrap();
        assert_eq!(run.estimate, z0);
        assert_eq!(run.steps_taken, 0);
    }

    #[test]
    fn trajectory_stays_feasible() {
        let model = GlmModel::scalar(5, ScalarLink::Hinge, 1.0).unwrap();
        let x = unit_sphere(5, &mut seeded(1));
        let config = SaConfig::new(0.05, 5, 300).with_trajectory();
        let run = run_sa(&model, &x, &config, &mut seeded(2)).unwrap();
        let traj = run.trajectory.unwrap();
        assert_eq!(traj.len(), 301);
        assert!(traj.iter().all(|z| z.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn invalid_configs() {
        let model = GlmModel::scalar(2, ScalarLink::Linear, 1.0).unwrap();
        let x = dvector![0.0, 1.0];
        let bad_kappa = SaConfig::new(0.0, 2, 10);
        assert!(run_sa(&model, &x, &bad_kappa, &mut seeded(0)).is_err());
        let outside = SaConfig::new(1.0, 2, 10).with_start(dvector![2.0, 0.0]);
        assert!(run_sa(&model, &x, &outside, &mut seeded(0)).is_err());
        assert!(run_sa(&model, &dvector![3.0, 0.0], &SaConfig::new(1.0, 2, 1), &mut seeded(0)).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = kappa_grid(0.5);
        assert_eq!(g.len(), 9);
        assert_relative_eq!(g[0], 0.5 / 8.0, max_relative = 1e-14);
        assert_relative_eq!(g[4], 0.5, max_relative = 1e-14);
        assert_relative_eq!(g[8], 4.0, max_relative = 1e-14);
    }

    #[test]
    fn tuning_ties_and_singletons() {
        let model = GlmModel::new(3, 1, ScalarLink::Linear, LabelLaw::Gaussian { sigma: 1.0 }).unwrap();
        let zeros: Vec<Observation> = (0..20)
            .map(|_| Observation::new(DMatrix::zeros(3, 1), dvector![0.0]).unwrap())
            .collect();
        assert_eq!(tune_kappa(&model, &zeros, &[2.0, 0.5, 1.0], &mut seeded(0)).unwrap(), 0.5);
        assert_eq!(tune_kappa(&model, &zeros, &[3.0], &mut seeded(0)).unwrap(), 3.0);
        assert!(tune_kappa(&model, &zeros, &[], &mut seeded(0)).is_err());
        assert!(tune_kappa(&model, &[], &[1.0], &mut seeded(0)).is_err());
    }
}
