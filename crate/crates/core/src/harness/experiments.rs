use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::glm::{GlmModel, Observation};
use crate::harness::config::{Experiment, ExperimentConfig, KappaMode};
use crate::harness::table::{
    fit_rate, Estimator, ExperimentRow, ExperimentTable, ProfileRow, ProfileTable, RateRow, RateTable,
};
use crate::links::{h_profile, modulus_profile, ScalarLink, DEFAULT_MODULUS_GRID};
use crate::rng::{derive_seed, normal_vector, seeded, stream, unit_sphere};
use crate::sa::{error_bound, kappa_grid, run_sa_on_observations, tune_kappa_averaged, SaConfig};
use crate::saa::{solve_saa, SaaOptions, SaaResult};
use crate::single_obs::{gaussian_ensemble, solve_single_obs, SingleObsModel};
use crate::vi::Ball;

/// Grid points of the profile table on `(0, 3]`.
pub const PROFILE_POINTS: usize = 60;

/// Signals and samples per signal behind the `M` of the bound column.
const M_SIGNALS: usize = 20;
const M_SAMPLES: usize = 20_000;

const STREAM_M: u64 = 0x4d;

fn link_code(link: ScalarLink) -> u64 {
    ScalarLink::ALL.iter().position(|l| *l == link).unwrap() as u64
}

fn timed<T>(enabled: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, if enabled { start.elapsed().as_secs_f64() } else { 0.0 }))
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// `h(t)` and the modulus on the ball of radius `R = t` for `t` on an even
/// grid of `(0, 3]`.
pub fn run_profiles(config: &ExperimentConfig) -> Result<ProfileTable> {
    let cells: Vec<(ScalarLink, usize)> = config
        .links
        .iter()
        .flat_map(|&l| (1..=PROFILE_POINTS).map(move |i| (l, i)))
        .collect();
    let rows = in_pool(config.jobs, || {
        cells
            .par_iter()
            .map(|&(link, i)| {
                let t = 3.0 * i as f64 / PROFILE_POINTS as f64;
                Ok(ProfileRow {
                    link,
                    t,
                    h: h_profile(link, t)?,
                    r: t,
                    modulus: modulus_profile(link, t, DEFAULT_MODULUS_GRID)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(ProfileTable { rows })
}

/// `M` of the bound column: [`GlmModel::estimate_m`] on a stream of its own.
pub fn bound_m(model: &GlmModel, master_seed: u64) -> Result<f64> {
    let mut rng = stream(master_seed, &[STREAM_M, link_code(model.link), model.n as u64]);
    model.estimate_m(&model.signal_set(), M_SIGNALS, M_SAMPLES, &mut rng)
}

/// SA (tuned or analytic κ) and SAA on one shared draw of observations.
pub struct GlmFit {
    pub sa: DVector<f64>,
    pub sa_kappa: f64,
    pub sa_time: f64,
    pub saa: SaaResult,
    pub saa_time: f64,
}

pub fn fit_glm(
    model: &GlmModel,
    observations: &[Observation],
    kappa_analytic: f64,
    config: &ExperimentConfig,
    rng: &mut dyn rand::RngCore,
) -> Result<GlmFit> {
    let set = model.signal_set();
    let ((sa, kappa), sa_time) = timed(config.timing, || {
        let kappa = match config.kappa_mode {
            KappaMode::Analytic => kappa_analytic,
            KappaMode::Tuned => {
                tune_kappa_averaged(model, observations, &kappa_grid(kappa_analytic), config.tuning_signals, rng)?
            }
        };
        let run = run_sa_on_observations(
            model.link,
            &set,
            observations,
            &SaConfig::new(kappa, model.n, observations.len()),
        )?;
        Ok((run.estimate, kappa))
    })?;
    let options = SaaOptions {
        tol: config.tol,
        max_iters: config.max_iters,
        ..SaaOptions::default()
    };
    let (saa, saa_time) = timed(config.timing, || solve_saa(observations, model.link, &set, &options, rng))?;
    Ok(GlmFit {
        sa,
        sa_kappa: kappa,
        sa_time,
        saa,
        saa_time,
    })
}

fn glm_rows(config: &ExperimentConfig, experiment: Experiment) -> Result<ExperimentTable> {
    let master = config.master_seed.ok_or_else(|| Error::Config("missing --seed".into()))?;
    let mut per_link = Vec::new();
    for &link in &config.links {
        let model = GlmModel::scalar(config.n, link, config.sigma)?;
        let kappa = modulus_profile(link, 1.0, DEFAULT_MODULUS_GRID)?;
        let m = bound_m(&model, master)?;
        per_link.push((model, kappa, m));
    }
    let cells: Vec<(usize, usize, usize)> = (0..per_link.len())
        .flat_map(|li| {
            config
                .ks
                .iter()
                .flat_map(move |&k| (0..config.replications).map(move |r| (li, k, r)))
        })
        .collect();
    let rows = in_pool(config.jobs, || {
        cells
            .par_iter()
            .map(|&(li, k, rep)| {
                let (model, kappa, m) = &per_link[li];
                let seed = derive_seed(master, &[experiment.tag(), link_code(model.link), k as u64, rep as u64]);
                let mut rng = seeded(seed);
                let x = unit_sphere(model.n, &mut rng);
                let obs = model.sample_observations(&x, k, &mut rng)?;
                let fit = fit_glm(model, &obs, *kappa, config, &mut rng)?;
                let row = |estimator, est: &DVector<f64>, bound, time, kappa, converged| {
                    let error = (est - &x).norm();
                    ExperimentRow {
                        experiment: experiment.name().to_string(),
                        link: model.link,
                        k,
                        replication: rep,
                        seed,
                        estimator,
                        error,
                        sq_error: error * error,
                        bound,
                        wall_time_s: time,
                        kappa,
                        converged,
                    }
                };
                Ok([
                    row(Estimator::Sa, &fit.sa, Some(error_bound(*m, *kappa, k)), fit.sa_time, fit.sa_kappa, true),
                    row(Estimator::Saa, &fit.saa.point, None, fit.saa_time, fit.saa.kappa, fit.saa.converged),
                ])
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(ExperimentTable::new(rows.into_iter().flatten().collect()))
}

/// Both estimators over links × K × replications. The SA bound column uses
/// the radial-profile modulus on the unit ball and `M` from
/// [`GlmModel::estimate_m`].
pub fn run_fig2(config: &ExperimentConfig) -> Result<ExperimentTable> {
    glm_rows(config, Experiment::Fig2)
}

/// Experiment id of a single-observation row.
pub fn fig3_id(lambda: f64) -> String {
    format!("fig3-lambda{lambda}")
}

/// Single-observation arctan recovery over K × λ × replications. All noise
/// levels of a replication share η, x and ξ.
pub fn run_fig3(config: &ExperimentConfig) -> Result<ExperimentTable> {
    let master = config.master_seed.ok_or_else(|| Error::Config("missing --seed".into()))?;
    let n = config.n;
    let cells: Vec<(ScalarLink, usize, usize)> = config
        .links
        .iter()
        .flat_map(|&l| {
            config
                .ks
                .iter()
                .flat_map(move |&k| (0..config.replications).map(move |r| (l, k, r)))
        })
        .collect();
    let rows = in_pool(config.jobs, || {
        cells
            .par_iter()
            .map(|&(link, k, rep)| {
                let seed = derive_seed(master, &[Experiment::Fig3.tag(), link_code(link), k as u64, rep as u64]);
                let mut rng = seeded(seed);
                let eta = gaussian_ensemble(n, k, &mut rng)?;
                let x = unit_sphere(n, &mut rng);
                let unit = SingleObsModel::new(eta, link, 1.0)?;
                let xi = normal_vector(k, &mut rng);
                let clean = unit.mean(&x);
                let mut out = Vec::with_capacity(config.lambdas.len());
                for &lambda in &config.lambdas {
                    let model = SingleObsModel {
                        noise_sigma: lambda,
                        ..unit.clone()
                    };
                    let y = &clean + &xi * lambda;
                    let mut solver_rng = seeded(derive_seed(seed, &[lambda.to_bits()]));
                    let (res, time) = timed(config.timing, || {
                        solve_single_obs(&model, &y, &Ball::unit(n), config.tol, config.max_iters, &mut solver_rng)
                    })?;
                    let res = res.with_truth(&model, &x, &y)?;
                    let error = (&res.estimate - &x).norm();
                    out.push(ExperimentRow {
                        experiment: fig3_id(lambda),
                        link,
                        k,
                        replication: rep,
                        seed,
                        estimator: Estimator::Saa,
                        error,
                        sq_error: error * error,
                        bound: res.bound,
                        wall_time_s: time,
                        kappa: res.kappa,
                        converged: res.converged,
                    });
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(ExperimentTable::new(rows.into_iter().flatten().collect()))
}

/// The Fig. 2 sweep followed by log-log slope fits per link and estimator.
pub fn run_rate(config: &ExperimentConfig) -> Result<(ExperimentTable, RateTable)> {
    let table = glm_rows(config, Experiment::Rate)?;
    let mut rows = Vec::new();
    for &link in &config.links {
        for estimator in [Estimator::Sa, Estimator::Saa] {
            rows.push(RateRow {
                link,
                estimator,
                slope: fit_rate(&table, estimator, link)?,
            });
        }
    }
    Ok((table, RateTable { rows }))
}

/// Observations from a CSV file with header `y,eta_1,...,eta_n`.
pub fn read_observations(path: &Path) -> Result<Vec<Observation>> {
    let mut reader = csv::Reader::from_path(path)?;
    let width = reader.headers()?.len();
    if width < 2 {
        return Err(Error::Config("data file needs a y column and at least one regressor".into()));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let vals: Vec<f64> = record
            .iter()
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid number '{v}' in data file")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != width {
            return Err(Error::Config("ragged data file".into()));
        }
        out.push(Observation::new(
            DMatrix::from_column_slice(width - 1, 1, &vals[1..]),
            DVector::from_element(1, vals[0]),
        )?);
    }
    if out.is_empty() {
        return Err(Error::Empty("data file"));
    }
    Ok(out)
}

/// Output of `estimate`.
pub struct EstimateOutput {
    pub sa: DVector<f64>,
    pub saa: SaaResult,
    /// Present for synthetic runs.
    pub truth: Option<DVector<f64>>,
}

pub fn run_estimate(config: &ExperimentConfig) -> Result<EstimateOutput> {
    let master = config.master_seed.ok_or_else(|| Error::Config("missing --seed".into()))?;
    let link = config.links[0];
    let mut rng = stream(master, &[Experiment::Estimate.tag()]);
    let (observations, truth) = match &config.data {
        Some(path) => (read_observations(path)?, None),
        None => {
            let model = GlmModel::scalar(config.n, link, config.sigma)?;
            let x = unit_sphere(config.n, &mut rng);
            (model.sample_observations(&x, config.ks[0], &mut rng)?, Some(x))
        }
    };
    let model = GlmModel::scalar(observations[0].n(), link, config.sigma)?;
    let kappa = modulus_profile(link, 1.0, DEFAULT_MODULUS_GRID)?;
    let fit = fit_glm(&model, &observations, kappa, config, &mut rng)?;
    Ok(EstimateOutput {
        sa: fit.sa,
        saa: fit.saa,
        truth,
    })
}
