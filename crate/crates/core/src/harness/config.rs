use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::links::ScalarLink;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Profiles,
    Fig2,
    Fig3,
    Rate,
    Estimate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Profiles => "profiles",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Rate => "rate",
            Experiment::Estimate => "estimate",
        }
    }

    /// Tag mixed into every RNG stream of the experiment.
    pub(crate) fn tag(self) -> u64 {
        match self {
            Experiment::Profiles => 1,
            Experiment::Fig2 => 2,
            Experiment::Fig3 => 3,
            Experiment::Rate => 4,
            Experiment::Estimate => 5,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(Error::Config(format!("scale must be 'desk' or 'paper', got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaMode {
    /// Grid search over a synthetic training signal.
    Tuned,
    /// The radial-profile modulus on the unit ball.
    Analytic,
}

impl FromStr for KappaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tuned" => Ok(KappaMode::Tuned),
            "analytic" => Ok(KappaMode::Analytic),
            _ => Err(Error::Config(format!("kappa_mode must be 'tuned' or 'analytic', got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub scale: Scale,
    pub links: Vec<ScalarLink>,
    pub n: usize,
    pub ks: Vec<usize>,
    pub replications: usize,
    /// Label noise for the Gaussian-label links.
    pub sigma: f64,
    /// Noise levels of the single-observation experiment.
    pub lambdas: Vec<f64>,
    pub master_seed: Option<u64>,
    pub kappa_mode: KappaMode,
    pub tuning_signals: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub jobs: Option<usize>,
    /// Record wall times; when false the column is written as zero.
    pub timing: bool,
    pub out: Option<PathBuf>,
    /// Observation file for `estimate`.
    pub data: Option<PathBuf>,
}

pub const CONFIG_KEYS: &[&str] = &[
    "scale",
    "seed",
    "out",
    "links",
    "n",
    "K",
    "replications",
    "sigma",
    "lambda",
    "kappa_mode",
    "tuning_signals",
    "tol",
    "max_iters",
    "jobs",
    "timing",
    "data",
];

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment, scale: Scale) -> Self {
        let paper = scale == Scale::Paper;
        let glm_ks = if paper {
            vec![400, 1000, 4000, 10_000, 40_000]
        } else {
            vec![400, 1000, 4000]
        };
        let (links, ks) = match experiment {
            Experiment::Profiles => (ScalarLink::ALL.to_vec(), vec![]),
            Experiment::Fig2 | Experiment::Rate => (ScalarLink::GLM_CASES.to_vec(), glm_ks),
            Experiment::Fig3 => (
                vec![ScalarLink::Arctan],
                if paper { glm_ks } else { vec![400, 1000, 2000] },
            ),
            Experiment::Estimate => (vec![ScalarLink::Logistic], vec![1000]),
        };
        Self {
            experiment,
            scale,
            links,
            n: if paper { 100 } else { 20 },
            ks,
            replications: 10,
            sigma: 1.0,
            lambdas: vec![0.1, 1.0],
            master_seed: None,
            kappa_mode: KappaMode::Tuned,
            tuning_signals: 1,
            tol: 1e-8,
            max_iters: 200_000,
            jobs: None,
            timing: true,
            out: None,
            data: None,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "scale" => self.scale = value.parse()?,
            "seed" => self.master_seed = Some(parse_num(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "links" => self.links = parse_list(key, value)?,
            "n" => self.n = parse_num(key, value)?,
            "K" => self.ks = parse_list(key, value)?,
            "replications" => self.replications = parse_num(key, value)?,
            "sigma" => self.sigma = parse_num(key, value)?,
            "lambda" => self.lambdas = parse_list(key, value)?,
            "kappa_mode" => self.kappa_mode = value.parse()?,
            "tuning_signals" => self.tuning_signals = parse_num(key, value)?,
            "tol" => self.tol = parse_num(key, value)?,
            "max_iters" => self.max_iters = parse_num(key, value)?,
            "jobs" => self.jobs = Some(parse_num(key, value)?),
            "timing" => self.timing = parse_num(key, value)?,
            "data" => self.data = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let needs_seed = !matches!(self.experiment, Experiment::Profiles);
        if needs_seed && self.master_seed.is_none() {
            return Err(Error::Config(format!("{} requires --seed", self.experiment)));
        }
        if self.links.is_empty() {
            return Err(Error::Config("links must not be empty".into()));
        }
        if self.experiment == Experiment::Profiles {
            return Ok(());
        }
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if self.ks.is_empty() || self.ks[0] == 0 || self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("K must be a nonempty ascending list of positive sizes".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Config("sigma must be ≥ 0".into()));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Config("lambda must be a nonempty list of values ≥ 0".into()));
        }
        if self.tuning_signals == 0 || self.max_iters == 0 || !(self.tol > 0.0) {
            return Err(Error::Config("tuning_signals, max_iters and tol must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if matches!(self.experiment, Experiment::Fig2 | Experiment::Rate | Experiment::Estimate) {
            if let Some(l) = self.links.iter().find(|l| **l == ScalarLink::Arctan) {
                return Err(Error::Config(format!("link {l} is not one of the GLM cases")));
            }
        }
        if self.experiment == Experiment::Estimate && (self.links.len() != 1 || self.ks.len() != 1) {
            return Err(Error::Config("estimate takes a single link and a single K".into()));
        }
        Ok(())
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

/// Parses `key=value` lines; `#` starts a comment, blank lines are skipped,
/// unknown keys are rejected.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Config(format!("line {}: unknown config key '{key}'", i + 1)));
        }
        pairs.push((key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

/// Scale-dependent defaults, then file pairs, then command-line pairs.
pub fn resolve_config(
    experiment: Experiment,
    file_pairs: &[(String, String)],
    cli_pairs: &[(String, String)],
) -> Result<ExperimentConfig> {
    let scale = cli_pairs
        .iter()
        .chain(file_pairs)
        .find(|(k, _)| k == "scale")
        .map(|(_, v)| v.parse())
        .transpose()?
        .unwrap_or(Scale::Desk);
    let mut config = ExperimentConfig::defaults(experiment, scale);
    for (k, v) in file_pairs.iter().chain(cli_pairs) {
        if k != "scale" {
            config.set(k, v)?;
        }
    }
    config.validate()?;
    Ok(config)
}
