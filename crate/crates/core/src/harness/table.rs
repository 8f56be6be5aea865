use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::links::ScalarLink;

pub const EXPERIMENT_HEADER: [&str; 10] = [
    "experiment",
    "link",
    "K",
    "replication",
    "seed",
    "estimator",
    "error",
    "sq_error",
    "bound",
    "wall_time_s",
];

pub const PROFILE_HEADER: [&str; 5] = ["link", "t", "h", "R", "modulus"];

pub const RATE_HEADER: [&str; 3] = ["link", "estimator", "slope"];

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Estimator {
    Sa,
    Saa,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Sa => "SA",
            Estimator::Saa => "SAA",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub experiment: String,
    pub link: ScalarLink,
    pub k: usize,
    pub replication: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub error: f64,
    pub sq_error: f64,
    /// Written as an empty field when absent.
    pub bound: Option<f64>,
    pub wall_time_s: f64,
    /// Not written: the κ used by the estimator.
    pub kappa: f64,
    /// Not written: solver convergence flag.
    pub converged: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentTable {
    pub fn new(mut rows: Vec<ExperimentRow>) -> Self {
        rows.sort_by(|a, b| {
            (a.link, a.k, a.replication, a.estimator, &a.experiment)
                .cmp(&(b.link, b.k, b.replication, b.estimator, &b.experiment))
        });
        Self { rows }
    }

    pub fn filter<'a>(
        &'a self,
        experiment: Option<&'a str>,
        link: ScalarLink,
        estimator: Estimator,
    ) -> impl Iterator<Item = &'a ExperimentRow> + 'a {
        self.rows.iter().filter(move |r| {
            r.link == link && r.estimator == estimator && experiment.is_none_or(|e| r.experiment == e)
        })
    }

    /// Mean error per `K`, ascending in `K`.
    pub fn mean_errors(&self, experiment: Option<&str>, link: ScalarLink, estimator: Estimator) -> Vec<(usize, f64)> {
        let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for r in self.filter(experiment, link, estimator) {
            let e = acc.entry(r.k).or_insert((0.0, 0));
            e.0 += r.error;
            e.1 += 1;
        }
        acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(EXPERIMENT_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.experiment.clone(),
                r.link.name().to_string(),
                r.k.to_string(),
                r.replication.to_string(),
                r.seed.to_string(),
                r.estimator.name().to_string(),
                fmt_float(r.error),
                fmt_float(r.sq_error),
                r.bound.map(fmt_float).unwrap_or_default(),
                fmt_float(r.wall_time_s),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub link: ScalarLink,
    pub t: f64,
    pub h: f64,
    pub r: f64,
    pub modulus: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileTable {
    pub rows: Vec<ProfileRow>,
}

impl ProfileTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(PROFILE_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.link.name().to_string(),
                fmt_float(r.t),
                fmt_float(r.h),
                fmt_float(r.r),
                fmt_float(r.modulus),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub link: ScalarLink,
    pub estimator: Estimator,
    pub slope: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RATE_HEADER)?;
        for r in &self.rows {
            w.write_record([r.link.name().to_string(), r.estimator.name().to_string(), fmt_float(r.slope)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `log(mean error)` against `log K`.
pub fn fit_rate(table: &ExperimentTable, estimator: Estimator, link: ScalarLink) -> Result<f64> {
    let means = table.mean_errors(None, link, estimator);
    if means.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least 3 distinct K values, got {}",
            means.len()
        )));
    }
    if means.iter().any(|(_, e)| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("rate fit needs positive mean errors".into()));
    }
    let pts: Vec<(f64, f64)> = means.iter().map(|&(k, e)| ((k as f64).ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
