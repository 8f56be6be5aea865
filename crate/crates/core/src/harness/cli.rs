use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::config::{parse_config_text, resolve_config, Experiment, ExperimentConfig};
use crate::harness::experiments::{run_estimate, run_fig2, run_fig3, run_profiles, run_rate};
use crate::harness::table::fmt_float;

#[derive(Debug, Parser)]
#[command(name = "glmvi", about = "GLM signal recovery via monotone variational inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate h(t) and the strong-monotonicity modulus per link.
    Profiles(Flags),
    /// SA and SAA recovery errors over links and sample sizes.
    Fig2(Flags),
    /// Single-observation arctan recovery over sample sizes and noise levels.
    Fig3(Flags),
    /// Log-log slopes of mean error against K.
    Rate(Flags),
    /// One SA and one SAA estimate from synthetic or file data.
    Estimate(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// desk or paper.
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    /// Write 0 in the wall-time column.
    #[arg(long)]
    no_timing: bool,
    /// Comma-separated link names.
    #[arg(long)]
    links: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated ascending sample sizes.
    #[arg(long = "K", alias = "k")]
    k: Option<String>,
    #[arg(long)]
    replications: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    /// Comma-separated noise levels.
    #[arg(long)]
    lambda: Option<String>,
    /// tuned or analytic.
    #[arg(long)]
    kappa_mode: Option<String>,
    #[arg(long)]
    tuning_signals: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    /// CSV with header y,eta_1,...,eta_n (estimate only).
    #[arg(long)]
    data: Option<PathBuf>,
}

impl Flags {
    fn pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("seed", self.seed.clone());
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        push("scale", self.scale.clone());
        push("jobs", self.jobs.clone());
        push("links", self.links.clone());
        push("n", self.n.clone());
        push("K", self.k.clone());
        push("replications", self.replications.clone());
        push("sigma", self.sigma.clone());
        push("lambda", self.lambda.clone());
        push("kappa_mode", self.kappa_mode.clone());
        push("tuning_signals", self.tuning_signals.clone());
        push("tol", self.tol.clone());
        push("max_iters", self.max_iters.clone());
        push("data", self.data.as_ref().map(|p| p.display().to_string()));
        if self.no_timing {
            push("timing", Some("false".into()));
        }
        out
    }
}

enum Outcome {
    Done,
    NotConverged,
}

fn load(experiment: Experiment, flags: &Flags) -> Result<ExperimentConfig> {
    let file_pairs = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => Vec::new(),
    };
    resolve_config(experiment, &file_pairs, &flags.pairs())
}

fn sink(config: &ExperimentConfig, stdout: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &config.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => body(stdout),
    }
}

fn execute(experiment: Experiment, flags: &Flags, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    let config = load(experiment, flags)?;
    match experiment {
        Experiment::Profiles => {
            let t = run_profiles(&config)?;
            sink(&config, stdout, |w| t.write_csv(w))?;
        }
        Experiment::Fig2 => {
            let t = run_fig2(&config)?;
            sink(&config, stdout, |w| t.write_csv(w))?;
        }
        Experiment::Fig3 => {
            let t = run_fig3(&config)?;
            sink(&config, stdout, |w| t.write_csv(w))?;
        }
        Experiment::Rate => {
            let (_, rates) = run_rate(&config)?;
            sink(&config, stdout, |w| rates.write_csv(w))?;
        }
        Experiment::Estimate => {
            let est = run_estimate(&config)?;
            sink(&config, stdout, |w| {
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record(["estimator", "index", "value"])?;
                for (name, v) in [("SA", &est.sa), ("SAA", &est.saa.point)] {
                    for (i, x) in v.iter().enumerate() {
                        csv.write_record([name.to_string(), i.to_string(), fmt_float(*x)])?;
                    }
                }
                csv.flush()?;
                Ok(())
            })?;
            if let Some(x) = &est.truth {
                writeln!(stderr, "SA error {:.6e}", (&est.sa - x).norm())?;
                writeln!(stderr, "SAA error {:.6e}", (&est.saa.point - x).norm())?;
            }
            if !est.saa.converged {
                writeln!(
                    stderr,
                    "SAA solver did not converge after {} iterations (residual {:.3e})",
                    est.saa.iterations, est.saa.residual
                )?;
                return Ok(Outcome::NotConverged);
            }
        }
    }
    Ok(Outcome::Done)
}

/// Runs the command line with explicit output streams. Returns the exit
/// code: 0 on success, 1 on usage, configuration or I/O errors, 2 when the
/// SAA solver of `estimate` does not converge.
pub fn run_cli<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let (experiment, flags) = match &cli.command {
        Command::Profiles(f) => (Experiment::Profiles, f),
        Command::Fig2(f) => (Experiment::Fig2, f),
        Command::Fig3(f) => (Experiment::Fig3, f),
        Command::Rate(f) => (Experiment::Rate, f),
        Command::Estimate(f) => (Experiment::Estimate, f),
    };
    match execute(experiment, flags, stdout, stderr) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::NotConverged) => 2,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

/// Entry point of the binary.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_cli(argv, &mut stdout.lock(), &mut stderr.lock())
}
