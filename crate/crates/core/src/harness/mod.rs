//! Experiment configuration, seeded replication sweeps, CSV tables and the
//! command-line front end.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod table;

pub use cli::{cli_main, run_cli};
pub use config::{parse_config_text, resolve_config, Experiment, ExperimentConfig, KappaMode, Scale};
pub use experiments::{
    bound_m, fig3_id, fit_glm, read_observations, run_estimate, run_fig2, run_fig3, run_profiles, run_rate,
    EstimateOutput, GlmFit, PROFILE_POINTS,
};
pub use table::{fit_rate, fmt_float, Estimator, ExperimentRow, ExperimentTable, ProfileRow, ProfileTable, RateRow, RateTable};
