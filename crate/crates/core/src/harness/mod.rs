//! Experiment configs, seeded multi-run execution, CSV output and the
//! property suites behind the command-line tool.

use std::path::PathBuf;

use thiserror::Error;

pub mod checks;
mod config;
mod output;
mod registry;
mod run;
mod table1;

pub use checks::{run_check, CheckLine, CheckReport, CHECK_IDS};
pub use config::{ExperimentConfig, NamedSpec};
pub use output::{
    emit_csv, emit_curves, parse_curves, parse_summary, summarize, summary_csv, SummaryRow, CURVE_HEADER,
    SUMMARY_HEADER,
};
pub use registry::{build_agent, build_environment, describe, Environment, AGENTS, ENVIRONMENTS};
pub use run::{configured_threads, mean_std, parallel_map, run_experiment, CurvePoint, RunResult, RunStats, THREADS_ENV};
pub use table1::{table1, table1_configs, Scale, TABLE1_SEED};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{owner}: parameter `{name}`: {reason}")]
    Param { owner: String, name: String, reason: String },
    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("`{0}` is not a CRMDP and cannot be simulated by the runner")]
    NotCrmdp(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Env(#[from] crate::envs::EnvError),
    #[error(transparent)]
    Agent(#[from] crate::agents::AgentError),
    #[error(transparent)]
    Quantile(#[from] crate::quantiliser::QuantileError),
    #[error(transparent)]
    Model(#[from] crate::crmdp::CrmdpError),
    #[error(transparent)]
    Decoupled(#[from] crate::decoupled::DecoupledError),
}
