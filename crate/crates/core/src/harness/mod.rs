//! Config-driven experiment runner.
//!
//! A TOML [`ExperimentConfig`] names a kind (`regression`, `bandit`,
//! `nonstationary`, or `bounds_table`), an environment, and a list of
//! algorithms with their regularization (and discount, where applicable).
//! [`run_experiment`] executes every (algorithm, replicate) pair — in
//! parallel, with results ordered by index so scheduling never affects
//! output — and returns per-step traces, cross-replicate aggregates, and
//! batch-regret checkpoints. [`bounds_table`] tabulates the matching
//! closed-form bounds on a logarithmic horizon grid. [`execute`] runs
//! whichever of the two the config asks for and writes the CSV files.
//!
//! Replicate `r` of every algorithm sees the same data (its seed depends
//! only on the master seed and `r`), so per-replicate comparisons between
//! algorithms are paired.
//!
//! The full-scale experiment setups ship as named presets; see
//! [`preset`] and the `presets/` directory for the assumptions each one
//! encodes.

mod config;
mod output;
mod run;

pub use config::{
    preset, AlgoConfig, AlgoKind, BoundOverrides, EnvConfig, ExperimentConfig, ExperimentKind,
    OutputConfig, PRESET_NAMES,
};
pub use output::{
    execute, write_bounds_csv, write_checkpoints_csv, write_summary_csv, write_trace_csv,
};
pub use run::{
    aggregate, bounds_table, checkpoint_grid, run_experiment, BoundsRow, CheckpointRow,
    ExperimentResult, SummaryRow, Trace, TraceRow,
};

/// Errors from config parsing, validation, simulation, and output.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// A structurally valid config asked for something inconsistent.
    #[error("config: {0}")]
    Config(String),

    /// Numerical-layer failure (dimension mismatch, bad parameter, ...).
    #[error(transparent)]
    Core(#[from] crate::Error),

    #[error("toml: {0}")]
    Toml(#[from] Box<toml::de::Error>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl From<toml::de::Error> for HarnessError {
    fn from(e: toml::de::Error) -> Self {
        HarnessError::Toml(Box::new(e))
    }
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;
