//! Scenario configuration, sweeps and result files.

pub mod config;
pub mod output;
pub mod presets;
pub mod sweep;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::channel::ChannelError;
use crate::connectivity::ConnectivityError;
use crate::energy::EnergyError;
use crate::fabric::FabricError;
use crate::rates::RateError;
use crate::selection::SelectionError;

pub use config::{
    CovarianceConfig, ExperimentConfig, FrameInputs, LossMode, Overrides, Precoder, ScenarioConfig, ScenarioKind, SelectionMode,
    DEFAULT_SEED, DEFAULT_TRIALS,
};
pub use output::{format_sig, round_sig, ResultRow, ResultTable, COLUMNS};
pub use presets::{preset, PRESET_NAMES};
pub use sweep::{run_experiment, run_sweep, sweep_points, SweepPoint};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error(transparent)]
    Fabric(#[from] FabricError),
    #[error(transparent)]
    Connectivity(#[from] ConnectivityError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("reading results: {0}")]
    Parse(String),
}
