//! Scenario configuration, orchestration and report emission.

pub mod config;
pub mod fit;
pub mod output;
pub mod scenarios;
pub mod sweep;

pub use config::{ScenarioConfig, ScenarioKind};
pub use fit::{fit_scaling, Model, ScalingFit};
pub use scenarios::{run, Outputs};
pub use sweep::{two_layer_sweep, SweepPoint, SweepResult, SweepSpec};

use crate::error::LabError;

/// Environment variable bounding the worker pool.
pub const THREADS_ENV: &str = "LAYERLAB_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(LabError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) | Self::NonFinite(_) => 3,
            Self::Io(_) => 4,
        }
    }
}

impl From<LabError> for HarnessError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Io(m) => Self::Io(m),
            LabError::Config(m) => Self::Config(m),
            LabError::UnknownPotential(_) => Self::Config(e.to_string()),
            other => Self::Solver(other),
        }
    }
}

/// Thread bound from the environment; unset, empty or zero means no bound.
pub fn threads_from_env() -> Result<Option<usize>, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(HarnessError::Config(format!("{THREADS_ENV} must be a positive integer, got `{s}`"))),
        },
    }
}
