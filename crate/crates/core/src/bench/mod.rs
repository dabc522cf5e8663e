//! Scenario orchestration, metrics and reporting for the motor experiments.

mod metrics;
mod report;
mod runner;
mod scenario;

use thiserror::Error;

use crate::control::ControlError;
use crate::observer::ObserverError;
use crate::plant::PlantError;
use crate::sim::SimError;

pub use metrics::{
    compare, isu, itae, peak_metrics, settling_entry, settling_final, ChannelPeak, Comparison, PEAK_CHANNELS,
    SETTLING_BAND,
};
pub use report::{MetricsReport, ReportValue};
pub use runner::{build_loop, run_scenario, write_trace_csv, ScenarioRun, CSV_COLUMNS};
pub use scenario::{
    builtin, builtin_by_name, builtin_suite, parse_builtin_name, parse_scenario, ControllerConfig, InitialConditions,
    NoiseLevel, ObserverConfig, ScenarioConfig, ScenarioFamily, DEFAULT_DT, DEFAULT_FAL_DELTA, DEFAULT_HORIZON,
    DEFAULT_NOISE_PERIOD, DEFAULT_NOISE_VARIANCE, PEAKING_XHAT1,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("bad value '{value}' for key '{key}'")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("trace is missing channel '{0}'")]
    MissingChannel(String),
    #[error("trace needs at least two rows on a uniform grid")]
    BadGrid,
    #[error("reports are not comparable: {0}")]
    Incompatible(String),
    #[error("report field '{field}': {reason}")]
    Report { field: String, reason: String },
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Sim(SimError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
