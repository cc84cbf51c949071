//! Experiment orchestration for the horizon tracking simulator: the 1 kHz
//! closed loop, per-run logs and summaries, the identification suites, and
//! the live telemetry server.

pub mod config;
pub mod error;
pub mod experiment;
pub mod live;
pub mod logs;
pub mod metrics;
pub mod replay;
pub mod suite;

pub use config::{ExperimentConfig, Feedback, Scenario};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, Experiment, RunOutput, RunReport, RunStatus};
pub use metrics::RunSummary;
