//! Experiment orchestration for the pbnlc laboratory: configuration, table
//! builds, BER sweeps, reach searches and plot data.

pub mod config;
pub mod results;
pub mod sim;

pub use config::{Engine, ExperimentConfig};
pub use results::{PlotKind, ResultSet};
