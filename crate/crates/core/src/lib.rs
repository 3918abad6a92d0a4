//! Planning tethered-UAV small cells that reduce population EMF exposure.
//!
//! The pipeline associates users with gNBs, deploys tUAVs onto ground
//! stations, fine-tunes each tUAV within its tether's hovering area and then
//! evaluates uplink and downlink exposure. [`harness`] wires the stages
//! together and runs Monte Carlo comparisons; [`cli`] exposes them as a
//! command-line tool.

pub mod association;
pub mod channel;
pub mod cli;
pub mod deployment;
pub mod error;
pub mod exposure;
pub mod figures;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod params;
pub mod positioning;
pub mod scenario;

pub use error::{Error, Result};
pub use harness::{monte_carlo, run_pipeline, ExperimentConfig, PipelineConfig};
pub use params::{Architecture, EvaluationReport, Scenario, SimParams};
