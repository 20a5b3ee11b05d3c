//! Experiment drivers, configuration and output for regularized Stokeslet
//! segment simulations.

pub mod cli;
pub mod config;
pub mod drag;
pub mod error;
pub mod leak;
pub mod output;
pub mod run;
pub mod swim;

pub use config::{Experiment, ExperimentConfig, Plan};
pub use error::{SimError, SimResult};
pub use output::Summary;
