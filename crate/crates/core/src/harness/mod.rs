//! Experiment runner behind the command-line front end.

pub mod config;
pub mod dbfile;
pub mod distinguishers;
pub mod report;
pub mod run;
pub mod script;

pub use config::{Experiment, ExperimentConfig};
pub use report::{Check, Report};
pub use run::{list_checks, run, RunOptions};
