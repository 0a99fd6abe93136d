//! Experiment harness: config parsing, result files, plots and the
//! acceptance suites.

pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod runner;
pub mod suites;
