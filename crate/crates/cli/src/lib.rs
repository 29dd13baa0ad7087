//! Experiment drivers and configuration for the splitting-scheme solver.

pub mod config;
pub mod csv;
pub mod driver;
