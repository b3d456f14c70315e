//! Command-line front end for the Bayesian lattice filter: simulation, fitting and benchmarks
//! with CSV and TOML outputs.

pub mod commands;
pub mod config;
pub mod io;
