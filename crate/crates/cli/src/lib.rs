//! Experiment runner for the compulsive-gambler process crates: named
//! reproducible experiments, the solver front end, oracle formula lookups,
//! and the acceptance suite.

pub mod config;
pub mod experiments;
pub mod output;
pub mod validate;
