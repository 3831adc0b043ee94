//! Batch experiment runner for the cosine-function calculus laboratory:
//! operator family generation, named check suites, machine-readable reports.

pub mod checks;
pub mod config;
pub mod family;
