//! Experiment harness for the auction library: corpus generation, oracle
//! and mechanism runs, Monte Carlo sweeps, and the inequality verification
//! suites with CSV/JSON reports.

pub mod config;
pub mod gen;
pub mod report;
pub mod suites;
