//! Experiment harness for the line spectral estimation toolkit: scenario
//! configuration, scene generation, noise injection, Monte Carlo sweeps,
//! metrics, and persistence. The `linespec` binary is a thin wrapper over
//! these modules.

pub mod commands;
pub mod config;
pub mod metrics;
pub mod scenario;
pub mod sweep;
