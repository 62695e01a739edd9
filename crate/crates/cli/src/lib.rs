//! Experiment runner library behind the `hexmesh` binary: config parsing,
//! cell orchestration, and CSV/table rendering.

pub mod config;
pub mod runner;
