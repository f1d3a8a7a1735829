//! Command-line front end and benchmark harness for `specmix`: single
//! clustering runs on CSV files, synthetic dataset generation, metric
//! evaluation, and resumable experiment sweeps.

pub mod cli;
pub mod format;
pub mod grid;
pub mod run;
pub mod sweep;
