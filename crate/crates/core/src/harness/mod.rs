//! Operational shell: embedding files, synthetic data, experiment
//! configuration, gradient checks and per-session reports.

pub mod config;
pub mod format;
pub mod gradcheck;
pub mod report;
pub mod synth;
pub mod checkpoint;
pub mod run;
