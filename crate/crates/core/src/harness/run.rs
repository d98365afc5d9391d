//! Config-driven entry points shared by the CLI and the tests.

use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::report::CompressionRow;
use crate::session::{run_experiment, ExperimentOutcome};

/// Loads the configured data and runs every session in `f64`.
pub fn run_config(cfg: &ExperimentConfig) -> Result<ExperimentOutcome<f64>> {
    let (train, eval) = cfg.load_data::<f64>()?;
    run_experiment(&train, &eval, &cfg.schedule, &cfg.mode_config(), cfg.d, cfg.seed)
}

/// Runs the configuration twice, with the prototype memory held plainly
/// and 2× compressed, and pairs the per-session accuracies.
pub fn compression_bench(cfg: &ExperimentConfig) -> Result<Vec<CompressionRow>> {
    let (train, eval) = cfg.load_data::<f64>()?;
    let mut plain = cfg.mode_config::<f64>();
    plain.compress_em = false;
    let mut packed = plain;
    packed.compress_em = true;
    let a = run_experiment(&train, &eval, &cfg.schedule, &plain, cfg.d, cfg.seed)?;
    let b = run_experiment(&train, &eval, &cfg.schedule, &packed, cfg.d, cfg.seed)?;
    Ok(a.results
        .iter()
        .zip(&b.results)
        .map(|(u, c)| CompressionRow {
            session: u.session,
            classes: u.classes,
            accuracy: u.accuracy,
            compressed_accuracy: c.accuracy,
            drop: u.accuracy - c.accuracy,
        })
        .collect())
}
