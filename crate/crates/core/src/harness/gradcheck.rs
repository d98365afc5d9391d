//! Central finite-difference checks of the analytic gradients.
//!
//! The numeric side only evaluates the public loss functions, so it shares
//! no code with the analytic gradient paths it verifies.

use std::time::{Duration, Instant};

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::embed::{self, EmbedLayer};
use crate::error::Result;
use crate::hdvec::SharpenConfig;
use crate::nudge::{self, NudgeConfig, NudgeState, NudgeVariant};

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub points: usize,
    pub alignment_max_rel_err: f64,
    pub nudge_max_rel_err: f64,
    pub elapsed: Duration,
}

impl GradcheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.alignment_max_rel_err.max(self.nudge_max_rel_err)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_err() < TOLERANCE
    }
}

/// Central-difference gradient of `f` at `x`.
pub fn numeric_gradient(
    x: &ArrayView2<'_, f64>,
    step: f64,
    mut f: impl FnMut(&Array2<f64>) -> Result<f64>,
) -> Result<Array2<f64>> {
    let mut grad = Array2::zeros(x.raw_dim());
    let mut probe = x.to_owned();
    for idx in ndarray::indices(x.raw_dim()) {
        let orig = probe[idx];
        probe[idx] = orig + step;
        let plus = f(&probe)?;
        probe[idx] = orig - step;
        let minus = f(&probe)?;
        probe[idx] = orig;
        grad[idx] = (plus - minus) / (2.0 * step);
    }
    Ok(grad)
}

/// `max |a - n| / max(max |a|, max |n|)`: the largest entry-wise deviation
/// relative to the gradient's magnitude.
pub fn relative_error(analytic: &ArrayView2<'_, f64>, numeric: &ArrayView2<'_, f64>) -> f64 {
    let scale = analytic
        .iter()
        .chain(numeric.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = analytic
        .iter()
        .zip(numeric.iter())
        .fold(0.0f64, |m, (a, n)| m.max((a - n).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> Array2<f64> {
    let n = Normal::new(0.0, std).expect("valid std");
    Array2::from_shape_simple_fn((rows, cols), || n.sample(rng))
}

/// Checks the alignment-loss gradient at one random point (3×4 layer, 2 classes).
pub fn check_alignment_point(rng: &mut ChaCha8Rng) -> Result<f64> {
    let layer = EmbedLayer::new(gaussian(rng, 3, 4, 0.5))?;
    let acts = gaussian(rng, 4, 2, 1.0);
    let targets = gaussian(rng, 3, 2, 1.0);
    let analytic = embed::grad_lf(&layer, &targets.view(), &acts.view())?;
    let numeric = numeric_gradient(&layer.weights(), STEP, |w| {
        embed::loss_lf(&EmbedLayer::new(w.clone())?, &targets.view(), &acts.view())
    })?;
    Ok(relative_error(&analytic.view(), &numeric.view()))
}

/// Checks the nudging gradient at one random point (d = 6, 5 prototypes).
pub fn check_nudge_point(rng: &mut ChaCha8Rng, variant: NudgeVariant) -> Result<f64> {
    let initial = gaussian(rng, 6, 5, 0.8);
    let current = &initial + &gaussian(rng, 6, 5, 0.3);
    let cfg = NudgeConfig {
        iterations: 1,
        rate: 0.01,
        sharpen: SharpenConfig::default(),
        variant,
    };
    let state = NudgeState::at(current.clone(), initial.clone())?;
    let analytic = nudge::grad_nudge(&state, &cfg)?;
    let numeric = numeric_gradient(&current.view(), STEP, |k| {
        Ok(nudge::loss_lo_variant(&k.view(), &cfg.sharpen, variant)?
            + nudge::loss_lm(&k.view(), &initial.view())?)
    })?;
    Ok(relative_error(&analytic.view(), &numeric.view()))
}

/// Runs `points` seeded checks of each gradient.
pub fn run_gradcheck(seed: u64, points: usize) -> Result<GradcheckReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alignment = 0.0f64;
    let mut nudging = 0.0f64;
    for _ in 0..points {
        alignment = alignment.max(check_alignment_point(&mut rng)?);
        nudging = nudging.max(check_nudge_point(&mut rng, NudgeVariant::Symmetric)?);
    }
    Ok(GradcheckReport {
        points,
        alignment_max_rel_err: alignment,
        nudge_max_rel_err: nudging,
        elapsed: start.elapsed(),
    })
}
