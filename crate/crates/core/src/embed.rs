//! The trainable linear embedding layer and its alignment retraining.
//!
//! The layer maps `d_f`-dimensional averaged activations to `d`-dimensional
//! hypervectors. Retraining aligns `tanh(W a_i)` with target prototypes
//! `tanh(k_i)` by plain gradient descent on the negated sum of cosines.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hdvec::{self, ensure_same_dim, Attention, SharpenConfig};
use crate::mat;
use crate::scalar::Scalar;

/// Bias-free linear map `R^{d_f} → R^d`, weights stored `d × d_f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedLayer<T> {
    weights: Array2<T>,
}

impl<T: Scalar> EmbedLayer<T> {
    pub fn new(weights: Array2<T>) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        mat::ensure_finite(&weights.view())?;
        Ok(Self { weights })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            weights: Array2::eye(d),
        }
    }

    /// Entries drawn i.i.d. from `N(0, 1/d_f)`.
    pub fn random(d: usize, d_f: usize, seed: u64) -> Self {
        assert!(d >= 1 && d_f >= 1, "layer dimensions must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / (d_f as f64).sqrt()).expect("valid std");
        Self {
            weights: Array2::from_shape_simple_fn((d, d_f), || T::lit(normal.sample(&mut rng))),
        }
    }

    pub fn weights(&self) -> ArrayView2<'_, T> {
        self.weights.view()
    }

    /// Output dimension `d`.
    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    /// Input dimension `d_f`.
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn forward(&self, features: &[T]) -> Result<Vec<T>> {
        ensure_same_dim(self.in_dim(), features.len())?;
        hdvec::ensure_finite(features)?;
        Ok(self.weights.dot(&ArrayView1::from(features)).to_vec())
    }

    /// Applies the layer to every column of `activations` (`d_f × C`).
    pub fn forward_columns(&self, activations: &ArrayView2<'_, T>) -> Result<Array2<T>> {
        ensure_same_dim(self.in_dim(), activations.nrows())?;
        mat::ensure_finite(activations)?;
        Ok(self.weights.dot(activations))
    }

    /// Consumes the layer and returns its weights.
    pub fn into_weights(self) -> Array2<T> {
        self.weights
    }
}

/// Iteration count and step size of the layer retraining loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrainConfig<T> {
    pub iterations: usize,
    pub rate: T,
}

impl<T: Scalar> RetrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate >= T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "retrain rate must be finite and >= 0, got {}",
                self.rate
            )));
        }
        Ok(())
    }
}

fn check_alignment_shapes<T: Scalar>(
    layer: &EmbedLayer<T>,
    targets: &ArrayView2<'_, T>,
    activations: &ArrayView2<'_, T>,
) -> Result<()> {
    if activations.ncols() == 0 {
        return Err(Error::EmptyInput);
    }
    ensure_same_dim(activations.ncols(), targets.ncols())?;
    ensure_same_dim(layer.out_dim(), targets.nrows())?;
    ensure_same_dim(layer.in_dim(), activations.nrows())?;
    mat::ensure_finite(targets)?;
    mat::ensure_finite(activations)
}

/// Alignment loss `-Σ_i cos(tanh(k_i), tanh(W a_i))`.
pub fn loss_lf<T: Scalar>(
    layer: &EmbedLayer<T>,
    targets: &ArrayView2<'_, T>,
    activations: &ArrayView2<'_, T>,
) -> Result<T> {
    check_alignment_shapes(layer, targets, activations)?;
    let outputs = mat::tanh(&layer.weights.dot(activations).view());
    let cos = mat::paired_cosines(&mat::tanh(targets).view(), &outputs.view())?;
    Ok(-cos.sum())
}

/// Analytic gradient of [`loss_lf`] with respect to the weights.
pub fn grad_lf<T: Scalar>(
    layer: &EmbedLayer<T>,
    targets: &ArrayView2<'_, T>,
    activations: &ArrayView2<'_, T>,
) -> Result<Array2<T>> {
    check_alignment_shapes(layer, targets, activations)?;
    Ok(loss_and_grad_lf(layer, targets, activations)?.1)
}

fn loss_and_grad_lf<T: Scalar>(
    layer: &EmbedLayer<T>,
    targets: &ArrayView2<'_, T>,
    activations: &ArrayView2<'_, T>,
) -> Result<(T, Array2<T>)> {
    let t = mat::tanh(targets);
    let h = mat::tanh(&layer.weights.dot(activations).view());
    let t_norm = mat::column_norms(&t.view())?;
    let h_norm = mat::column_norms(&h.view())?;
    let t_unit = mat::normalize_columns(&t.view(), &t_norm);
    let h_unit = mat::normalize_columns(&h.view(), &h_norm);
    let cos: Array1<T> = (&t_unit * &h_unit).sum_axis(Axis(0));

    // d cos(t, h) / d h = (t̂ - cos · ĥ) / |h|
    let row = |v: &Array1<T>| v.view().insert_axis(Axis(0)).to_owned();
    let mut grad_h = &h_unit * &row(&cos) - &t_unit;
    grad_h /= &row(&h_norm).view();
    let grad_z = grad_h * &h.mapv(|x| T::one() - x * x);
    Ok((-cos.sum(), grad_z.dot(&activations.t())))
}

/// Runs `iterations` gradient steps `W ← W - rate · ∂L/∂W`.
///
/// The returned trace holds the loss before the first step followed by the
/// loss after each step (length `iterations + 1`).
pub fn retrain<T: Scalar>(
    layer: &EmbedLayer<T>,
    targets: &ArrayView2<'_, T>,
    activations: &ArrayView2<'_, T>,
    cfg: &RetrainConfig<T>,
) -> Result<(EmbedLayer<T>, Vec<T>)> {
    cfg.validate()?;
    check_alignment_shapes(layer, targets, activations)?;
    let mut current = layer.clone();
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    for step in 0..cfg.iterations {
        let (loss, grad) = match loss_and_grad_lf(&current, targets, activations) {
            Err(Error::NonFinite) if step > 0 => {
                return Err(Error::NonFiniteLoss { iteration: step })
            }
            r => r?,
        };
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: step });
        }
        trace.push(loss);
        current.weights.scaled_add(-cfg.rate, &grad);
        if current.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFiniteLoss { iteration: step + 1 });
        }
    }
    let last = match loss_lf(&current, targets, activations) {
        Err(Error::NonFinite) if cfg.iterations > 0 => {
            return Err(Error::NonFiniteLoss {
                iteration: cfg.iterations,
            })
        }
        r => r?,
    };
    if !last.is_finite() {
        return Err(Error::NonFiniteLoss {
            iteration: cfg.iterations,
        });
    }
    trace.push(last);
    log::debug!(
        "retrain: {} steps, loss {} -> {}",
        cfg.iterations,
        trace[0],
        last
    );
    Ok((current, trace))
}

/// Recomputes every prototype as `W a_i`.
pub fn regenerate_prototypes<T: Scalar>(
    layer: &EmbedLayer<T>,
    activations: &ArrayView2<'_, T>,
) -> Result<Array2<T>> {
    if activations.ncols() == 0 {
        return Err(Error::EmptyInput);
    }
    layer.forward_columns(activations)
}

/// Cosine score of a query against every prototype column, both through tanh.
pub fn scores<T: Scalar>(
    layer: &EmbedLayer<T>,
    prototypes: &ArrayView2<'_, T>,
    query: &[T],
) -> Result<Vec<T>> {
    if prototypes.ncols() == 0 {
        return Err(Error::EmptyMemory);
    }
    ensure_same_dim(layer.out_dim(), prototypes.nrows())?;
    let embedded = hdvec::tanh_elem(&layer.forward(query)?)?;
    let q = Array1::from(embedded);
    let q_norm = q.dot(&q).sqrt();
    if q_norm.is_nan() || q_norm < T::lit(hdvec::ZERO_NORM) {
        return Err(Error::ZeroVector);
    }
    let p = mat::tanh(prototypes);
    let p_norm = mat::column_norms(&p.view())?;
    let dots = p.t().dot(&q);
    Ok(dots
        .iter()
        .zip(p_norm.iter())
        .map(|(&dp, &np)| (dp / (np * q_norm)).max(-T::one()).min(T::one()))
        .collect())
}

/// Negative log of the attention mass the readout assigns to `label`.
pub fn meta_loss_nll<T: Scalar>(
    layer: &EmbedLayer<T>,
    prototypes: &ArrayView2<'_, T>,
    query: &[T],
    label: usize,
    cfg: &SharpenConfig<T>,
    kind: Attention,
) -> Result<T> {
    if label >= prototypes.ncols() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: prototypes.ncols(),
        });
    }
    let l = scores(layer, prototypes, query)?;
    let att = hdvec::attention(kind, &l, cfg)?;
    Ok(-att[label].ln())
}
