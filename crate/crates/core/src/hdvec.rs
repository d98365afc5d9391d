//! Elementary hyperdimensional vector operations.
//!
//! Similarity, the tanh nonlinearity, bipolar quantization, the sharpening
//! functions used by attention readouts and prototype nudging, and
//! circular-convolution binding with seeded random keys.
//!
//! All functions here are pure; vectors are borrowed as slices and fresh
//! vectors are returned.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Norms below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

pub(crate) fn ensure_finite<T: Scalar>(v: &[T]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub(crate) fn ensure_same_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).map(|(&a, &b)| a * b).sum()
}

pub(crate) fn norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

/// Cosine similarity `<u, v> / (|u| |v|)`.
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    ensure_same_dim(u.len(), v.len())?;
    if u.is_empty() {
        return Err(Error::EmptyInput);
    }
    ensure_finite(u)?;
    ensure_finite(v)?;
    let (nu, nv) = (norm(u), norm(v));
    let eps = T::lit(ZERO_NORM);
    if nu < eps || nv < eps {
        return Err(Error::ZeroVector);
    }
    let c = dot(u, v) / (nu * nv);
    // rounding can push |c| a hair past 1
    Ok(c.max(-T::one()).min(T::one()))
}

pub fn tanh_elem<T: Scalar>(v: &[T]) -> Result<Vec<T>> {
    ensure_finite(v)?;
    Ok(v.iter().map(|x| x.tanh()).collect())
}

/// Element-wise sign with `sign(0) = +1`, so the output is strictly bipolar.
pub fn bipolarize<T: Scalar>(v: &[T]) -> Result<Vec<T>> {
    ensure_finite(v)?;
    Ok(v.iter().map(|&x| bipolar(x)).collect())
}

#[inline]
pub(crate) fn bipolar<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}

/// Parameters of the sharpening and nudging nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpenConfig<T> {
    /// Steepness of the two sigmoids in the softabs function.
    pub stiffness: T,
    /// Inverse softmax temperature.
    pub tau: T,
    /// Steepness of the nudging activations.
    pub alpha: T,
}

impl<T: Scalar> SharpenConfig<T> {
    pub fn new(stiffness: T, tau: T, alpha: T) -> Result<Self> {
        let cfg = Self {
            stiffness,
            tau,
            alpha,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("stiffness", self.stiffness),
            ("tau", self.tau),
            ("alpha", self.alpha),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

impl<T: Scalar> Default for SharpenConfig<T> {
    fn default() -> Self {
        Self {
            stiffness: T::lit(10.0),
            tau: T::lit(10.0),
            alpha: T::lit(4.0),
        }
    }
}

/// Which normalization turns similarity scores into an attention vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attention {
    #[default]
    Softabs,
    Softmax,
}

#[inline]
fn logistic<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Soft absolute sharpening: a pair of sigmoids centered at `±0.5`.
///
/// Symmetric in `c`, smallest at `c = 0` and close to 1 for `|c| → 1`.
pub fn softabs_sharpen<T: Scalar>(c: T, cfg: &SharpenConfig<T>) -> T {
    let half = T::lit(0.5);
    logistic(cfg.stiffness * (c - half)) + logistic(cfg.stiffness * (-c - half))
}

pub fn softabs_attention<T: Scalar>(scores: &[T], cfg: &SharpenConfig<T>) -> Result<Vec<T>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    ensure_finite(scores)?;
    let sharpened: Vec<T> = scores.iter().map(|&c| softabs_sharpen(c, cfg)).collect();
    let total: T = sharpened.iter().copied().sum();
    Ok(sharpened.into_iter().map(|e| e / total).collect())
}

pub fn softmax_attention<T: Scalar>(scores: &[T], cfg: &SharpenConfig<T>) -> Result<Vec<T>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    ensure_finite(scores)?;
    let max = scores
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| a.max(b));
    let exps: Vec<T> = scores
        .iter()
        .map(|&l| (cfg.tau * (l - max)).exp())
        .collect();
    let total: T = exps.iter().copied().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

pub fn attention<T: Scalar>(
    kind: Attention,
    scores: &[T],
    cfg: &SharpenConfig<T>,
) -> Result<Vec<T>> {
    match kind {
        Attention::Softabs => softabs_attention(scores, cfg),
        Attention::Softmax => softmax_attention(scores, cfg),
    }
}

/// Symmetric double-exponential penalty `e^(αc) + e^(-αc) - 2`.
pub fn nudge_activation<T: Scalar>(c: T, cfg: &SharpenConfig<T>) -> T {
    let a = cfg.alpha * c;
    a.exp() + (-a).exp() - T::lit(2.0)
}

/// Derivative of [`nudge_activation`] with respect to `c`.
pub fn nudge_activation_deriv<T: Scalar>(c: T, cfg: &SharpenConfig<T>) -> T {
    let a = cfg.alpha * c;
    cfg.alpha * (a.exp() - (-a).exp())
}

/// Single-exponential penalty `e^(αc) - 1`, driving pairs toward
/// anti-correlation rather than orthogonality.
pub fn nudge_activation_anticorr<T: Scalar>(c: T, cfg: &SharpenConfig<T>) -> T {
    (cfg.alpha * c).exp() - T::one()
}

pub fn nudge_activation_anticorr_deriv<T: Scalar>(c: T, cfg: &SharpenConfig<T>) -> T {
    cfg.alpha * (cfg.alpha * c).exp()
}

/// Circular convolution, `out[k] = Σ_j a[j] · b[(k - j) mod d]`.
pub fn circ_convolve<T: Scalar>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    ensure_same_dim(a.len(), b.len())?;
    ensure_finite(a)?;
    ensure_finite(b)?;
    let d = a.len();
    let mut out = vec![T::zero(); d];
    for (j, &aj) in a.iter().enumerate() {
        if aj == T::zero() {
            continue;
        }
        // out[j + m] += a[j] * b[m]
        let (head, tail) = b.split_at(d - j);
        for (o, &bm) in out[j..].iter_mut().zip(head) {
            *o += aj * bm;
        }
        for (o, &bm) in out[..j].iter_mut().zip(tail) {
            *o += aj * bm;
        }
    }
    Ok(out)
}

/// Circular correlation, `out[k] = Σ_j a[j] · b[(j + k) mod d]`.
///
/// With a key as the first argument this is the approximate inverse of
/// binding: `circ_correlate(c, circ_convolve(p, c)) ≈ p`.
pub fn circ_correlate<T: Scalar>(a: &[T], b: &[T]) -> Result<Vec<T>> {
    ensure_same_dim(a.len(), b.len())?;
    ensure_finite(a)?;
    ensure_finite(b)?;
    let d = a.len();
    let mut out = vec![T::zero(); d];
    for (j, &aj) in a.iter().enumerate() {
        if aj == T::zero() {
            continue;
        }
        // k = (m - j) mod d for b[m]
        let (head, tail) = b.split_at(j);
        for (o, &bm) in out[..d - j].iter_mut().zip(tail) {
            *o += aj * bm;
        }
        for (o, &bm) in out[d - j..].iter_mut().zip(head) {
            *o += aj * bm;
        }
    }
    Ok(out)
}

/// Seed of a reproducible random binding key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeySeed(pub u32);

impl KeySeed {
    pub fn offset(self, by: u32) -> Self {
        KeySeed(self.0.wrapping_add(by))
    }
}

/// Draws `d` i.i.d. `N(0, 1/d)` entries from a ChaCha8 stream seeded by `seed`.
pub fn key_from_seed<T: Scalar>(seed: KeySeed, d: usize) -> Vec<T> {
    assert!(d >= 1, "key dimension must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from(seed.0));
    let normal = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("valid std");
    (0..d).map(|_| T::lit(normal.sample(&mut rng))).collect()
}
