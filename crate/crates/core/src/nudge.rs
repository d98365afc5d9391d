//! Prototype nudging: gradient descent on the pairwise cross-correlation
//! penalty plus a term that keeps each prototype near its starting point.
//!
//! Both losses act on `tanh` of the prototype columns. The cross-correlation
//! term sums over ordered pairs `i ≠ j`, so every unordered pair contributes
//! twice.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hdvec::{self, ensure_same_dim, SharpenConfig};
use crate::mat;
use crate::scalar::Scalar;

/// Pairwise penalty applied to post-tanh cosines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NudgeVariant {
    /// `e^(αc) + e^(-αc) - 2`: pushes pairs toward orthogonality.
    #[default]
    Symmetric,
    /// `e^(αc) - 1`: pushes pairs toward anti-correlation.
    Anticorr,
}

impl NudgeVariant {
    fn value<T: Scalar>(self, c: T, cfg: &SharpenConfig<T>) -> T {
        match self {
            NudgeVariant::Symmetric => hdvec::nudge_activation(c, cfg),
            NudgeVariant::Anticorr => hdvec::nudge_activation_anticorr(c, cfg),
        }
    }

    fn deriv<T: Scalar>(self, c: T, cfg: &SharpenConfig<T>) -> T {
        match self {
            NudgeVariant::Symmetric => hdvec::nudge_activation_deriv(c, cfg),
            NudgeVariant::Anticorr => hdvec::nudge_activation_anticorr_deriv(c, cfg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NudgeConfig<T> {
    pub iterations: usize,
    pub rate: T,
    pub sharpen: SharpenConfig<T>,
    pub variant: NudgeVariant,
}

impl<T: Scalar> NudgeConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate >= T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "nudge rate must be finite and >= 0, got {}",
                self.rate
            )));
        }
        self.sharpen.validate()
    }
}

/// Current nudged prototypes together with the frozen starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NudgeState<T> {
    current: Array2<T>,
    initial: Array2<T>,
    step: usize,
}

impl<T: Scalar> NudgeState<T> {
    pub fn new(initial: Array2<T>) -> Result<Self> {
        if initial.ncols() == 0 || initial.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        mat::ensure_finite(&initial.view())?;
        Ok(Self {
            current: initial.clone(),
            initial,
            step: 0,
        })
    }

    /// State at an arbitrary point `current` with anchor `initial`.
    pub fn at(current: Array2<T>, initial: Array2<T>) -> Result<Self> {
        ensure_same_dim(initial.nrows(), current.nrows())?;
        ensure_same_dim(initial.ncols(), current.ncols())?;
        mat::ensure_finite(&current.view())?;
        let mut s = Self::new(initial)?;
        s.current = current;
        Ok(s)
    }

    pub fn current(&self) -> ArrayView2<'_, T> {
        self.current.view()
    }

    pub fn initial(&self) -> ArrayView2<'_, T> {
        self.initial.view()
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn into_current(self) -> Array2<T> {
        self.current
    }

    pub fn loss(&self, cfg: &NudgeConfig<T>) -> Result<T> {
        Ok(loss_lo_variant(&self.current.view(), &cfg.sharpen, cfg.variant)?
            + loss_lm(&self.current.view(), &self.initial.view())?)
    }

    /// One update `K ← K - rate · ∇(L_O + L_M)`.
    pub fn advance(&mut self, cfg: &NudgeConfig<T>) -> Result<()> {
        let g = grad_nudge(self, cfg)?;
        self.current.scaled_add(-cfg.rate, &g);
        self.step += 1;
        Ok(())
    }
}

/// Cross-correlation penalty with the symmetric activation.
pub fn loss_lo<T: Scalar>(k: &ArrayView2<'_, T>, cfg: &SharpenConfig<T>) -> Result<T> {
    loss_lo_variant(k, cfg, NudgeVariant::Symmetric)
}

pub fn loss_lo_variant<T: Scalar>(
    k: &ArrayView2<'_, T>,
    cfg: &SharpenConfig<T>,
    variant: NudgeVariant,
) -> Result<T> {
    mat::ensure_finite(k)?;
    let gram = mat::cosine_gram(&mat::tanh(k).view())?;
    let c = gram.nrows();
    let mut total = T::zero();
    for i in 0..c {
        for j in 0..c {
            if i != j {
                total += variant.value(gram[[i, j]], cfg);
            }
        }
    }
    Ok(total)
}

/// Deviation penalty `-Σ_i cos(tanh(k_i), tanh(k0_i))`.
pub fn loss_lm<T: Scalar>(k: &ArrayView2<'_, T>, k0: &ArrayView2<'_, T>) -> Result<T> {
    ensure_same_dim(k0.nrows(), k.nrows())?;
    ensure_same_dim(k0.ncols(), k.ncols())?;
    mat::ensure_finite(k)?;
    mat::ensure_finite(k0)?;
    let cos = mat::paired_cosines(&mat::tanh(k).view(), &mat::tanh(k0).view())?;
    Ok(-cos.sum())
}

/// Analytic gradient of `L_O + L_M` at the state's current prototypes.
/// Independent of the step size.
pub fn grad_nudge<T: Scalar>(state: &NudgeState<T>, cfg: &NudgeConfig<T>) -> Result<Array2<T>> {
    let unit0 = anchor_units(&state.initial)?;
    Ok(loss_and_grad(&state.current, &unit0, cfg)?.1)
}

fn anchor_units<T: Scalar>(initial: &Array2<T>) -> Result<Array2<T>> {
    let h0 = mat::tanh(&initial.view());
    Ok(mat::normalize_columns(&h0.view(), &mat::column_norms(&h0.view())?))
}

fn loss_and_grad<T: Scalar>(
    k: &Array2<T>,
    unit0: &Array2<T>,
    cfg: &NudgeConfig<T>,
) -> Result<(T, Array2<T>)> {
    mat::ensure_finite(&k.view())?;
    let h = mat::tanh(&k.view());
    let norms = mat::column_norms(&h.view())?;
    let unit = mat::normalize_columns(&h.view(), &norms);
    let gram = unit.t().dot(&unit);
    let c = gram.nrows();

    let mut lo = T::zero();
    // weights[i][j] = φ'(c_ij) off the diagonal
    let mut weights = Array2::zeros((c, c));
    for ((i, j), &g) in gram.indexed_iter() {
        if i != j {
            lo += cfg.variant.value(g, &cfg.sharpen);
            weights[[i, j]] = cfg.variant.deriv(g, &cfg.sharpen);
        }
    }
    let row_dot: Array1<T> = (&weights * &gram).sum_axis(Axis(1));
    let two = T::lit(2.0);
    // ∂L_O/∂h_i = (2/|h_i|) (Σ_j w_ij ĥ_j - (Σ_j w_ij c_ij) ĥ_i)
    let mut grad_h = (unit.dot(&weights) - &unit * &row_dot.view().insert_axis(Axis(0))) * two;

    // ∂L_M/∂h_i = -(ĥ0_i - m_i ĥ_i) / |h_i|
    let m: Array1<T> = (&unit * unit0).sum_axis(Axis(0));
    grad_h = grad_h + &unit * &m.view().insert_axis(Axis(0)) - unit0;

    grad_h /= &norms.view().insert_axis(Axis(0));
    Ok((lo - m.sum(), grad_h * &h.mapv(|x| T::one() - x * x)))
}

/// Runs exactly `iterations` nudging steps from `initial`, which stays the
/// anchor of the deviation term. Returns the final prototypes and the
/// combined loss before the first step and after every step.
pub fn run_nudging<T: Scalar>(
    initial: &ArrayView2<'_, T>,
    cfg: &NudgeConfig<T>,
) -> Result<(Array2<T>, Vec<T>)> {
    cfg.validate()?;
    let mut state = NudgeState::new(initial.to_owned())?;
    let unit0 = anchor_units(&state.initial)?;
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    for step in 0..cfg.iterations {
        let (loss, grad) = loss_and_grad(&state.current, &unit0, cfg)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: step });
        }
        trace.push(loss);
        state.current.scaled_add(-cfg.rate, &grad);
        state.step += 1;
        if state.current.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteLoss { iteration: step + 1 });
        }
    }
    let last = state.loss(cfg)?;
    if !last.is_finite() {
        return Err(Error::NonFiniteLoss {
            iteration: cfg.iterations,
        });
    }
    trace.push(last);
    log::debug!(
        "nudging: {} steps, loss {} -> {}",
        cfg.iterations,
        trace[0],
        last
    );
    Ok((state.into_current(), trace))
}
