//! Column-oriented matrix helpers. Matrices are `rows × columns` with one
//! vector (prototype, activation, target) per column.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::hdvec::ZERO_NORM;
use crate::scalar::Scalar;

pub(crate) fn ensure_finite<T: Scalar>(m: &ArrayView2<'_, T>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub(crate) fn tanh<T: Scalar>(m: &ArrayView2<'_, T>) -> Array2<T> {
    m.mapv(|x| x.tanh())
}

/// Euclidean norm of every column; fails if any is (numerically) zero.
pub(crate) fn column_norms<T: Scalar>(m: &ArrayView2<'_, T>) -> Result<Array1<T>> {
    let norms = m.map_axis(Axis(0), |col| col.dot(&col).sqrt());
    let eps = T::lit(ZERO_NORM);
    if norms.iter().any(|&n| n.is_nan() || n < eps) {
        return Err(Error::ZeroVector);
    }
    Ok(norms)
}

/// Divides every column by its norm.
pub(crate) fn normalize_columns<T: Scalar>(
    m: &ArrayView2<'_, T>,
    norms: &Array1<T>,
) -> Array2<T> {
    m / &norms.view().insert_axis(Axis(0))
}

/// Column-wise cosine between two equally shaped matrices.
pub(crate) fn paired_cosines<T: Scalar>(
    a: &ArrayView2<'_, T>,
    b: &ArrayView2<'_, T>,
) -> Result<Array1<T>> {
    let an = normalize_columns(a, &column_norms(a)?);
    let bn = normalize_columns(b, &column_norms(b)?);
    Ok((&an * &bn).sum_axis(Axis(0)))
}

/// Cosine Gram matrix of the columns of `m`.
pub(crate) fn cosine_gram<T: Scalar>(m: &ArrayView2<'_, T>) -> Result<Array2<T>> {
    let n = normalize_columns(m, &column_norms(m)?);
    Ok(n.t().dot(&n))
}

/// Mean and max of `|cos|` over off-diagonal pairs of `tanh(columns)`.
///
/// Returns zeros for fewer than two columns.
pub fn offdiag_abs_cosine<T: Scalar>(m: &ArrayView2<'_, T>) -> Result<(T, T)> {
    let c = m.ncols();
    if c < 2 {
        return Ok((T::zero(), T::zero()));
    }
    let gram = cosine_gram(&tanh(m).view())?;
    let mut sum = T::zero();
    let mut max = T::zero();
    for i in 0..c {
        for j in 0..c {
            if i != j {
                let v = gram[[i, j]].abs();
                sum += v;
                max = max.max(v);
            }
        }
    }
    Ok((sum / T::lit((c * (c - 1)) as f64), max))
}
