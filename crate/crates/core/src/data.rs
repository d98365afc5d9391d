//! Labeled feature vectors produced by the frozen extractor.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dataset-global class identifier.
pub type ClassId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub label: ClassId,
    pub features: Vec<T>,
}

impl<T> Sample<T> {
    pub fn new(label: ClassId, features: Vec<T>) -> Self {
        Self { label, features }
    }
}

/// Ordered collection of samples sharing one feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    dim: usize,
    samples: Vec<Sample<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(dim: usize, samples: Vec<Sample<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyInput);
        }
        for s in &samples {
            if s.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.features.len(),
                });
            }
            if s.features.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { dim, samples })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            samples: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<Sample<T>> {
        self.samples
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<ClassId> {
        let mut c: Vec<ClassId> = self.samples.iter().map(|s| s.label).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Samples grouped by label, preserving file order within each class.
    pub fn by_class(&self) -> BTreeMap<ClassId, Vec<&Sample<T>>> {
        let mut map: BTreeMap<ClassId, Vec<&Sample<T>>> = BTreeMap::new();
        for s in &self.samples {
            map.entry(s.label).or_default().push(s);
        }
        map
    }

    /// Samples whose label satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(ClassId) -> bool) -> Self {
        Self {
            dim: self.dim,
            samples: self
                .samples
                .iter()
                .filter(|s| keep(s.label))
                .cloned()
                .collect(),
        }
    }

    /// Features stacked as columns (`dim × len`).
    pub fn feature_matrix(&self) -> Array2<T> {
        let mut m = Array2::zeros((self.dim, self.samples.len()));
        for (j, s) in self.samples.iter().enumerate() {
            for (i, &x) in s.features.iter().enumerate() {
                m[[i, j]] = x;
            }
        }
        m
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            dim: self.dim,
            samples: self
                .samples
                .iter()
                .map(|s| Sample::new(s.label, s.features.iter().map(|x| U::lit(x.as_f64())).collect()))
                .collect(),
        }
    }
}
