//! Gaussian-cluster stand-in for extractor outputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub class_count: usize,
    pub d_f: usize,
    /// Standard deviation of the class centers around the origin.
    pub cluster_center_scale: f64,
    /// Standard deviation of samples around their class center.
    pub cluster_sigma: f64,
    pub shots_train: usize,
    pub shots_eval: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cluster_sigma > 0.0 && self.cluster_sigma.is_finite()) {
            return Err(Error::InvalidConfig("cluster_sigma must be > 0".into()));
        }
        if !(self.cluster_center_scale >= 0.0 && self.cluster_center_scale.is_finite()) {
            return Err(Error::InvalidConfig("cluster_center_scale must be >= 0".into()));
        }
        if self.d_f == 0 || self.class_count == 0 {
            return Err(Error::InvalidConfig("d_f and class_count must be positive".into()));
        }
        Ok(())
    }
}

/// Draws one center per class and `shots_train + shots_eval` samples around
/// it. Labels are `0..class_count`; train samples precede eval samples in
/// each class's stream.
pub fn generate_synthetic<T: Scalar>(spec: &SynthSpec) -> Result<(Dataset<T>, Dataset<T>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let center_dist = Normal::new(0.0, spec.cluster_center_scale).expect("validated");
    let noise = Normal::new(0.0, spec.cluster_sigma).expect("validated");
    let mut train = Vec::with_capacity(spec.class_count * spec.shots_train);
    let mut eval = Vec::with_capacity(spec.class_count * spec.shots_eval);
    for class in 0..spec.class_count {
        let center: Vec<f64> = (0..spec.d_f).map(|_| center_dist.sample(&mut rng)).collect();
        for i in 0..spec.shots_train + spec.shots_eval {
            let features = center
                .iter()
                .map(|&c| T::lit(c + noise.sample(&mut rng)))
                .collect();
            let s = Sample::new(class as u32, features);
            if i < spec.shots_train {
                train.push(s);
            } else {
                eval.push(s);
            }
        }
    }
    Ok((Dataset::new(spec.d_f, train)?, Dataset::new(spec.d_f, eval)?))
}
