//! TOML experiment configuration.
//!
//! Unknown keys are rejected. Unset hyperparameters fall back to the
//! per-mode defaults of [`ModeConfig::for_mode`].
//!
//! ```toml
//! d = 512
//! mode = 3
//! seed = 7
//!
//! [schedule]
//! base_class_count = 60
//! novel_sessions = [{ ways = 5, shots = 5 }, { ways = 5, shots = 5 }]
//!
//! [synth]
//! class_count = 70
//! d_f = 640
//! cluster_center_scale = 10.0
//! cluster_sigma = 1.0
//! shots_train = 20
//! shots_eval = 15
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::harness::format::read_embeddings;
use crate::harness::synth::{generate_synthetic, SynthSpec};
use crate::hdvec::{Attention, SharpenConfig};
use crate::nudge::NudgeVariant;
use crate::scalar::Scalar;
use crate::session::{Mode, ModeConfig, SessionSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingPaths {
    pub train: PathBuf,
    pub eval: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    #[serde(default)]
    pub d_f: Option<usize>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(rename = "T", default)]
    pub retrain_iterations: Option<usize>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(rename = "U", default)]
    pub nudge_iterations: Option<usize>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_ten")]
    pub stiffness: f64,
    #[serde(default = "default_ten")]
    pub tau: f64,
    #[serde(default)]
    pub attention: Attention,
    /// Defaults to `anticorr` under softmax attention, `symmetric` otherwise.
    #[serde(default)]
    pub nudge_variant: Option<NudgeVariant>,
    #[serde(default)]
    pub compress_em: bool,
    #[serde(default)]
    pub reset_fcl: bool,
    #[serde(default)]
    pub keep_gaam: bool,
    #[serde(default)]
    pub seed: u64,
    pub schedule: SessionSchedule,
    #[serde(default)]
    pub paths: Option<EmbeddingPaths>,
    #[serde(default)]
    pub synth: Option<SynthSpec>,
}

fn default_mode() -> Mode {
    Mode::Averaged
}

fn default_alpha() -> f64 {
    4.0
}

fn default_ten() -> f64 {
    10.0
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::ConfigParse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; relative data paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let (Some(p), Some(dir)) = (cfg.paths.as_mut(), path.parent()) {
            for f in [&mut p.train, &mut p.eval] {
                if f.is_relative() {
                    *f = dir.join(&*f);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidConfig("d must be positive".into()));
        }
        match (&self.paths, &self.synth) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig("give either [paths] or [synth], not both".into()))
            }
            (None, None) => return Err(Error::InvalidConfig("missing [paths] or [synth]".into())),
            _ => {}
        }
        if let (Some(s), Some(d_f)) = (&self.synth, self.d_f) {
            if s.d_f != d_f {
                return Err(Error::InvalidConfig(format!(
                    "d_f = {d_f} but synth.d_f = {}",
                    s.d_f
                )));
            }
        }
        if let Some(s) = &self.synth {
            s.validate()?;
        }
        self.schedule.validate()?;
        self.mode_config::<f64>().validate()
    }

    pub fn mode_config<T: Scalar>(&self) -> ModeConfig<T> {
        let mut cfg = ModeConfig::<T>::for_mode(self.mode);
        if let Some(t) = self.retrain_iterations {
            cfg.retrain.iterations = t;
        }
        if let Some(b) = self.beta {
            cfg.retrain.rate = T::lit(b);
        }
        if let Some(u) = self.nudge_iterations {
            cfg.nudge.iterations = u;
        }
        if let Some(g) = self.gamma {
            cfg.nudge.rate = T::lit(g);
        }
        cfg.nudge.sharpen = SharpenConfig {
            stiffness: T::lit(self.stiffness),
            tau: T::lit(self.tau),
            alpha: T::lit(self.alpha),
        };
        cfg.attention = self.attention;
        cfg.nudge.variant = self.nudge_variant.unwrap_or(match self.attention {
            Attention::Softabs => NudgeVariant::Symmetric,
            Attention::Softmax => NudgeVariant::Anticorr,
        });
        cfg.reset_fcl = self.reset_fcl;
        cfg.compress_em = self.compress_em;
        cfg.keep_gaam = self.keep_gaam;
        cfg
    }

    /// Train and eval sets from files or the synthetic generator.
    pub fn load_data<T: Scalar>(&self) -> Result<(Dataset<T>, Dataset<T>)> {
        let (train, eval) = match (&self.paths, &self.synth) {
            (Some(p), _) => (read_embeddings(&p.train)?, read_embeddings(&p.eval)?),
            (None, Some(s)) => generate_synthetic(s)?,
            (None, None) => return Err(Error::InvalidConfig("no data source".into())),
        };
        if let Some(d_f) = self.d_f {
            if train.dim() != d_f {
                return Err(Error::DimensionMismatch {
                    expected: d_f,
                    got: train.dim(),
                });
            }
        }
        Ok((train, eval))
    }
}
