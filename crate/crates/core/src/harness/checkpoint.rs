//! JSON checkpoint of a finished run: the configuration, every session
//! result and the learner state (layer weights, prototype memory,
//! averaged-activation memory and, when enabled, the compressed memory).

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::scalar::Scalar;
use crate::session::{Learner, SessionResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Checkpoint<T> {
    pub config: ExperimentConfig,
    pub results: Vec<SessionResult>,
    pub learner: Learner<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(w, self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let r = BufReader::new(File::open(path)?);
        let mut cp: Self =
            serde_json::from_reader(r).map_err(|e| Error::Serialization(e.to_string()))?;
        cp.learner.rebuild_cache()?;
        Ok(cp)
    }
}
