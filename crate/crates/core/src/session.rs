//! Session-by-session class-incremental learning.
//!
//! A [`Learner`] owns the only state that crosses session boundaries: the
//! embedding layer, the prototype memory and (when retraining is possible)
//! the averaged-activation memory. Incremental sessions receive nothing but
//! their own support set.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{ClassId, Dataset, Sample};
use crate::embed::{self, EmbedLayer, RetrainConfig};
use crate::error::{Error, Result};
use crate::hdvec::{self, Attention, KeySeed, SharpenConfig};
use crate::mat;
use crate::memory::{self, CompressedMemory, ExplicitMemory, GaaMemory};
use crate::nudge::{self, NudgeConfig, NudgeVariant};
use crate::scalar::Scalar;

/// One novel session: `ways` new classes with `shots` samples each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NovelSession {
    pub ways: usize,
    pub shots: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSchedule {
    pub base_class_count: usize,
    #[serde(default)]
    pub novel_sessions: Vec<NovelSession>,
}

impl SessionSchedule {
    /// 60 base classes followed by eight 5-way 5-shot sessions.
    pub fn mini_imagenet() -> Self {
        Self::uniform(60, 8, 5, 5)
    }

    /// Same shape as [`SessionSchedule::mini_imagenet`].
    pub fn cifar100() -> Self {
        Self::uniform(60, 8, 5, 5)
    }

    /// 1200 base classes followed by nine 47-way 5-shot sessions.
    pub fn omniglot() -> Self {
        Self::uniform(1200, 9, 47, 5)
    }

    pub fn uniform(base: usize, sessions: usize, ways: usize, shots: usize) -> Self {
        Self {
            base_class_count: base,
            novel_sessions: vec![NovelSession { ways, shots }; sessions],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_class_count == 0 {
            return Err(Error::InvalidConfig("base_class_count must be positive".into()));
        }
        if self.novel_sessions.iter().any(|s| s.ways == 0 || s.shots == 0) {
            return Err(Error::InvalidConfig("novel sessions need ways > 0 and shots > 0".into()));
        }
        Ok(())
    }

    pub fn session_count(&self) -> usize {
        1 + self.novel_sessions.len()
    }

    /// Cumulative class count after each session.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut total = self.base_class_count;
        let mut out = vec![total];
        for s in &self.novel_sessions {
            total += s.ways;
            out.push(total);
        }
        out
    }

    pub fn total_classes(&self) -> usize {
        self.base_class_count + self.novel_sessions.iter().map(|s| s.ways).sum::<usize>()
    }

    /// Splits sorted class ids into per-session groups.
    pub fn assign(&self, classes: &[ClassId]) -> Result<Vec<Vec<ClassId>>> {
        self.validate()?;
        let mut sorted = classes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() < self.total_classes() {
            return Err(Error::InsufficientData(format!(
                "schedule needs {} classes, dataset has {}",
                self.total_classes(),
                sorted.len()
            )));
        }
        let mut groups = vec![sorted[..self.base_class_count].to_vec()];
        let mut start = self.base_class_count;
        for s in &self.novel_sessions {
            groups.push(sorted[start..start + s.ways].to_vec());
            start += s.ways;
        }
        Ok(groups)
    }
}

/// Prototype update strategy applied after new classes are added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Mode {
    /// Averaged prototypes only, no gradient updates.
    Averaged = 1,
    /// Bipolarize prototypes, retrain the layer, regenerate.
    Bipolarized = 2,
    /// Nudge prototypes apart, retrain the layer, regenerate.
    Nudged = 3,
}

impl TryFrom<u8> for Mode {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Mode::Averaged),
            2 => Ok(Mode::Bipolarized),
            3 => Ok(Mode::Nudged),
            other => Err(format!("mode must be 1, 2 or 3, got {other}")),
        }
    }
}

impl From<Mode> for u8 {
    fn from(m: Mode) -> u8 {
        m as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeConfig<T> {
    pub mode: Mode,
    pub retrain: RetrainConfig<T>,
    pub nudge: NudgeConfig<T>,
    pub attention: Attention,
    /// Restore the layer from the end of the base session before each
    /// incremental session.
    pub reset_fcl: bool,
    pub compress_em: bool,
    /// Keep the averaged-activation memory even in [`Mode::Averaged`].
    pub keep_gaam: bool,
}

impl<T: Scalar> ModeConfig<T> {
    /// Defaults for the given mode: `T=10, β=0.01` for bipolarized
    /// retraining and `U=100, γ=0.01, T=50, β=0.01` for nudging.
    pub fn for_mode(mode: Mode) -> Self {
        let retrain_iters = match mode {
            Mode::Nudged => 50,
            _ => 10,
        };
        Self {
            mode,
            retrain: RetrainConfig {
                iterations: retrain_iters,
                rate: T::lit(0.01),
            },
            nudge: NudgeConfig {
                iterations: 100,
                rate: T::lit(0.01),
                sharpen: SharpenConfig::default(),
                variant: NudgeVariant::Symmetric,
            },
            attention: Attention::Softabs,
            reset_fcl: false,
            compress_em: false,
            keep_gaam: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.retrain.validate()?;
        self.nudge.validate()
    }

    fn needs_gaam(&self) -> bool {
        self.mode != Mode::Averaged || self.keep_gaam
    }
}

/// What a session's update pipeline produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionDiagnostics {
    pub retrain_trace: Vec<f64>,
    pub nudge_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    /// 1-based; session 1 is the base session.
    pub session: usize,
    pub classes: usize,
    pub accuracy: f64,
    pub mean_abs_offdiag_cos: f64,
    pub max_abs_offdiag_cos: f64,
    pub diagnostics: SessionDiagnostics,
}

/// State carried across sessions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Learner<T> {
    cfg: ModeConfig<T>,
    layer: EmbedLayer<T>,
    base_layer: Option<EmbedLayer<T>>,
    em: ExplicitMemory<T>,
    gaam: Option<GaaMemory<T>>,
    key_seed: KeySeed,
    compressed: Option<CompressedMemory<T>>,
    #[serde(skip)]
    decompressed: Option<ExplicitMemory<T>>,
    sessions_done: usize,
}

impl<T: Scalar> Learner<T> {
    pub fn new(layer: EmbedLayer<T>, cfg: ModeConfig<T>, key_seed: KeySeed) -> Result<Self> {
        cfg.validate()?;
        let gaam = cfg.needs_gaam().then(|| GaaMemory::new(layer.in_dim()));
        Ok(Self {
            em: ExplicitMemory::new(layer.out_dim()),
            gaam,
            cfg,
            layer,
            base_layer: None,
            key_seed,
            compressed: None,
            decompressed: None,
            sessions_done: 0,
        })
    }

    pub fn config(&self) -> &ModeConfig<T> {
        &self.cfg
    }

    pub fn layer(&self) -> &EmbedLayer<T> {
        &self.layer
    }

    pub fn memory(&self) -> &ExplicitMemory<T> {
        &self.em
    }

    pub fn gaa_memory(&self) -> Option<&GaaMemory<T>> {
        self.gaam.as_ref()
    }

    pub fn compressed_memory(&self) -> Option<&CompressedMemory<T>> {
        self.compressed.as_ref()
    }

    pub fn sessions_done(&self) -> usize {
        self.sessions_done
    }

    /// Learns the base classes from all of their samples, then applies the
    /// mode pipeline.
    pub fn run_base_session(&mut self, data: &[Sample<T>]) -> Result<SessionDiagnostics> {
        if self.sessions_done != 0 {
            return Err(Error::InvalidConfig("base session already ran".into()));
        }
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        memory::add_classes_inner(&mut self.em, self.gaam.as_mut(), &self.layer, data, None)?;
        let diag = self.apply_mode()?;
        self.base_layer = Some(self.layer.clone());
        self.finish_session()?;
        Ok(diag)
    }

    /// Learns `ways` new classes from exactly `shots` samples each.
    pub fn run_incremental_session(
        &mut self,
        support: &[Sample<T>],
        shots: usize,
    ) -> Result<SessionDiagnostics> {
        if self.sessions_done == 0 {
            return Err(Error::InvalidConfig("run the base session first".into()));
        }
        if self.cfg.reset_fcl {
            if let Some(base) = &self.base_layer {
                self.layer = base.clone();
            }
        }
        memory::add_classes(&mut self.em, self.gaam.as_mut(), &self.layer, support, shots)?;
        let diag = self.apply_mode()?;
        self.finish_session()?;
        Ok(diag)
    }

    fn apply_mode(&mut self) -> Result<SessionDiagnostics> {
        let mut diag = SessionDiagnostics::default();
        let targets: Array2<T> = match self.cfg.mode {
            Mode::Averaged => return Ok(diag),
            Mode::Bipolarized => self.em.prototypes().mapv(hdvec::bipolar),
            Mode::Nudged => {
                let (nudged, trace) = nudge::run_nudging(&self.em.prototypes(), &self.cfg.nudge)?;
                diag.nudge_trace = trace.into_iter().map(Scalar::as_f64).collect();
                nudged
            }
        };
        let gaam = self
            .gaam
            .as_ref()
            .expect("retraining modes always allocate the GAA memory");
        let (layer, trace) =
            embed::retrain(&self.layer, &targets.view(), &gaam.activations(), &self.cfg.retrain)?;
        diag.retrain_trace = trace.into_iter().map(Scalar::as_f64).collect();
        let regenerated = embed::regenerate_prototypes(&layer, &gaam.activations())?;
        self.layer = layer;
        self.em.set_prototypes(regenerated)?;
        Ok(diag)
    }

    fn finish_session(&mut self) -> Result<()> {
        if self.cfg.compress_em {
            let cm = memory::compress(&self.em, self.key_seed)?;
            // unbind once per session; queries reuse the estimates
            self.decompressed = Some(cm.decompress_all()?);
            self.compressed = Some(cm);
        }
        self.sessions_done += 1;
        Ok(())
    }

    /// Recomputes the unbound prototype estimates after deserialization.
    pub fn rebuild_cache(&mut self) -> Result<()> {
        self.decompressed = match &self.compressed {
            Some(cm) => Some(cm.decompress_all()?),
            None => None,
        };
        Ok(())
    }

    /// Memory that predictions are scored against.
    fn scoring_memory(&self) -> Result<&ExplicitMemory<T>> {
        if !self.cfg.compress_em {
            return Ok(&self.em);
        }
        self.decompressed.as_ref().ok_or(Error::EmptyMemory)
    }

    /// Top-1 predictions for every sample.
    pub fn predict(&self, data: &Dataset<T>) -> Result<Vec<ClassId>> {
        memory::predict_batch(self.scoring_memory()?, &self.layer, &data.feature_matrix().view())
    }

    /// Top-1 accuracy on an evaluation set drawn from learned classes.
    pub fn evaluate(&self, eval: &Dataset<T>) -> Result<f64> {
        if eval.is_empty() {
            return Err(Error::EmptyEvaluation);
        }
        if let Some(s) = eval.samples().iter().find(|s| !self.em.contains(s.label)) {
            return Err(Error::UnknownLabel(s.label));
        }
        let predictions = self.predict(eval)?;
        let correct = predictions
            .iter()
            .zip(eval.samples())
            .filter(|(p, s)| **p == s.label)
            .count();
        Ok(correct as f64 / eval.len() as f64)
    }

    /// Mean and max off-diagonal `|cos|` of the tanh'd stored prototypes.
    pub fn prototype_correlation(&self) -> Result<(f64, f64)> {
        let (mean, max) = mat::offdiag_abs_cosine(&self.em.prototypes())?;
        Ok((mean.as_f64(), max.as_f64()))
    }
}

/// Results of a complete run plus the final learner state.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome<T> {
    pub results: Vec<SessionResult>,
    pub learner: Learner<T>,
}

/// First `shots` samples (dataset order) of each class in `classes`.
fn take_support<T: Scalar>(
    by_class: &std::collections::BTreeMap<ClassId, Vec<&Sample<T>>>,
    classes: &[ClassId],
    shots: usize,
) -> Result<Vec<Sample<T>>> {
    let mut out = Vec::with_capacity(classes.len() * shots);
    for c in classes {
        let samples = by_class.get(c).ok_or(Error::EmptyClass(*c))?;
        if samples.len() < shots {
            return Err(Error::ShotCountMismatch {
                class: *c,
                expected: shots,
                got: samples.len(),
            });
        }
        out.extend(samples[..shots].iter().map(|s| (*s).clone()));
    }
    Ok(out)
}

/// Runs the base session and every novel session, evaluating after each
/// one on the evaluation samples of all classes seen so far.
///
/// Classes are assigned to sessions in ascending id order. The base session
/// uses every training sample of its classes; novel sessions use the first
/// `shots` samples of each class.
pub fn run_experiment<T: Scalar>(
    train: &Dataset<T>,
    eval: &Dataset<T>,
    schedule: &SessionSchedule,
    cfg: &ModeConfig<T>,
    d: usize,
    seed: u64,
) -> Result<ExperimentOutcome<T>> {
    if d == 0 {
        return Err(Error::InvalidConfig("d must be positive".into()));
    }
    if train.dim() != eval.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            got: eval.dim(),
        });
    }
    let groups = schedule.assign(&train.classes())?;
    let layer = EmbedLayer::random(d, train.dim(), seed);
    let mut learner = Learner::new(layer, *cfg, KeySeed(seed as u32))?;
    let by_class = train.by_class();
    let mut seen: std::collections::HashSet<ClassId> = std::collections::HashSet::new();
    let mut results = Vec::with_capacity(groups.len());

    for (idx, classes) in groups.iter().enumerate() {
        let diagnostics = if idx == 0 {
            let base: Vec<Sample<T>> = classes
                .iter()
                .flat_map(|c| by_class[c].iter().map(|s| (*s).clone()))
                .collect();
            learner.run_base_session(&base)?
        } else {
            let shots = schedule.novel_sessions[idx - 1].shots;
            let support = take_support(&by_class, classes, shots)?;
            learner.run_incremental_session(&support, shots)?
        };
        seen.extend(classes.iter().copied());
        let session_eval = eval.filter(|l| seen.contains(&l));
        let accuracy = learner.evaluate(&session_eval)?;
        let (mean_cos, max_cos) = learner.prototype_correlation()?;
        log::info!(
            "session {}: {} classes, accuracy {:.4}",
            idx + 1,
            learner.memory().len(),
            accuracy
        );
        results.push(SessionResult {
            session: idx + 1,
            classes: learner.memory().len(),
            accuracy,
            mean_abs_offdiag_cos: mean_cos,
            max_abs_offdiag_cos: max_cos,
            diagnostics,
        });
    }
    Ok(ExperimentOutcome { results, learner })
}
