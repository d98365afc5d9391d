//! Explicit-memory few-shot class-incremental learning.
//!
//! Class prototypes live in a growing explicit memory of quasi-orthogonal
//! hypervectors produced by a linear layer on top of a frozen feature
//! extractor. New classes are learned from a handful of samples by
//! averaging; optional update modes bipolarize or nudge the prototypes
//! apart and retrain the layer to match, using only per-class averaged
//! activations (no replay of past samples).
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the `f64` instantiation used by the CLI and the tests.

pub mod data;
pub mod embed;
pub mod error;
pub mod harness;
pub mod hdvec;
mod mat;
pub mod memory;
pub mod nudge;
pub mod scalar;
pub mod session;

pub use data::{ClassId, Dataset, Sample};
pub use embed::{EmbedLayer, RetrainConfig};
pub use error::{Error, Result};
pub use hdvec::{Attention, KeySeed, SharpenConfig};
pub use mat::offdiag_abs_cosine;
pub use memory::{CompressedMemory, ExplicitMemory, GaaMemory};
pub use nudge::{NudgeConfig, NudgeState, NudgeVariant};
pub use scalar::Scalar;
pub use session::{Learner, Mode, ModeConfig, SessionResult, SessionSchedule};

pub type EmbedLayer64 = EmbedLayer<f64>;
pub type EmbedLayer32 = EmbedLayer<f32>;
pub type ExplicitMemory64 = ExplicitMemory<f64>;
pub type GaaMemory64 = GaaMemory<f64>;
pub type CompressedMemory64 = CompressedMemory<f64>;
pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type Learner64 = Learner<f64>;
pub type ModeConfig64 = ModeConfig<f64>;
pub type NudgeConfig64 = NudgeConfig<f64>;
pub type SharpenConfig64 = SharpenConfig<f64>;
