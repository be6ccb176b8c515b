//! Dual-wrist accelerometer step detection.
//!
//! Pipelines turn a pair of wrist recordings into step events: each side
//! alone, the two magnitudes fused sample by sample (sum or absolute
//! difference), or the per-side peak sets fused (intersection or union).
//! Around them sit a synthetic gait generator, a cross-validated grid tuner,
//! accuracy and gait-phase evaluation, and the on-disk session formats.

pub mod error;
pub mod eval;
pub mod fusion;
pub mod io;
pub mod peaks;
pub mod preprocess;
pub mod session;
pub mod simgait;
pub mod tuning;
pub mod types;

pub use error::{Error, Result};
pub use eval::{ErrorSummary, Evaluation};
pub use fusion::{run_detector, CorpusNormalization, StepDetection};
pub use io::{Config, SessionManifest};
pub use preprocess::NormalizationContext;
pub use simgait::{CorpusSpec, GaitModelParams, GaitOverrides};
pub use tuning::{CVReport, ParamGrid};
pub use types::{
    AlgorithmId, DetectorParams, GroundTruth, PeakSet, Recording, ScalarSeries, Side, TaskCategory, TriaxialSeries,
    WalkTask,
};
