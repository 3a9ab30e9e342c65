pub mod compare;
pub mod error;
pub mod imaging;
pub mod linalg;
pub mod metrics;
pub mod recognition;
pub mod solvers;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use imaging::{GrayImage, ImageStack};
pub use linalg::{Matrix, SvdFactors};
pub use metrics::QualityScore;
pub use recognition::{Gallery, HistogramProfile, RecognitionResult, SubjectScore};
pub use solvers::{Decomposition, SolverConfig, SolverKind, WeightScheme};
pub use sweep::{CaseResult, SweepConfig, SweepReport, Variant};
pub use synth::{CaseData, OcclusionKind, SynthSpec, SyntheticCase};
