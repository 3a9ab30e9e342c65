//! Fixtures shared by the benchmarks.

use lrlab_core::synth::{synth_case, OcclusionKind, SynthSpec};
use lrlab_core::{imaging, Matrix};

/// The stacked occluded images of one default-geometry benchmark case.
pub fn benchmark_stack() -> Matrix {
    let spec = SynthSpec::default();
    let case = synth_case(&spec, 0, OcclusionKind::Glasses).expect("default spec is valid");
    imaging::stack(&case.occluded_images)
        .expect("uniform dimensions")
        .into_matrix()
}
