//! Shared fixtures for the benchmarks.

use avt_core::{simulate_sample, MixtureParams, Sample, SeedSpec};

/// The two-component model used throughout the simulation study.
pub fn study_model() -> MixtureParams {
    MixtureParams::new(vec![-2.5, 0.0], vec![0.7, 0.3]).expect("valid model")
}

pub fn study_sample(n: usize) -> Sample {
    simulate_sample(&study_model(), n, SeedSpec::new(1, 0))
}

/// A starting point away from the truth, as in the arbitrary-guess runs.
pub fn arbitrary_start() -> MixtureParams {
    MixtureParams::new(vec![-1.0, 2.0], vec![0.7, 0.3]).expect("valid start")
}
