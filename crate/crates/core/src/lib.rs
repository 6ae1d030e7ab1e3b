//! Parameter estimation for univariate unit-variance Gaussian mixtures by
//! Viterbi training (VT), its adjusted variants VA1 and VA2, EM, and direct
//! likelihood maximisation, plus a replicated Monte-Carlo harness comparing
//! them.
//!
//! ```
//! use avt_core::{run_estimator, simulate_sample, Algorithm, MixtureParams, RunConfig, SeedSpec};
//!
//! let truth = MixtureParams::new(vec![-2.5, 0.0], vec![0.7, 0.3]).unwrap();
//! let sample = simulate_sample(&truth, 1000, SeedSpec::new(42, 0));
//! let init = MixtureParams::new(vec![-1.0, 2.0], vec![0.7, 0.3]).unwrap();
//! let fit = run_estimator(Algorithm::Va1, &init, &sample, &RunConfig::default()).unwrap();
//! assert!(fit.final_params.means()[1].abs() < 0.5);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Oracle constants in tests are quoted at the precision they were computed.
#![cfg_attr(test, allow(clippy::excessive_precision, clippy::needless_range_loop))]

pub mod adjustment;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod partition;

pub use adjustment::{
    adjustment_delta, mu_bar, mu_restricted, va2_invert, weight_correction, AdjustmentMode, InversionBracket,
    IsoPartitionFamily,
};
pub use error::{Error, Result};
pub use estimators::{
    em_step, run_estimator, va1_step, va2_step, vt_step, Algorithm, EstimationResult, RunConfig, Termination,
};
pub use harness::{
    density_table, error_norms, render_raw_csv, render_report, run_experiment, run_experiment_with, run_suite, Column,
    Execution, ExperimentConfig, ExperimentReport, InitRegime, Preset, ReportFormat, RunRecord, Statistic, Summary,
};
pub use model::{log_likelihood, mixture_pdf, simulate_sample, MixtureParams, Sample, SeedSpec};
pub use numerics::{maximize_loglik, Tolerance};
pub use partition::{classify, subsample_stats, voronoi_partition, Partition1D, SubsampleStats};
