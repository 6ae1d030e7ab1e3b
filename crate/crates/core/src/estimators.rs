//! One-step updates and the iteration driver for VT, VA1, VA2 and EM.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adjustment::{
    delta_on, va2_invert, weight_correction_on, AdjustmentMode, InversionBracket, IsoPartitionFamily,
};
use crate::error::{Error, Result};
use crate::model::{MixtureParams, Sample};
use crate::numerics::Tolerance;
use crate::partition::{subsample_stats, voronoi_partition, SubsampleStats};

/// Floor applied to corrected weight estimates before renormalising.
pub const WEIGHT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Vt,
    Va1,
    Va2,
    Em,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Vt, Algorithm::Va1, Algorithm::Va2, Algorithm::Em];

    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Vt => "VT",
            Algorithm::Va1 => "VA1",
            Algorithm::Va2 => "VA2",
            Algorithm::Em => "EM",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vt" => Ok(Algorithm::Vt),
            "va1" => Ok(Algorithm::Va1),
            "va2" => Ok(Algorithm::Va2),
            "em" => Ok(Algorithm::Em),
            other => Err(Error::InvalidConfig(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Stop once the L2 distance between consecutive mean vectors drops below this.
    pub step_tol: f64,
    pub max_iter: usize,
    /// Not serialised: experiment configs carry this at the top level.
    #[serde(skip)]
    pub weights_known: bool,
    pub mode: AdjustmentMode,
    #[serde(skip)]
    pub record_trajectory: bool,
    #[serde(skip)]
    pub va2_bracket: InversionBracket,
    #[serde(skip)]
    pub root_tol: Tolerance,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            step_tol: 1e-3,
            max_iter: 1000,
            weights_known: true,
            mode: AdjustmentMode::Exact,
            record_trajectory: false,
            va2_bracket: InversionBracket::default(),
            root_tol: Tolerance::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("step_tol must be > 0, got {}", self.step_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    /// A step hit a degenerate parameter vector (e.g. coinciding means); the
    /// last valid parameters are reported.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub algorithm: Algorithm,
    pub final_params: MixtureParams,
    pub iterations: usize,
    pub per_iter_seconds: f64,
    pub total_seconds: f64,
    pub terminated: Termination,
    pub trajectory: Option<Vec<MixtureParams>>,
}

/// Cell means with the empty-cell freeze rule, plus an optional additive correction.
fn corrected_means(params: &MixtureParams, stats: &SubsampleStats, delta: Option<&[f64]>) -> Vec<f64> {
    (0..params.components())
        .map(|l| match stats.cell_mean(l) {
            Some(mu) => mu + delta.map_or(0.0, |d| d[l]),
            None => params.means()[l],
        })
        .collect()
}

/// P̂_n(S_l) + D_l for non-empty cells, p_l for empty ones; floored and
/// renormalised.
fn corrected_weights(params: &MixtureParams, stats: &SubsampleStats, correction: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = (0..params.components())
        .map(|l| {
            if stats.counts()[l] > 0 {
                (stats.cell_fraction(l) + correction[l]).clamp(WEIGHT_FLOOR, 1.0)
            } else {
                params.weights()[l]
            }
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|w| w / sum).collect()
}

fn check_sample(sample: &Sample) -> Result<()> {
    if sample.is_empty() {
        Err(Error::EmptySample)
    } else {
        Ok(())
    }
}

/// Viterbi training: each mean becomes its cell's sample mean.
///
/// With unknown weights the cell fractions are shifted by the weight
/// correction D(θ, p) before renormalising, as for the adjusted variants.
pub fn vt_step(params: &MixtureParams, sample: &Sample, weights_known: bool) -> Result<MixtureParams> {
    check_sample(sample)?;
    let partition = voronoi_partition(params)?;
    let stats = subsample_stats(&partition, sample)?;
    let means = corrected_means(params, &stats, None);
    if weights_known {
        return params.with_means(means);
    }
    let weights = corrected_weights(params, &stats, &weight_correction_on(params, &partition));
    MixtureParams::new(means, weights)
}

/// Adjusted Viterbi training: the VT cell means plus Δ(θ).
pub fn va1_step(
    params: &MixtureParams,
    sample: &Sample,
    weights_known: bool,
    mode: AdjustmentMode,
) -> Result<MixtureParams> {
    check_sample(sample)?;
    let partition = voronoi_partition(params)?;
    let stats = subsample_stats(&partition, sample)?;
    let delta = delta_on(params, &partition, mode);
    let means = corrected_means(params, &stats, Some(&delta));
    if weights_known {
        return params.with_means(means);
    }
    let weights = corrected_weights(params, &stats, &weight_correction_on(params, &partition));
    MixtureParams::new(means, weights)
}

/// Second-order adjustment with the default inversion bracket and tolerance.
pub fn va2_step(params: &MixtureParams, sample: &Sample, weights_known: bool) -> Result<MixtureParams> {
    va2_step_with(
        params,
        sample,
        weights_known,
        AdjustmentMode::Exact,
        &InversionBracket::default(),
        &Tolerance::default(),
    )
}

/// Each cell mean is mapped back through the restricted limiting map of the
/// current decision boundary; a component whose inversion fails takes the
/// VA1 update instead.
pub fn va2_step_with(
    params: &MixtureParams,
    sample: &Sample,
    weights_known: bool,
    mode: AdjustmentMode,
    bracket: &InversionBracket,
    tol: &Tolerance,
) -> Result<MixtureParams> {
    if params.components() != 2 {
        return Err(Error::Va2NeedsTwoComponents(params.components()));
    }
    check_sample(sample)?;
    let partition = voronoi_partition(params)?;
    let stats = subsample_stats(&partition, sample)?;
    let delta = delta_on(params, &partition, mode);
    let (left, right) = (partition.labels()[0], partition.labels()[1]);
    let family = IsoPartitionFamily::new(partition.breakpoints()[0], params.weights()[left], params.weights()[right])?;

    let mut means = params.means().to_vec();
    for (side, comp) in [(0, left), (1, right)] {
        let Some(mu_hat) = stats.cell_mean(comp) else { continue };
        means[comp] = match va2_invert(&family, mu_hat, side, bracket, tol) {
            Ok(a) => {
                let (m1, m2) = family.means(a);
                if side == 0 {
                    m1
                } else {
                    m2
                }
            }
            Err(_) => mu_hat + delta[comp],
        };
    }
    if weights_known {
        return params.with_means(means);
    }
    let weights = corrected_weights(params, &stats, &weight_correction_on(params, &partition));
    MixtureParams::new(means, weights)
}

/// Posterior component probabilities of one observation, normalised to sum to 1.
pub fn em_responsibilities(params: &MixtureParams, x: f64) -> Vec<f64> {
    let mut r: Vec<f64> = (0..params.components()).map(|l| params.component_score(l, x)).collect();
    let top = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in r.iter_mut() {
        *v = (*v - top).exp();
        sum += *v;
    }
    for v in r.iter_mut() {
        *v /= sum;
    }
    r
}

/// Standard EM update for unit-variance components.
pub fn em_step(params: &MixtureParams, sample: &Sample, weights_known: bool) -> Result<MixtureParams> {
    check_sample(sample)?;
    let k = params.components();
    let mut mass = vec![0.0; k];
    let mut moment = vec![0.0; k];
    let mut scores = vec![0.0; k];
    for &x in sample.values() {
        let mut top = f64::NEG_INFINITY;
        for (l, s) in scores.iter_mut().enumerate() {
            *s = params.component_score(l, x);
            top = top.max(*s);
        }
        let mut sum = 0.0;
        for s in scores.iter_mut() {
            *s = (*s - top).exp();
            sum += *s;
        }
        for l in 0..k {
            let r = scores[l] / sum;
            mass[l] += r;
            moment[l] += r * x;
        }
    }
    let means: Vec<f64> = (0..k).map(|l| if mass[l] > 0.0 { moment[l] / mass[l] } else { params.means()[l] }).collect();
    if weights_known {
        return params.with_means(means);
    }
    let n = sample.len() as f64;
    let weights: Vec<f64> = mass.iter().map(|m| (m / n).max(f64::MIN_POSITIVE)).collect();
    MixtureParams::normalized(means, weights)
}

pub fn step(
    algorithm: Algorithm,
    params: &MixtureParams,
    sample: &Sample,
    config: &RunConfig,
) -> Result<MixtureParams> {
    match algorithm {
        Algorithm::Vt => vt_step(params, sample, config.weights_known),
        Algorithm::Va1 => va1_step(params, sample, config.weights_known, config.mode),
        Algorithm::Va2 => {
            va2_step_with(params, sample, config.weights_known, config.mode, &config.va2_bracket, &config.root_tol)
        }
        Algorithm::Em => em_step(params, sample, config.weights_known),
    }
}

fn mean_shift(a: &MixtureParams, b: &MixtureParams) -> f64 {
    a.means().iter().zip(b.means()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Iterates `algorithm` from `init` until the means move less than
/// `step_tol` (the converging step is counted) or `max_iter` steps were taken.
pub fn run_estimator(
    algorithm: Algorithm,
    init: &MixtureParams,
    sample: &Sample,
    config: &RunConfig,
) -> Result<EstimationResult> {
    config.validate()?;
    check_sample(sample)?;
    if algorithm == Algorithm::Va2 && init.components() != 2 {
        return Err(Error::Va2NeedsTwoComponents(init.components()));
    }
    let mut trajectory = config.record_trajectory.then(|| vec![init.clone()]);
    let start = Instant::now();
    let mut current = init.clone();
    let mut iterations = 0;
    let mut terminated = Termination::MaxIter;
    while iterations < config.max_iter {
        let next = match step(algorithm, &current, sample, config) {
            Ok(next) => next,
            Err(_) => {
                terminated = Termination::Degenerate;
                break;
            }
        };
        iterations += 1;
        let moved = mean_shift(&next, &current);
        current = next;
        if let Some(t) = trajectory.as_mut() {
            t.push(current.clone());
        }
        if moved < config.step_tol {
            terminated = Termination::Converged;
            break;
        }
    }
    let total_seconds = start.elapsed().as_secs_f64();
    let per_iter_seconds = if iterations > 0 { total_seconds / iterations as f64 } else { 0.0 };
    Ok(EstimationResult {
        algorithm,
        final_params: current,
        iterations,
        per_iter_seconds,
        total_seconds,
        terminated,
        trajectory,
    })
}
