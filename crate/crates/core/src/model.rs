//! The unit-variance Gaussian mixture: parameters, density, likelihood and
//! the seeded sampler.

use std::io::{self, BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::std_normal_pdf;

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Component means and weights of a mixture whose components all have unit
/// variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct MixtureParams {
    means: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    means: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawParams> for MixtureParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        MixtureParams::new(raw.means, raw.weights)
    }
}

impl From<MixtureParams> for RawParams {
    fn from(p: MixtureParams) -> Self {
        RawParams { means: p.means, weights: p.weights }
    }
}

impl MixtureParams {
    /// Validates and stores the parameters. Weights must be positive and sum
    /// to one within 1e-9; they are rescaled so the stored sum is 1 to
    /// rounding.
    pub fn new(means: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidParams("at least one component is required".into()));
        }
        if means.len() != weights.len() {
            return Err(Error::ComponentMismatch(means.len(), weights.len()));
        }
        if let Some(m) = means.iter().find(|m| !m.is_finite()) {
            return Err(Error::InvalidParams(format!("mean {m} is not finite")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParams(format!("weight {w} is not a positive probability")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParams(format!("weights sum to {sum}, not 1")));
        }
        let weights = if sum == 1.0 { weights } else { weights.iter().map(|w| w / sum).collect() };
        Ok(Self { means, weights })
    }

    pub fn with_equal_weights(means: Vec<f64>) -> Result<Self> {
        let k = means.len().max(1);
        Self::new(means, vec![1.0 / k as f64; k])
    }

    /// Same weights, new means.
    pub fn with_means(&self, means: Vec<f64>) -> Result<Self> {
        Self::new(means, self.weights.clone())
    }

    /// Builds parameters from positive, not necessarily normalised weights.
    pub fn normalized(means: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidParams(format!("weights sum to {sum}")));
        }
        Self::new(means, weights.iter().map(|w| w / sum).collect())
    }

    pub fn components(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mean of the mixture, Σ p_l θ_l.
    pub fn mixture_mean(&self) -> f64 {
        self.means.iter().zip(&self.weights).map(|(m, w)| m * w).sum()
    }

    /// Weighted component density p_l φ(x - θ_l).
    #[inline]
    pub fn component_density(&self, l: usize, x: f64) -> f64 {
        self.weights[l] * std_normal_pdf(x - self.means[l])
    }

    /// ln(p_l) - (x - θ_l)²/2, the weighted log density up to the common
    /// normalising constant.
    #[inline]
    pub(crate) fn component_score(&self, l: usize, x: f64) -> f64 {
        let d = x - self.means[l];
        self.weights[l].ln() - 0.5 * d * d
    }
}

/// Observations x_1..x_n. Always finite.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Sample(Vec<f64>);

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Sample::new(v)
    }
}

impl From<Sample> for Vec<f64> {
    fn from(s: Sample) -> Self {
        s.0
    }
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// FNV-1a over the IEEE bit patterns; equal checksums identify
    /// byte-identical samples for fairness checks.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.0 {
            for b in v.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    /// One value per line, 17 significant digits in positional notation.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for v in &self.0 {
            writeln!(out, "{}", format_decimal17(*v))?;
        }
        out.flush()
    }

    /// Reads the one-column format. Blank lines are skipped.
    pub fn read_csv<R: BufRead>(input: R) -> io::Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let field = line.trim();
            if field.is_empty() {
                continue;
            }
            let v: f64 = field.parse().map_err(|e| {
                io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {field:?}: {e}", lineno + 1))
            })?;
            values.push(v);
        }
        Sample::new(values).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// Formats `x` with 17 significant digits without an exponent, enough to
/// round-trip any f64.
pub fn format_decimal17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.16e}", x);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (16 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// Identifies replication `replication_index` of an experiment seeded with
/// `base_seed`. Each pair maps to its own ChaCha stream, so a replication
/// can be regenerated without touching any other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub replication_index: u64,
}

impl SeedSpec {
    pub fn new(base_seed: u64, replication_index: u64) -> Self {
        Self { base_seed, replication_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.replication_index);
        rng
    }
}

/// Σ_l p_l φ(x - θ_l).
pub fn mixture_pdf(params: &MixtureParams, x: f64) -> f64 {
    (0..params.components()).map(|l| params.component_density(l, x)).sum()
}

/// ln f(x) by log-sum-exp, finite wherever x is.
pub(crate) fn ln_mixture_pdf(params: &MixtureParams, x: f64) -> f64 {
    let k = params.components();
    if k == 1 {
        return params.component_score(0, x) - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    let mut top = f64::NEG_INFINITY;
    for l in 0..k {
        top = top.max(params.component_score(l, x));
    }
    let s: f64 = (0..k).map(|l| (params.component_score(l, x) - top).exp()).sum();
    top + s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

pub fn log_likelihood(params: &MixtureParams, sample: &Sample) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(sample.values().iter().map(|&x| ln_mixture_pdf(params, x)).sum())
}

/// Draws n observations: a component index from the weights, then a unit
/// normal around that component's mean.
pub fn simulate_sample(true_params: &MixtureParams, n: usize, seed: SeedSpec) -> Sample {
    simulate_labeled(true_params, n, seed).0
}

/// As [`simulate_sample`], also returning the latent component of each draw.
pub fn simulate_labeled(true_params: &MixtureParams, n: usize, seed: SeedSpec) -> (Sample, Vec<usize>) {
    let mut rng = seed.rng();
    let k = true_params.components();
    let mut cumulative = Vec::with_capacity(k);
    let mut acc = 0.0;
    for w in true_params.weights() {
        acc += w;
        cumulative.push(acc);
    }
    let mut values = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let l = cumulative.iter().position(|&c| u < c).unwrap_or(k - 1);
        let z: f64 = rng.sample(StandardNormal);
        values.push(true_params.means()[l] + z);
        labels.push(l);
    }
    (Sample(values), labels)
}
