//! Decision regions of the weighted-density argmax rule on the real line,
//! and the per-cell statistics of a sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MixtureParams, Sample};

/// Solution of p_i φ(x - θ_i) = p_j φ(x - θ_j) for unit variances. Component
/// i dominates on the side of θ_i.
pub fn pairwise_boundary(theta_i: f64, theta_j: f64, p_i: f64, p_j: f64) -> Result<f64> {
    if theta_i == theta_j {
        return Err(Error::InvalidParams(format!("equal means {theta_i} have no finite boundary")));
    }
    if !(p_i > 0.0 && p_j > 0.0) {
        return Err(Error::InvalidParams("weights must be positive".into()));
    }
    Ok(0.5 * (theta_i + theta_j) + (p_i / p_j).ln() / (theta_j - theta_i))
}

/// The line split into labelled intervals (-∞, b_0], (b_0, b_1], …, (b_{M-1}, ∞).
///
/// Adjacent intervals always carry different labels. A component with no
/// interval has an empty cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition1D {
    breakpoints: Vec<f64>,
    labels: Vec<usize>,
    components: usize,
}

impl Partition1D {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Component owning `x`; breakpoints belong to the interval on their left.
    #[inline]
    pub fn classify(&self, x: f64) -> usize {
        self.labels[self.breakpoints.partition_point(|&b| b < x)]
    }

    /// Intervals (lower, upper) making up the cell of component `l`, left to right.
    pub fn cell(&self, l: usize) -> Vec<(f64, f64)> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == l).map(|i| self.interval(i)).collect()
    }

    pub fn cell_is_empty(&self, l: usize) -> bool {
        !self.labels.contains(&l)
    }

    /// Bounds of the i-th interval.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        let lower = if i == 0 { f64::NEG_INFINITY } else { self.breakpoints[i - 1] };
        let upper = self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
        (lower, upper)
    }

    pub fn intervals(&self) -> impl Iterator<Item = (usize, (f64, f64))> + '_ {
        (0..self.labels.len()).map(move |i| (self.labels[i], self.interval(i)))
    }
}

/// Component whose cell contains `x`.
pub fn classify(partition: &Partition1D, x: f64) -> usize {
    partition.classify(x)
}

/// argmax_l p_l φ(x - θ_l), lowest index on ties.
pub fn dominant_component(params: &MixtureParams, x: f64) -> usize {
    let mut best = 0;
    let mut best_score = params.component_score(0, x);
    for l in 1..params.components() {
        let s = params.component_score(l, x);
        if s > best_score {
            best = l;
            best_score = s;
        }
    }
    best
}

/// Builds the argmax partition from the sorted pairwise boundaries.
///
/// Every pairwise dominance region of two unit-variance components is a
/// half-line, so the argmax is constant between consecutive pairwise
/// boundaries; it is evaluated once per such interval and equal neighbours
/// are merged.
pub fn voronoi_partition(params: &MixtureParams) -> Result<Partition1D> {
    let k = params.components();
    let (means, weights) = (params.means(), params.weights());
    let mut cuts = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            if means[i] == means[j] {
                return Err(Error::DuplicateMeans(i, j));
            }
            cuts.push(pairwise_boundary(means[i], means[j], weights[i], weights[j])?);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    if cuts.is_empty() {
        return Ok(Partition1D { breakpoints: Vec::new(), labels: vec![0], components: k });
    }
    let mut probes = Vec::with_capacity(cuts.len() + 1);
    probes.push(cuts[0] - 1.0);
    probes.extend(cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    probes.push(cuts[cuts.len() - 1] + 1.0);

    let mut breakpoints = Vec::new();
    let mut labels = vec![dominant_component(params, probes[0])];
    for (i, &probe) in probes.iter().enumerate().skip(1) {
        let label = dominant_component(params, probe);
        if label != *labels.last().unwrap() {
            breakpoints.push(cuts[i - 1]);
            labels.push(label);
        }
    }
    Ok(Partition1D { breakpoints, labels, components: k })
}

/// Per-cell counts and sums of a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleStats {
    counts: Vec<usize>,
    sums: Vec<f64>,
    n: usize,
}

impl SubsampleStats {
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn total(&self) -> usize {
        self.n
    }

    /// Subsample MLE of the cell: its sample mean, `None` for an empty cell.
    pub fn cell_mean(&self, l: usize) -> Option<f64> {
        (self.counts[l] > 0).then(|| self.sums[l] / self.counts[l] as f64)
    }

    pub fn cell_means(&self) -> Vec<Option<f64>> {
        (0..self.counts.len()).map(|l| self.cell_mean(l)).collect()
    }

    /// Empirical measure of the cell, N_l / n.
    pub fn cell_fraction(&self, l: usize) -> f64 {
        self.counts[l] as f64 / self.n as f64
    }

    pub fn cell_fractions(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|l| self.cell_fraction(l)).collect()
    }
}

/// Single pass over the sample.
pub fn subsample_stats(partition: &Partition1D, sample: &Sample) -> Result<SubsampleStats> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let k = partition.components();
    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0; k];
    if partition.breakpoints.len() == 1 {
        // Two-cell fast path.
        let (b, left, right) = (partition.breakpoints[0], partition.labels[0], partition.labels[1]);
        for &x in sample.values() {
            let l = if x <= b { left } else { right };
            counts[l] += 1;
            sums[l] += x;
        }
    } else {
        for &x in sample.values() {
            let l = partition.classify(x);
            counts[l] += 1;
            sums[l] += x;
        }
    }
    Ok(SubsampleStats { counts, sums, n: sample.len() })
}
