//! Data-independent corrections for Viterbi training.
//!
//! For a parameter vector θ the Viterbi cell means converge to μ_l(θ), the
//! mean of the mixture density truncated to cell l. Adding
//! Δ_l(θ) = θ_l - μ_l(θ) to the empirical cell means makes the true
//! parameters an asymptotic fixed point (VA1); D_l plays the same role for
//! the cell fractions used as weight estimates. The second-order adjustment
//! (VA2) instead inverts μ_l along the one-parameter family of two-component
//! parameters sharing the current decision boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MixtureParams;
use crate::numerics::truncated::{first_moment_unchecked, mass_unchecked};
use crate::numerics::{find_root_monotone, Tolerance};
use crate::partition::{voronoi_partition, Partition1D};

/// Which density is truncated to a cell when computing its limiting mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdjustmentMode {
    /// The full mixture density.
    #[default]
    Exact,
    /// Only the cell's own component; accurate when components are far apart.
    Isolated,
}

/// Per-cell first moment and mass under the chosen density.
pub(crate) fn cell_moments(
    params: &MixtureParams,
    partition: &Partition1D,
    mode: AdjustmentMode,
) -> (Vec<f64>, Vec<f64>) {
    let k = params.components();
    let mut moment = vec![0.0; k];
    let mut mass = vec![0.0; k];
    for (l, (a, b)) in partition.intervals() {
        match mode {
            AdjustmentMode::Exact => {
                for i in 0..k {
                    let (m, p) = (params.means()[i], params.weights()[i]);
                    moment[l] += p * first_moment_unchecked(m, a, b);
                    mass[l] += p * mass_unchecked(m, a, b);
                }
            }
            AdjustmentMode::Isolated => {
                let m = params.means()[l];
                moment[l] += first_moment_unchecked(m, a, b);
                mass[l] += mass_unchecked(m, a, b);
            }
        }
    }
    (moment, mass)
}

pub(crate) fn mu_bar_on(params: &MixtureParams, partition: &Partition1D, mode: AdjustmentMode) -> Vec<Option<f64>> {
    let (moment, mass) = cell_moments(params, partition, mode);
    moment.iter().zip(&mass).map(|(&m, &w)| (w > 0.0).then(|| m / w)).collect()
}

pub(crate) fn delta_on(params: &MixtureParams, partition: &Partition1D, mode: AdjustmentMode) -> Vec<f64> {
    mu_bar_on(params, partition, mode)
        .iter()
        .zip(params.means())
        .map(|(mu, theta)| mu.map_or(0.0, |mu| theta - mu))
        .collect()
}

pub(crate) fn weight_correction_on(params: &MixtureParams, partition: &Partition1D) -> Vec<f64> {
    let (_, mass) = cell_moments(params, partition, AdjustmentMode::Exact);
    params.weights().iter().zip(&mass).map(|(p, m)| p - m).collect()
}

/// Limiting cell means μ_l(θ); `None` for a cell of zero mass.
pub fn mu_bar(params: &MixtureParams, mode: AdjustmentMode) -> Result<Vec<Option<f64>>> {
    let partition = voronoi_partition(params)?;
    Ok(mu_bar_on(params, &partition, mode))
}

/// Δ(θ) = θ - μ(θ), zero for cells with no mass.
pub fn adjustment_delta(params: &MixtureParams, mode: AdjustmentMode) -> Result<Vec<f64>> {
    let partition = voronoi_partition(params)?;
    Ok(delta_on(params, &partition, mode))
}

/// D_l(θ, p) = p_l - P(S_l(θ, p)), the gap between a weight and the mixture
/// mass of its cell. Sums to zero.
pub fn weight_correction(params: &MixtureParams) -> Result<Vec<f64>> {
    let partition = voronoi_partition(params)?;
    Ok(weight_correction_on(params, &partition))
}

/// Two-component parameters sharing the decision boundary `t` at fixed
/// weights, indexed by the half-gap a > 0:
/// θ_1(a) = c(a) - a, θ_2(a) = c(a) + a with c(a) = t - ln(p_1/p_2) / (2a).
///
/// Component 0 is the left one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoPartitionFamily {
    t: f64,
    weights: [f64; 2],
}

impl IsoPartitionFamily {
    pub fn new(t: f64, left_weight: f64, right_weight: f64) -> Result<Self> {
        if !t.is_finite() || !(left_weight > 0.0) || !(right_weight > 0.0) {
            return Err(Error::InvalidParams(format!(
                "family needs a finite boundary and positive weights, got t={t}, p=({left_weight}, {right_weight})"
            )));
        }
        Ok(Self { t, weights: [left_weight, right_weight] })
    }

    pub fn boundary(&self) -> f64 {
        self.t
    }

    pub fn weights(&self) -> [f64; 2] {
        self.weights
    }

    pub fn center(&self, a: f64) -> f64 {
        self.t - (self.weights[0] / self.weights[1]).ln() / (2.0 * a)
    }

    /// (θ_1(a), θ_2(a)).
    pub fn means(&self, a: f64) -> (f64, f64) {
        let c = self.center(a);
        (c - a, c + a)
    }
}

/// μ_l restricted to the family: the mean of the family member's mixture
/// density truncated to (-∞, t] for l = 0 or (t, ∞) for l = 1.
pub fn mu_restricted(family: &IsoPartitionFamily, a: f64, l: usize) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::NonPositiveGap(a));
    }
    let (a_lo, a_hi) = match l {
        0 => (f64::NEG_INFINITY, family.t),
        1 => (family.t, f64::INFINITY),
        _ => return Err(Error::ComponentOutOfRange { index: l, components: 2 }),
    };
    let (m1, m2) = family.means(a);
    let [p1, p2] = family.weights;
    let moment = p1 * first_moment_unchecked(m1, a_lo, a_hi) + p2 * first_moment_unchecked(m2, a_lo, a_hi);
    let mass = p1 * mass_unchecked(m1, a_lo, a_hi) + p2 * mass_unchecked(m2, a_lo, a_hi);
    let mu = moment / mass;
    if !(mass > 0.0) || !mu.is_finite() {
        return Err(Error::ZeroMassCell(l));
    }
    Ok(mu)
}

/// Search range and pre-scan resolution for [`va2_invert`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionBracket {
    pub a_min: f64,
    pub a_max: f64,
    pub scan_points: usize,
}

impl Default for InversionBracket {
    fn default() -> Self {
        Self { a_min: 1e-6, a_max: 50.0, scan_points: 64 }
    }
}

impl InversionBracket {
    fn grid(&self) -> Vec<f64> {
        let n = self.scan_points;
        let ratio = (self.a_max / self.a_min).ln() / (n - 1) as f64;
        (0..n).map(|i| if i == n - 1 { self.a_max } else { self.a_min * (ratio * i as f64).exp() }).collect()
    }
}

/// Solves mu_restricted(family, a, l) = mu_hat for the half-gap a.
///
/// The bracket is pre-scanned on a logarithmic grid. Only the monotone branch
/// reaching `a_max` (well-separated components) is searched: with unequal
/// weights the heavier component's map turns over at small a, and points on
/// that side put both means on one side of the boundary. Returns
/// [`Error::NoRoot`] unless that branch has exactly one sign change.
pub fn va2_invert(
    family: &IsoPartitionFamily,
    mu_hat: f64,
    l: usize,
    bracket: &InversionBracket,
    tol: &Tolerance,
) -> Result<f64> {
    if !(bracket.a_min > 0.0 && bracket.a_min < bracket.a_max) || bracket.scan_points < 2 {
        return Err(Error::InvalidBracket { lo: bracket.a_min, hi: bracket.a_max });
    }
    if l > 1 {
        return Err(Error::ComponentOutOfRange { index: l, components: 2 });
    }
    let grid = bracket.grid();
    let values: Vec<Option<f64>> = grid.iter().map(|&a| mu_restricted(family, a, l).ok()).collect();

    let last = grid.len() - 1;
    let (Some(f_last), Some(f_prev)) = (values[last], values[last - 1]) else {
        return Err(Error::NoRoot);
    };
    let rising = f_last > f_prev;
    if f_last == f_prev {
        return Err(Error::NoRoot);
    }
    let mut start = last - 1;
    while start > 0 {
        match (values[start - 1], values[start]) {
            (Some(before), Some(here)) if (here > before) == rising && here != before => start -= 1,
            (Some(_), Some(_)) => {
                // turning point lies within (grid[start-1], grid[start+1])
                start += 1;
                break;
            }
            _ => break,
        }
    }

    let residual = |i: usize| values[i].unwrap() - mu_hat;
    let mut crossing = None;
    for (i, &a) in grid.iter().enumerate().take(last).skip(start) {
        let (g0, g1) = (residual(i), residual(i + 1));
        if g0 == 0.0 {
            return Ok(a);
        }
        if (g0 > 0.0) != (g1 > 0.0) {
            if crossing.is_some() {
                return Err(Error::NoRoot);
            }
            crossing = Some(i);
        }
    }
    if residual(last) == 0.0 {
        return Ok(grid[last]);
    }
    let i = crossing.ok_or(Error::NoRoot)?;
    find_root_monotone(|a| mu_restricted(family, a, l).map_or(f64::NAN, |mu| mu - mu_hat), grid[i], grid[i + 1], tol)
}
