use super::optimize::nelder_mead;
use super::Tolerance;
use crate::error::{Error, Result};
use crate::model::{log_likelihood, MixtureParams, Sample};

/// A local maximiser of the mixture log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    /// Components ordered by increasing mean.
    pub params: MixtureParams,
    pub log_likelihood: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out; `params` is then the best
    /// point seen.
    pub converged: bool,
}

/// Unconstrained coordinates: the first mean, log gaps between consecutive
/// means, and (for unknown weights) log weight ratios against the last
/// component. Keeps θ_1 < θ_2 < … by construction.
struct Coordinates {
    k: usize,
    fixed_weights: Option<Vec<f64>>,
}

impl Coordinates {
    fn encode(&self, params: &MixtureParams) -> Vec<f64> {
        let means = params.means();
        let mut y = vec![means[0]];
        y.extend(means.windows(2).map(|w| (w[1] - w[0]).ln()));
        if self.fixed_weights.is_none() {
            let last = params.weights()[self.k - 1];
            y.extend(params.weights()[..self.k - 1].iter().map(|w| (w / last).ln()));
        }
        y
    }

    fn decode(&self, y: &[f64]) -> Option<MixtureParams> {
        let mut means = Vec::with_capacity(self.k);
        means.push(y[0]);
        for g in &y[1..self.k] {
            let next = means[means.len() - 1] + g.exp();
            means.push(next);
        }
        let weights = match &self.fixed_weights {
            Some(w) => w.clone(),
            None => {
                let top = y[self.k..].iter().copied().fold(0.0, f64::max);
                let mut w: Vec<f64> = y[self.k..].iter().map(|r| (r - top).exp()).collect();
                w.push((-top).exp());
                let sum: f64 = w.iter().sum();
                w.iter().map(|v| v / sum).collect()
            }
        };
        MixtureParams::new(means, weights).ok()
    }
}

/// Maximises the log-likelihood over the means (and the weights unless
/// `weights_known`) with Nelder–Mead in ordered coordinates. Convergence
/// means the simplex, and a restart from its best vertex, moved less than
/// `tol.abs_tol()`.
pub fn maximize_loglik(sample: &Sample, init: &MixtureParams, weights_known: bool, tol: &Tolerance) -> Result<MleFit> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let k = init.components();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| init.means()[a].total_cmp(&init.means()[b]));
    let sorted = MixtureParams::new(
        order.iter().map(|&i| init.means()[i]).collect(),
        order.iter().map(|&i| init.weights()[i]).collect(),
    )?;
    if let Some(i) = sorted.means().windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::DuplicateMeans(order[i], order[i + 1]));
    }

    let coords = Coordinates { k, fixed_weights: weights_known.then(|| sorted.weights().to_vec()) };
    let y0 = coords.encode(&sorted);
    let objective = |y: &[f64]| match coords.decode(y) {
        Some(p) => -log_likelihood(&p, sample).unwrap_or(f64::NEG_INFINITY),
        None => f64::INFINITY,
    };
    let result = nelder_mead(objective, &y0, 0.1, tol.abs_tol(), tol.max_eval());
    let params =
        coords.decode(&result.x).ok_or_else(|| Error::InvalidParams("optimiser left the valid region".into()))?;
    Ok(MleFit { params, log_likelihood: -result.fx, evaluations: result.evaluations, converged: result.converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate_sample, SeedSpec};

    fn mle_tol() -> Tolerance {
        Tolerance::new(1e-8, 0.0, 50_000).unwrap()
    }

    #[test]
    fn single_gaussian_mle_is_sample_mean() {
        let s = Sample::new(vec![-1.0, 1.0]).unwrap();
        let init = MixtureParams::new(vec![0.7], vec![1.0]).unwrap();
        let fit = maximize_loglik(&s, &init, true, &mle_tol()).unwrap();
        assert!(fit.converged);
        assert!(fit.params.means()[0].abs() < 1e-7);
    }

    #[test]
    fn symmetric_sample_gives_symmetric_means() {
        let half = [0.3, 1.1, 1.9, 2.4, 3.5, 0.8];
        let mut v: Vec<f64> = half.to_vec();
        v.extend(half.iter().map(|x| -x));
        let s = Sample::new(v).unwrap();
        let init = MixtureParams::with_equal_weights(vec![-1.0, 1.0]).unwrap();
        let fit = maximize_loglik(&s, &init, true, &mle_tol()).unwrap();
        assert!(fit.converged);
        let m = fit.params.means();
        assert!((m[0] + m[1]).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn large_sample_is_near_truth() {
        let truth = MixtureParams::new(vec![-2.5, 0.0], vec![0.7, 0.3]).unwrap();
        let s = simulate_sample(&truth, 100_000, SeedSpec::new(2004, 0));
        let init = MixtureParams::new(vec![-1.0, 2.0], vec![0.7, 0.3]).unwrap();
        let fit = maximize_loglik(&s, &init, true, &mle_tol()).unwrap();
        assert!(fit.converged);
        assert!((fit.params.means()[0] + 2.5).abs() < 0.02 && fit.params.means()[1].abs() < 0.02, "{:?}", fit.params);
    }

    #[test]
    fn unknown_weights_beat_em_start() {
        let truth = MixtureParams::new(vec![-2.5, 0.0], vec![0.7, 0.3]).unwrap();
        let s = simulate_sample(&truth, 1000, SeedSpec::new(11, 0));
        let fit = maximize_loglik(&s, &truth, false, &mle_tol()).unwrap();
        assert!(fit.converged);
        // stationary: EM cannot improve a maximiser
        let em = crate::estimators::em_step(&fit.params, &s, false).unwrap();
        let ll_em = log_likelihood(&em, &s).unwrap();
        assert!(ll_em - fit.log_likelihood < 1e-6);
        assert!((fit.params.means()[0] - em.means()[0]).abs() < 1e-5);
    }

    #[test]
    fn unordered_init_is_sorted() {
        let s = Sample::new(vec![-3.0, -2.5, -2.0, 0.1, 0.4]).unwrap();
        let init = MixtureParams::new(vec![0.0, -2.0], vec![0.4, 0.6]).unwrap();
        let fit = maximize_loglik(&s, &init, true, &mle_tol()).unwrap();
        assert!(fit.params.means()[0] < fit.params.means()[1]);
        assert_eq!(fit.params.weights(), &[0.6, 0.4]);
        let dup = MixtureParams::with_equal_weights(vec![1.0, 1.0]).unwrap();
        assert!(maximize_loglik(&s, &dup, true, &mle_tol()).is_err());
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let s = Sample::new(vec![-3.0, -2.5, 0.1, 0.4]).unwrap();
        let init = MixtureParams::with_equal_weights(vec![-1.0, 1.0]).unwrap();
        let fit = maximize_loglik(&s, &init, false, &Tolerance::new(1e-8, 0.0, 10).unwrap()).unwrap();
        assert!(!fit.converged);
    }
}
