use super::Tolerance;
use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket.
///
/// Returns the midpoint of the final bracket once its width drops below the
/// tolerance, or [`Error::NoRoot`] when `f(lo)` and `f(hi)` share a sign
/// (including when either end evaluates to NaN).
pub fn find_root_monotone<F>(mut f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    let mut evals = 2;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || (f_lo > 0.0) == (f_hi > 0.0) {
        return Err(Error::NoRoot);
    }
    loop {
        let mid = lo + 0.5 * (hi - lo);
        if hi - lo <= tol.width_at(mid) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if evals >= tol.max_eval() {
            return Err(Error::RootNotConverged(evals));
        }
        let f_mid = f(mid);
        evals += 1;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}
