use super::special::{std_normal_cdf, std_normal_pdf, std_normal_sf};
use crate::error::{Error, Result};

fn check_interval(a: f64, b: f64) -> Result<()> {
    if a > b || a.is_nan() || b.is_nan() {
        return Err(Error::InvalidInterval { lower: a, upper: b });
    }
    Ok(())
}

/// ∫_a^b φ(x - m) dx. Either bound may be infinite.
pub fn truncated_mass(m: f64, a: f64, b: f64) -> Result<f64> {
    check_interval(a, b)?;
    Ok(mass_unchecked(m, a, b))
}

/// ∫_a^b x φ(x - m) dx = m (Φ(b-m) - Φ(a-m)) - (φ(b-m) - φ(a-m)).
pub fn truncated_first_moment(m: f64, a: f64, b: f64) -> Result<f64> {
    check_interval(a, b)?;
    Ok(first_moment_unchecked(m, a, b))
}

#[inline]
pub(crate) fn mass_unchecked(m: f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (za, zb) = (a - m, b - m);
    let mass = if za >= 0.0 {
        std_normal_sf(za) - std_normal_sf(zb)
    } else if zb <= 0.0 {
        std_normal_cdf(zb) - std_normal_cdf(za)
    } else {
        1.0 - std_normal_cdf(za) - std_normal_sf(zb)
    };
    mass.max(0.0)
}

#[inline]
pub(crate) fn first_moment_unchecked(m: f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    m * mass_unchecked(m, a, b) - (std_normal_pdf(b - m) - std_normal_pdf(a - m))
}
