//! Distribution helpers for detector thresholds.

use statrs::function::gamma::gamma_ur;

use crate::{Error, Result};

/// Inverse survival function of Gamma(shape, scale = 1): the `x` with
/// `P(X > x) = p`.
///
/// Solved by bisection on the regularized upper incomplete gamma function, so
/// it stays accurate for the very small tail probabilities used as false-alarm
/// targets (where `1 - p` would lose all precision).
pub fn gamma_inverse_survival(shape: f64, p: f64) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma shape {shape} must be positive")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("tail probability {p} outside (0, 1)")));
    }
    let mut lo = 0.0;
    let mut hi = shape + 10.0 * shape.sqrt() + 10.0;
    while gamma_ur(shape, hi) > p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_ur(shape, mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inverse survival function of the chi-square law with `dof` degrees of
/// freedom.
pub fn chi_square_inverse_survival(dof: f64, p: f64) -> Result<f64> {
    Ok(2.0 * gamma_inverse_survival(dof / 2.0, p)?)
}


/// Lower order-statistic quantile of ascending `sorted` samples: the smallest
/// sample `x` with empirical CDF `F(x) >= p`, i.e. `sorted[ceil(p n) - 1]`.
/// Levels below `1 / n` return the minimum.
pub fn order_statistic(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("quantile level {p} outside (0, 1]")));
    }
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}
