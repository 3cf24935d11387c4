//! Empirical activity thresholds.

use crate::stats::order_statistic;
use crate::{Error, Result};

/// Threshold whose exceedance rate over the null sample is at most `p_fa`:
/// the lower `(1 - p_fa)` order statistic of the sorted null statistics.
pub fn threshold_from_null(mut null: Vec<f64>, p_fa: f64) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::InvalidArgument(format!("P_FA {p_fa} outside (0, 1)")));
    }
    if null.is_empty() {
        return Err(Error::DegenerateNull("no null statistics".into()));
    }
    if null.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateNull("non-finite null statistic".into()));
    }
    null.sort_by(f64::total_cmp);
    if null[0] == null[null.len() - 1] {
        return Err(Error::DegenerateNull(format!("all {} values equal {}", null.len(), null[0])));
    }
    if (null.len() as f64) < 100.0 / p_fa {
        log::warn!(
            "calibrating P_FA = {p_fa:e} from only {} null samples (recommended >= {})",
            null.len(),
            (100.0 / p_fa).ceil()
        );
    }
    order_statistic(&null, 1.0 - p_fa)
}
