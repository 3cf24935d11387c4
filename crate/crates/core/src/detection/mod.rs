//! Activity detection: which authorized UEs transmitted in this interval.
//!
//! * [`np`]: correlation plus Neyman-Pearson energy test for orthogonal
//!   pilots, with a closed-form chi-square threshold.
//! * [`coordinate`]: covariance-based coordinate descent (ML, MMV, NNLS) for
//!   non-orthogonal pilots, and its PRB variant that weights each UE's update
//!   by its subcarrier covariance.
//! * [`calibrate`]: empirical thresholds from null statistics.

pub mod calibrate;
pub mod coordinate;
pub mod np;

use serde::{Deserialize, Serialize};

pub use calibrate::threshold_from_null;
pub use coordinate::{
    coordinate_descent, coordinate_descent_detect, prb_ml_detect, prb_signatures,
    sample_covariance, CoordinateState, CoordinateVariant, Signature, SweepOptions,
};
pub use np::{np_correlate, np_detect, np_statistics, np_threshold};

use crate::scenario::ActivityPattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    Np,
    Ml,
    Mmv,
    Nnls,
    PrbMl,
    /// Oracle: the detected set is the true active set.
    Perfect,
}

impl DetectorKind {
    pub fn id(self) -> &'static str {
        match self {
            DetectorKind::Np => "np",
            DetectorKind::Ml => "ml",
            DetectorKind::Mmv => "mmv",
            DetectorKind::Nnls => "nnls",
            DetectorKind::PrbMl => "prb-ml",
            DetectorKind::Perfect => "perfect",
        }
    }

    pub fn variant(self) -> Option<CoordinateVariant> {
        match self {
            DetectorKind::Ml | DetectorKind::PrbMl => Some(CoordinateVariant::Ml),
            DetectorKind::Mmv => Some(CoordinateVariant::Mmv),
            DetectorKind::Nnls => Some(CoordinateVariant::Nnls),
            DetectorKind::Np | DetectorKind::Perfect => None,
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        crate::scenario::parse_kebab(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Detected set, ascending.
    pub active: Vec<usize>,
    /// Per-UE test statistic (NP energy or coordinate-descent gamma).
    pub statistic: Vec<f64>,
    pub threshold: f64,
    /// Sweeps run by the coordinate-descent detectors, zero otherwise.
    pub iterations: usize,
}

impl DetectionResult {
    /// UEs whose statistic exceeds `threshold`.
    pub fn from_statistics(statistic: Vec<f64>, threshold: f64, iterations: usize) -> Self {
        let active = statistic
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > threshold)
            .map(|(k, _)| k)
            .collect();
        DetectionResult {
            active,
            statistic,
            threshold,
            iterations,
        }
    }

    /// Oracle result with the detected set equal to the true one.
    pub fn perfect(activity: &ActivityPattern) -> Self {
        let statistic = activity.indicator.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
        DetectionResult {
            active: activity.active.clone(),
            statistic,
            threshold: 0.5,
            iterations: 0,
        }
    }

    pub fn contains(&self, k: usize) -> bool {
        self.active.binary_search(&k).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholding_is_strict() {
        let r = DetectionResult::from_statistics(vec![0.0, 1.0, 2.0, 1.0 + 1e-12], 1.0, 3);
        assert_eq!(r.active, vec![2, 3]);
        assert!(r.contains(2) && !r.contains(1));
    }

    #[test]
    fn perfect_detection_copies_truth() {
        let a = ActivityPattern::from_active(6, &[4, 1]);
        let r = DetectionResult::perfect(&a);
        assert_eq!(r.active, vec![1, 4]);
    }

    #[test]
    fn detector_ids_roundtrip() {
        for d in [
            DetectorKind::Np,
            DetectorKind::Ml,
            DetectorKind::Mmv,
            DetectorKind::Nnls,
            DetectorKind::PrbMl,
            DetectorKind::Perfect,
        ] {
            assert_eq!(d.id().parse::<DetectorKind>().unwrap(), d);
        }
    }
}
