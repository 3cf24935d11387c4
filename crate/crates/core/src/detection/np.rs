//! Correlation front end and Neyman-Pearson energy detector for orthogonal
//! pilots.
//!
//! With unit-norm orthogonal pilots, `z = phi_k^H y` is CN(0, 1) when UE `k`
//! is silent and CN(0, tau rho_p beta_k + 1) when it transmits. The energy
//! `T_k = sum_{m,n} |z|^2` is then `chi^2_{2MN} / 2` under the null.

use super::DetectionResult;
use crate::linalg::CMat;
use crate::pilots::PilotBook;
use crate::stats::chi_square_inverse_survival;
use crate::{Error, Result};

const ORTHOGONALITY_TOL: f64 = 1e-9;

/// `Z_n = Phi^H Y_n` (`K x M`) for every frequency unit.
pub fn np_correlate(units: &[CMat], book: &PilotBook) -> Result<Vec<CMat>> {
    let defect = book.orthogonality_defect();
    if defect > ORTHOGONALITY_TOL {
        return Err(Error::NonOrthogonalPilots(defect));
    }
    let phi_h = book.phi.adjoint();
    Ok(units.iter().map(|y| &phi_h * y).collect())
}

/// Per-UE energy over antennas and frequency units.
pub fn np_statistics(z: &[CMat]) -> Vec<f64> {
    let ues = z.first().map_or(0, |u| u.nrows());
    let mut t = vec![0.0; ues];
    for unit in z {
        for (k, row) in unit.row_iter().enumerate() {
            t[k] += row.iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
    }
    t
}

/// Closed-form NP threshold `Q^{-1}_{chi^2(2MN)}(P_FA) * sigma0^2 / 2` with
/// unit noise variance.
pub fn np_threshold(p_fa: f64, antennas: usize, units: usize) -> Result<f64> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::InvalidArgument(format!("P_FA {p_fa} outside (0, 1)")));
    }
    let dof = 2.0 * (antennas * units) as f64;
    Ok(chi_square_inverse_survival(dof, p_fa)? / 2.0)
}

pub fn np_detect(statistic: &[f64], p_fa: f64, antennas: usize, units: usize) -> Result<DetectionResult> {
    let threshold = np_threshold(p_fa, antennas, units)?;
    Ok(DetectionResult::from_statistics(statistic.to_vec(), threshold, 0))
}
