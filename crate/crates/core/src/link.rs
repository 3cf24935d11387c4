//! MMSE combining, instantaneous SINR and effective throughput.
//!
//! The combiner of a detected UE is built from the channel *estimates* of the
//! detected set `B`, while its SINR is scored against the *true* channels of
//! the truly active set `A`, so both misdetections (unmodelled interference)
//! and false alarms (spurious receiver dimensions) cost performance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{solve, CMat, CVec};
use crate::scenario::Scenario;
use crate::Result;

/// Post-decoding SINR loss applied to every SINR before the rate formula.
pub const DECODING_PENALTY_DB: f64 = 1.0;

/// How per-unit SINRs of one UE are combined into the reported value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyAggregation {
    #[default]
    Mean,
    Min,
    /// Only the first frequency unit.
    First,
}

impl FrequencyAggregation {
    pub fn aggregate(self, values: &[f64]) -> f64 {
        if values.is_empty() {
            return 0.0;
        }
        match self {
            FrequencyAggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
            FrequencyAggregation::Min => values.iter().cloned().fold(f64::INFINITY, f64::min),
            FrequencyAggregation::First => values[0],
        }
    }
}

impl std::str::FromStr for FrequencyAggregation {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        crate::scenario::parse_kebab(s)
    }
}

/// MMSE combiners of one frequency unit; `combiners[k]` is zero for `k` not in
/// the detected set.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverBank {
    pub combiners: Vec<CVec>,
}

impl ReceiverBank {
    pub fn combiner(&self, k: usize) -> &CVec {
        &self.combiners[k]
    }
}

/// `v_k = sqrt(rho_u eta_k) (rho_u sum_{j in B} eta_j g_j g_j^H + I)^-1 g_k`
/// for every `k` in `set`, where `g` are the columns of `estimate`.
///
/// Evaluated through the push-through identity
/// `(I + G D G^H)^-1 G = G (I + D G^H G)^-1`, so only a `|B| x |B|` system is
/// solved.
pub fn build_mmse_receiver(estimate: &CMat, eta: &[f64], rho_u: f64, set: &[usize]) -> Result<ReceiverBank> {
    let (antennas, ues) = estimate.shape();
    let mut combiners = vec![CVec::zeros(antennas); ues];
    if set.is_empty() {
        return Ok(ReceiverBank { combiners });
    }
    let g = estimate.select_columns(set);
    let gram = g.ad_mul(&g);
    let n = set.len();
    let mut inner = CMat::identity(n, n);
    for (a, &k) in set.iter().enumerate() {
        let d = rho_u * eta[k];
        for b in 0..n {
            inner[(a, b)] += gram[(a, b)] * d;
        }
    }
    let weights = solve(inner, &CMat::identity(n, n), "MMSE receiver")?;
    let v = &g * weights;
    for (a, &k) in set.iter().enumerate() {
        combiners[k] = v.column(a) * Complex64::from((rho_u * eta[k]).sqrt());
    }
    Ok(ReceiverBank { combiners })
}

/// Instantaneous SINR of UE `k` with combiner `v` against the true channels
/// (`M x K`) of the active UEs:
/// `rho_u eta_k |v^H g_k|^2 / (rho_u sum_{j in A, j != k} eta_j |v^H g_j|^2 + |v|^2)`.
pub fn instantaneous_sinr(v: &CVec, channels: &CMat, eta: &[f64], rho_u: f64, active: &[usize], k: usize) -> f64 {
    let noise = v.norm_squared();
    if noise == 0.0 {
        return 0.0;
    }
    let gain = |j: usize| rho_u * eta[j] * v.dotc(&channels.column(j)).norm_sqr();
    let interference: f64 = active.iter().filter(|&&j| j != k).map(|&j| gain(j)).sum();
    gain(k) / (interference + noise)
}

/// `((tau_c - tau) / tau_c) BW log2(1 + SINR 10^(-penalty / 10))` in bit/s.
pub fn effective_throughput(sinr: f64, scenario: &Scenario) -> f64 {
    let s = &scenario.system;
    throughput(sinr, s.coherence_symbols, s.pilot_len, s.bandwidth_hz)
}

pub fn throughput(sinr: f64, coherence_symbols: usize, pilot_len: usize, bandwidth_hz: f64) -> f64 {
    let overhead = coherence_symbols.saturating_sub(pilot_len) as f64 / coherence_symbols as f64;
    let penalty = 10f64.powf(-DECODING_PENALTY_DB / 10.0);
    overhead * bandwidth_hz * (1.0 + sinr.max(0.0) * penalty).log2()
}
