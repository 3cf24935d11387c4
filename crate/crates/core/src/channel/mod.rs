//! Small-scale fading generators and the subcarrier covariance used by the
//! PRB-mode detector and estimator.
//!
//! Every realization is stored per frequency unit as an `M x K` matrix whose
//! column `k` is `sqrt(beta_k) * h_k`. A frequency unit is a subband in the
//! coherence-interval modes and a pilot-bearing subcarrier in PRB mode.

mod io;
mod tdl;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use io::{read_matrix_file, write_matrix_file};
pub use tdl::{PowerDelayProfile, TdlGenerator};

use crate::linalg::{complex_normal, CMat};
use crate::pilots::{PilotMode, PRB_PILOT_SUBCARRIERS};
use crate::scenario::Scenario;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelModel {
    /// Unit-variance complex Gaussian per antenna, UE and frequency unit.
    IidRayleigh,
    /// Exponential power-delay profile evaluated at the unit frequencies.
    TappedDelayLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceSource {
    /// Closed form implied by the power-delay profile.
    Analytic,
    /// Average of outer products over noise-free channel draws.
    Sample,
}

/// Channel coefficients of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// One `M x K` matrix per frequency unit.
    pub units: Vec<CMat>,
}

impl ChannelRealization {
    pub fn antennas(&self) -> usize {
        self.units.first().map_or(0, |u| u.nrows())
    }

    pub fn ues(&self) -> usize {
        self.units.first().map_or(0, |u| u.ncols())
    }

    pub fn frequency_units(&self) -> usize {
        self.units.len()
    }

    pub fn is_finite(&self) -> bool {
        self.units.iter().all(|u| u.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// Centre frequencies (relative to the first unit) of the frequency units the
/// simulator evaluates.
pub fn unit_frequencies(scenario: &Scenario) -> Vec<f64> {
    match scenario.system.pilot_mode {
        PilotMode::GoldPrb => PRB_PILOT_SUBCARRIERS
            .iter()
            .map(|&s| (s - 1) as f64 * scenario.system.subcarrier_spacing_hz)
            .collect(),
        _ => {
            let n = scenario.subbands();
            let width = scenario.system.bandwidth_hz / n as f64;
            (0..n).map(|i| i as f64 * width).collect()
        }
    }
}

/// Independent CN(0, 1) small-scale fading scaled by `sqrt(beta_k)`.
pub fn gen_iid_rayleigh<R: Rng + ?Sized>(
    antennas: usize,
    beta: &[f64],
    units: usize,
    rng: &mut R,
) -> ChannelRealization {
    let units = (0..units)
        .map(|_| {
            let mut g = CMat::zeros(antennas, beta.len());
            for (k, &b) in beta.iter().enumerate() {
                let amp = b.sqrt();
                for m in 0..antennas {
                    g[(m, k)] = complex_normal(rng) * amp;
                }
            }
            g
        })
        .collect();
    ChannelRealization { units }
}

/// Per-UE covariance between the channel coefficients of the frequency units
/// (the six pilot subcarriers in PRB mode).
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierCovariance {
    /// `per_ue[k][(s, s')] = E[g_k(s) conj(g_k(s'))]`.
    pub per_ue: Vec<CMat>,
}

impl SubcarrierCovariance {
    /// Scales a normalized (unit large-scale gain) covariance by each UE's beta.
    pub fn from_normalized(normalized: &CMat, beta: &[f64]) -> Self {
        SubcarrierCovariance {
            per_ue: beta.iter().map(|&b| normalized * num_complex::Complex64::from(b)).collect(),
        }
    }
}

/// Normalized frequency covariance of the configured small-scale model at
/// `freqs`, analytic or sampled from `samples` noise-free draws.
pub fn normalized_frequency_covariance<R: Rng + ?Sized>(
    scenario: &Scenario,
    freqs: &[f64],
    source: CovarianceSource,
    samples: usize,
    rng: &mut R,
) -> Result<CMat> {
    match scenario.channel.channel_model {
        ChannelModel::IidRayleigh => {
            // independent units
            if source == CovarianceSource::Sample {
                check_samples(samples)?;
                let mut acc = CMat::zeros(freqs.len(), freqs.len());
                for _ in 0..samples {
                    let h = crate::linalg::CVec::from_fn(freqs.len(), |_, _| complex_normal(rng));
                    acc += &h * h.adjoint();
                }
                Ok(acc / num_complex::Complex64::from(samples as f64))
            } else {
                Ok(CMat::identity(freqs.len(), freqs.len()))
            }
        }
        ChannelModel::TappedDelayLine => {
            let gen = TdlGenerator::new(
                scenario.power_delay_profile()?,
                freqs,
                scenario.channel.antenna_correlation,
            )?;
            match source {
                CovarianceSource::Analytic => Ok(gen.analytic_covariance()),
                CovarianceSource::Sample => gen.sample_covariance(samples, rng),
            }
        }
    }
}

/// Per-UE subcarrier covariance for the given large-scale gains.
pub fn subcarrier_covariance<R: Rng + ?Sized>(
    scenario: &Scenario,
    beta: &[f64],
    source: CovarianceSource,
    rng: &mut R,
) -> Result<SubcarrierCovariance> {
    let freqs = unit_frequencies(scenario);
    let normalized = normalized_frequency_covariance(
        scenario,
        &freqs,
        source,
        scenario.channel.covariance_samples,
        rng,
    )?;
    Ok(SubcarrierCovariance::from_normalized(&normalized, beta))
}

pub(crate) fn check_samples(samples: usize) -> Result<()> {
    if samples < 10 {
        return Err(Error::InvalidArgument(format!(
            "covariance needs at least 10 draws, got {samples}"
        )));
    }
    Ok(())
}

/// Variance of the small-scale coefficients produced by the configured
/// generator, measured over `samples` coefficients.
pub fn calibrate_small_scale_variance<R: Rng + ?Sized>(
    scenario: &Scenario,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    check_samples(samples)?;
    let freqs = unit_frequencies(scenario);
    let mut acc = 0.0;
    match scenario.channel.channel_model {
        ChannelModel::IidRayleigh => {
            for _ in 0..samples {
                acc += complex_normal(rng).norm_sqr();
            }
        }
        ChannelModel::TappedDelayLine => {
            let gen = TdlGenerator::new(scenario.power_delay_profile()?, &freqs[..1], 0.0)?;
            for _ in 0..samples {
                acc += gen.small_scale(rng)[0].norm_sqr();
            }
        }
    }
    Ok(acc / samples as f64)
}

/// Generates one realization for the scenario's channel model.
pub fn generate<R: Rng + ?Sized>(
    scenario: &Scenario,
    tdl: Option<&TdlGenerator>,
    beta: &[f64],
    rng: &mut R,
) -> Result<ChannelRealization> {
    let antennas = scenario.system.antennas;
    match scenario.channel.channel_model {
        ChannelModel::IidRayleigh => {
            Ok(gen_iid_rayleigh(antennas, beta, unit_frequencies(scenario).len(), rng))
        }
        ChannelModel::TappedDelayLine => {
            let owned;
            let gen = match tdl {
                Some(g) => g,
                None => {
                    owned = TdlGenerator::new(
                        scenario.power_delay_profile()?,
                        &unit_frequencies(scenario),
                        scenario.channel.antenna_correlation,
                    )?;
                    &owned
                }
            };
            Ok(gen.generate(antennas, beta, rng))
        }
    }
}
