use num_complex::Complex64;
use rand::Rng;

use super::{check_samples, ChannelRealization};
use crate::linalg::{complex_normal, CMat, CVec};
use crate::{Error, Result};

/// Discrete power-delay profile with unit total power.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub delays_s: Vec<f64>,
    pub powers: Vec<f64>,
}

impl PowerDelayProfile {
    /// Exponential profile `p_l ~ exp(-tau_l / delay_spread)` on a uniform
    /// delay grid starting at zero. The spacing defaults to half the delay
    /// spread.
    pub fn exponential(delay_spread_s: f64, taps: usize, spacing_s: Option<f64>) -> Result<Self> {
        if !(delay_spread_s > 0.0 && delay_spread_s.is_finite()) {
            return Err(Error::InvalidPdp(format!("delay spread {delay_spread_s} must be positive")));
        }
        if taps == 0 {
            return Err(Error::InvalidPdp("at least one tap is required".into()));
        }
        let spacing = spacing_s.unwrap_or(delay_spread_s / 2.0);
        if !(spacing > 0.0) {
            return Err(Error::InvalidPdp(format!("tap spacing {spacing} must be positive")));
        }
        let delays_s: Vec<f64> = (0..taps).map(|l| l as f64 * spacing).collect();
        let raw: Vec<f64> = delays_s.iter().map(|t| (-t / delay_spread_s).exp()).collect();
        let total: f64 = raw.iter().sum();
        Ok(PowerDelayProfile {
            delays_s,
            powers: raw.into_iter().map(|p| p / total).collect(),
        })
    }

    pub fn taps(&self) -> usize {
        self.delays_s.len()
    }

    /// `sum_l p_l exp(-j 2 pi df tau_l)`: correlation of the frequency
    /// response at two frequencies `df` apart.
    pub fn frequency_correlation(&self, df: f64) -> Complex64 {
        self.delays_s
            .iter()
            .zip(&self.powers)
            .map(|(&t, &p)| Complex64::from_polar(p, -std::f64::consts::TAU * df * t))
            .sum()
    }
}

/// Tapped-delay-line generator evaluated at a fixed set of frequencies.
///
/// Tap gains are CN(0, p_l), independent across taps and UEs; across antennas
/// they follow an exponential correlation `rho^|m - m'|`.
#[derive(Debug, Clone)]
pub struct TdlGenerator {
    pdp: PowerDelayProfile,
    freqs: Vec<f64>,
    antenna_correlation: f64,
    // freqs x taps: sqrt(p_l) exp(-j 2 pi f tau_l)
    response: CMat,
}

impl TdlGenerator {
    pub fn new(pdp: PowerDelayProfile, freqs: &[f64], antenna_correlation: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&antenna_correlation) {
            return Err(Error::InvalidArgument(format!(
                "antenna correlation {antenna_correlation} outside [0, 1)"
            )));
        }
        let response = CMat::from_fn(freqs.len(), pdp.taps(), |f, l| {
            Complex64::from_polar(
                pdp.powers[l].sqrt(),
                -std::f64::consts::TAU * freqs[f] * pdp.delays_s[l],
            )
        });
        Ok(TdlGenerator {
            pdp,
            freqs: freqs.to_vec(),
            antenna_correlation,
            response,
        })
    }

    pub fn profile(&self) -> &PowerDelayProfile {
        &self.pdp
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    /// One antenna's small-scale frequency response (unit average power).
    pub fn small_scale<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        let taps = CVec::from_fn(self.pdp.taps(), |_, _| complex_normal(rng));
        &self.response * taps
    }

    pub fn generate<R: Rng + ?Sized>(
        &self,
        antennas: usize,
        beta: &[f64],
        rng: &mut R,
    ) -> ChannelRealization {
        let taps = self.pdp.taps();
        let rho = self.antenna_correlation;
        let innovation = (1.0 - rho * rho).sqrt();
        let mut units = vec![CMat::zeros(antennas, beta.len()); self.freqs.len()];
        let mut w = vec![Complex64::ZERO; taps];
        for (k, &b) in beta.iter().enumerate() {
            let amp = b.sqrt();
            for m in 0..antennas {
                for wl in w.iter_mut() {
                    let fresh = complex_normal(rng);
                    *wl = if m == 0 { fresh } else { *wl * rho + fresh * innovation };
                }
                for (f, unit) in units.iter_mut().enumerate() {
                    let mut acc = Complex64::ZERO;
                    for (l, wl) in w.iter().enumerate() {
                        acc += self.response[(f, l)] * wl;
                    }
                    unit[(m, k)] = acc * amp;
                }
            }
        }
        ChannelRealization { units }
    }

    /// Closed-form covariance of the response across the configured
    /// frequencies: `R[f, f'] = sum_l p_l exp(-j 2 pi (f - f') tau_l)`.
    pub fn analytic_covariance(&self) -> CMat {
        let n = self.freqs.len();
        CMat::from_fn(n, n, |a, b| self.pdp.frequency_correlation(self.freqs[a] - self.freqs[b]))
    }

    /// Sample covariance over `draws` single-antenna responses.
    pub fn sample_covariance<R: Rng + ?Sized>(&self, draws: usize, rng: &mut R) -> Result<CMat> {
        check_samples(draws)?;
        let n = self.freqs.len();
        let mut acc = CMat::zeros(n, n);
        for _ in 0..draws {
            let h = self.small_scale(rng);
            acc.ger(Complex64::ONE, &h, &h.conjugate(), Complex64::ONE);
        }
        Ok(acc / Complex64::from(draws as f64))
    }
}
