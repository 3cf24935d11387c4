use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::pathloss::{PathlossModel, PathlossParams};
use crate::channel::{ChannelModel, CovarianceSource, PowerDelayProfile};
use crate::detection::DetectorKind;
use crate::estimation::EstimatorKind;
use crate::link::FrequencyAggregation;
use crate::linalg::db_to_linear;
use crate::pilots::{PilotMode, PRB_PILOT_LEN, PRB_SLOT_SYMBOLS};
use crate::{Error, Result};

/// Full experiment configuration.
///
/// Serialized as TOML with one table per section. Every key name is unique
/// across sections so that a single `--key value` override can address it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub system: SystemConfig,
    pub population: PopulationConfig,
    pub link_budget: LinkBudget,
    pub channel: ChannelConfig,
    pub detection: DetectionConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Base-station antennas (M).
    pub antennas: usize,
    /// UEs granted grant-free access, each with a unique pilot (K).
    pub authorized_ues: usize,
    /// Poisson mean of the active-UE count.
    pub mean_active: f64,
    /// Coherence interval in OFDM symbols.
    pub coherence_symbols: usize,
    /// Pilot length in symbols.
    pub pilot_len: usize,
    /// Independent subbands in coherence-interval modes; derived from the
    /// delay spread when absent.
    pub subbands: Option<usize>,
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub pilot_mode: PilotMode,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            antennas: 128,
            authorized_ues: 50,
            mean_active: 10.0,
            coherence_symbols: 168,
            pilot_len: 50,
            subbands: Some(1),
            bandwidth_hz: 40e6,
            subcarrier_spacing_hz: 30e3,
            pilot_mode: PilotMode::OrthogonalCi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerControl {
    FullPower,
    OpenLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PopulationPolicy {
    /// Fresh UE positions and shadowing every trial.
    Redraw,
    /// One population drawn from the run seed and reused by every trial.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    /// Deployed UEs before dropping.
    pub deployed_ues: usize,
    pub cell_radius_m: f64,
    /// Minimum horizontal BS-UE distance.
    pub min_distance_m: f64,
    pub pathloss_model: PathlossModel,
    pub carrier_ghz: f64,
    pub bs_height_m: Option<f64>,
    pub ue_height_m: f64,
    /// Log-normal shadowing deviation; preset value when absent.
    pub shadowing_db: Option<f64>,
    pub pathloss_exponent: f64,
    pub reference_loss_db: f64,
    pub power_control: PowerControl,
    /// Fraction of deployed UEs with the weakest large-scale fading that are
    /// excluded from service.
    pub drop_fraction: f64,
    pub population_policy: PopulationPolicy,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            deployed_ues: 50,
            cell_radius_m: 150.0,
            min_distance_m: 10.0,
            pathloss_model: PathlossModel::UmaNlos,
            carrier_ghz: 4.0,
            bs_height_m: None,
            ue_height_m: 1.5,
            shadowing_db: None,
            pathloss_exponent: 3.5,
            reference_loss_db: 30.0,
            power_control: PowerControl::FullPower,
            drop_fraction: 0.0,
            population_policy: PopulationPolicy::Redraw,
        }
    }
}

/// Link budget from which the normalized pilot and data SNRs are derived.
///
/// The UE spreads its transmit power over the whole system bandwidth, so the
/// per-symbol SNR is `P / (N0 * NF * BW)`. `rho_p` and `rho_u` override the
/// derived values directly. The noise figure is the base station's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudget {
    pub ue_tx_power_dbm: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub rho_p: Option<f64>,
    pub rho_u: Option<f64>,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            ue_tx_power_dbm: 23.0,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 5.0,
            rho_p: None,
            rho_u: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub channel_model: ChannelModel,
    /// RMS delay spread of the exponential power-delay profile.
    pub delay_spread_s: f64,
    pub taps: usize,
    /// Tap spacing; half the delay spread when absent.
    pub tap_spacing_s: Option<f64>,
    /// Correlation between adjacent antennas (exponential model).
    pub antenna_correlation: f64,
    pub covariance_source: CovarianceSource,
    pub covariance_samples: usize,
    /// Small-scale fading variance; calibrated from the generator when absent.
    pub small_scale_variance: Option<f64>,
    pub sinr_aggregation: FrequencyAggregation,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            channel_model: ChannelModel::IidRayleigh,
            delay_spread_s: 363e-9,
            taps: 16,
            tap_spacing_s: None,
            antenna_correlation: 0.0,
            covariance_source: CovarianceSource::Analytic,
            covariance_samples: 1000,
            small_scale_variance: None,
            sinr_aggregation: FrequencyAggregation::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub detector: DetectorKind,
    /// Estimator; chosen from the pilot mode and channel model when absent.
    pub estimator: Option<EstimatorKind>,
    pub p_fa: f64,
    /// Fixed activity threshold. Closed form (NP) or calibrated when absent.
    pub threshold: Option<f64>,
    /// Trials used to calibrate the threshold; sized from `p_fa` when absent.
    pub calibration_trials: Option<usize>,
    pub max_sweeps: usize,
    /// Relative convergence tolerance of the coordinate-descent detectors.
    pub tolerance: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            detector: DetectorKind::Np,
            estimator: None,
            p_fa: 1e-3,
            threshold: None,
            calibration_trials: None,
            max_sweeps: 50,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub trials: u64,
    pub rng_seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub quantile_levels: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            trials: 1000,
            rng_seed: 1,
            workers: 0,
            quantile_levels: vec![0.1, 0.01, 0.001],
        }
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Int,
    Float,
    Text,
    FloatList,
}

// (section, key, kind) for every overridable field.
const FIELDS: &[(&str, &str, Kind)] = &[
    ("system", "antennas", Kind::Int),
    ("system", "authorized_ues", Kind::Int),
    ("system", "mean_active", Kind::Float),
    ("system", "coherence_symbols", Kind::Int),
    ("system", "pilot_len", Kind::Int),
    ("system", "subbands", Kind::Int),
    ("system", "bandwidth_hz", Kind::Float),
    ("system", "subcarrier_spacing_hz", Kind::Float),
    ("system", "pilot_mode", Kind::Text),
    ("population", "deployed_ues", Kind::Int),
    ("population", "cell_radius_m", Kind::Float),
    ("population", "min_distance_m", Kind::Float),
    ("population", "pathloss_model", Kind::Text),
    ("population", "carrier_ghz", Kind::Float),
    ("population", "bs_height_m", Kind::Float),
    ("population", "ue_height_m", Kind::Float),
    ("population", "shadowing_db", Kind::Float),
    ("population", "pathloss_exponent", Kind::Float),
    ("population", "reference_loss_db", Kind::Float),
    ("population", "power_control", Kind::Text),
    ("population", "drop_fraction", Kind::Float),
    ("population", "population_policy", Kind::Text),
    ("link_budget", "ue_tx_power_dbm", Kind::Float),
    ("link_budget", "noise_density_dbm_hz", Kind::Float),
    ("link_budget", "noise_figure_db", Kind::Float),
    ("link_budget", "rho_p", Kind::Float),
    ("link_budget", "rho_u", Kind::Float),
    ("channel", "channel_model", Kind::Text),
    ("channel", "delay_spread_s", Kind::Float),
    ("channel", "taps", Kind::Int),
    ("channel", "tap_spacing_s", Kind::Float),
    ("channel", "antenna_correlation", Kind::Float),
    ("channel", "covariance_source", Kind::Text),
    ("channel", "covariance_samples", Kind::Int),
    ("channel", "small_scale_variance", Kind::Float),
    ("channel", "sinr_aggregation", Kind::Text),
    ("detection", "detector", Kind::Text),
    ("detection", "estimator", Kind::Text),
    ("detection", "p_fa", Kind::Float),
    ("detection", "threshold", Kind::Float),
    ("detection", "calibration_trials", Kind::Int),
    ("detection", "max_sweeps", Kind::Int),
    ("detection", "tolerance", Kind::Float),
    ("run", "trials", Kind::Int),
    ("run", "rng_seed", Kind::Int),
    ("run", "workers", Kind::Int),
    ("run", "quantile_levels", Kind::FloatList),
];

/// Parses a kebab-case identifier into one of the config enums.
pub(crate) fn parse_kebab<T: DeserializeOwned>(text: &str) -> Result<T> {
    T::deserialize(toml::Value::String(text.to_string()))
        .map_err(|e| Error::Config(format!("`{text}`: {e}")))
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(scenario)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario always serializes")
    }

    /// Names of every field that [`Scenario::set`] accepts.
    pub fn field_names() -> impl Iterator<Item = &'static str> {
        FIELDS.iter().map(|(_, key, _)| *key)
    }

    /// Overrides one field by name (`-` and `_` are interchangeable).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let (section, _, kind) = FIELDS
            .iter()
            .find(|(_, k, _)| *k == key)
            .ok_or_else(|| Error::Config(format!("unknown scenario field `{key}`")))?;
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{key} = `{value}`: {e}"));
        let parsed = match kind {
            Kind::Int => toml::Value::Integer(value.trim().parse::<i64>().map_err(|e| bad(&e))?),
            Kind::Float => toml::Value::Float(value.trim().parse::<f64>().map_err(|e| bad(&e))?),
            Kind::Text => toml::Value::String(value.trim().to_string()),
            Kind::FloatList => toml::Value::Array(
                value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map(toml::Value::Float))
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(&e))?,
            ),
        };
        let mut table = toml::Table::try_from(&*self).map_err(|e| bad(&e))?;
        table
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .expect("sections are tables")
            .insert(key.clone(), parsed);
        *self = Scenario::deserialize(toml::Value::Table(table)).map_err(|e| bad(&e))?;
        Ok(())
    }

    /// Short stable digest of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Digest of everything that influences a calibrated threshold: the run
    /// section and any fixed threshold are excluded.
    pub fn calibration_hash(&self) -> String {
        let mut key = self.clone();
        key.run = RunConfig::default();
        key.detection.threshold = None;
        key.detection.calibration_trials = None;
        key.hash()
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        let p = &self.population;
        let fail = |msg: String| Err(Error::InvalidScenario(msg));

        if s.antennas == 0 || s.authorized_ues == 0 || s.pilot_len == 0 {
            return fail("antennas, authorized_ues and pilot_len must be at least 1".into());
        }
        if s.pilot_len > s.coherence_symbols {
            return fail(format!(
                "pilot_len {} exceeds coherence_symbols {}",
                s.pilot_len, s.coherence_symbols
            ));
        }
        if !(s.mean_active >= 0.0 && s.mean_active <= s.authorized_ues as f64) {
            return fail(format!("mean_active {} outside [0, authorized_ues]", s.mean_active));
        }
        for (name, v) in [
            ("bandwidth_hz", s.bandwidth_hz),
            ("subcarrier_spacing_hz", s.subcarrier_spacing_hz),
            ("cell_radius_m", p.cell_radius_m),
            ("carrier_ghz", p.carrier_ghz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive"));
            }
        }
        if s.subbands == Some(0) {
            return fail("subbands must be at least 1".into());
        }
        match s.pilot_mode {
            PilotMode::OrthogonalCi if s.pilot_len < s.authorized_ues => {
                return fail(format!(
                    "orthogonal pilots need pilot_len >= authorized_ues ({} < {})",
                    s.pilot_len, s.authorized_ues
                ));
            }
            PilotMode::GoldPrb
                if s.pilot_len != PRB_PILOT_LEN || s.coherence_symbols != PRB_SLOT_SYMBOLS =>
            {
                return fail(format!(
                    "gold-prb mode requires pilot_len = {PRB_PILOT_LEN} and coherence_symbols = {PRB_SLOT_SYMBOLS}"
                ));
            }
            _ => {}
        }
        if !(p.min_distance_m >= 0.0 && p.min_distance_m < p.cell_radius_m) {
            return fail("min_distance_m must lie in [0, cell_radius_m)".into());
        }
        if !(p.drop_fraction >= 0.0 && p.drop_fraction < 1.0) {
            return fail(format!("drop_fraction {} outside [0, 1)", p.drop_fraction));
        }
        if self.retained_count() < s.authorized_ues {
            return fail(format!(
                "only {} UEs remain after dropping, fewer than {} authorized",
                self.retained_count(),
                s.authorized_ues
            ));
        }
        if let Some(sf) = p.shadowing_db {
            if !(sf >= 0.0) {
                return fail("shadowing_db must be non-negative".into());
            }
        }
        for (name, v) in [("rho_p", self.link_budget.rho_p), ("rho_u", self.link_budget.rho_u)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return fail(format!("{name} must be positive"));
                }
            }
        }
        let c = &self.channel;
        if c.channel_model == ChannelModel::TappedDelayLine {
            self.power_delay_profile()?;
        }
        if !(c.antenna_correlation >= 0.0 && c.antenna_correlation < 1.0) {
            return fail("antenna_correlation must lie in [0, 1)".into());
        }
        if c.covariance_samples < 10 {
            return fail("covariance_samples must be at least 10".into());
        }
        if let Some(v) = c.small_scale_variance {
            if !(v > 0.0) {
                return fail("small_scale_variance must be positive".into());
            }
        }

        let d = &self.detection;
        if !(d.p_fa > 0.0 && d.p_fa < 1.0) {
            return fail(format!("p_fa {} outside (0, 1)", d.p_fa));
        }
        if d.max_sweeps == 0 {
            return fail("max_sweeps must be at least 1".into());
        }
        let detector_ok = match d.detector {
            DetectorKind::Np => s.pilot_mode == PilotMode::OrthogonalCi,
            DetectorKind::Ml | DetectorKind::Mmv | DetectorKind::Nnls => {
                s.pilot_mode != PilotMode::GoldPrb
            }
            DetectorKind::PrbMl => s.pilot_mode == PilotMode::GoldPrb,
            DetectorKind::Perfect => true,
        };
        if !detector_ok {
            return fail(format!(
                "detector {:?} is not available with pilot mode {:?}",
                d.detector, s.pilot_mode
            ));
        }
        let estimator_ok = match self.estimator() {
            EstimatorKind::Diagonal => s.pilot_mode != PilotMode::GoldPrb,
            EstimatorKind::PerUe => s.pilot_mode == PilotMode::OrthogonalCi,
            EstimatorKind::Prb => s.pilot_mode == PilotMode::GoldPrb,
        };
        if !estimator_ok {
            return fail(format!(
                "estimator {:?} is not available with pilot mode {:?}",
                self.estimator(),
                s.pilot_mode
            ));
        }
        if self.run.quantile_levels.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
            return fail("quantile levels must lie in (0, 1)".into());
        }
        Ok(())
    }

    pub fn retained_count(&self) -> usize {
        let n = self.population.deployed_ues;
        n - dropped_count(self.population.drop_fraction, n)
    }

    pub fn pathloss(&self) -> PathlossParams {
        let p = &self.population;
        PathlossParams {
            model: p.pathloss_model,
            carrier_ghz: p.carrier_ghz,
            bs_height_m: p.bs_height_m.unwrap_or(p.pathloss_model.default_bs_height_m()),
            ue_height_m: p.ue_height_m,
            shadowing_db: p.shadowing_db.unwrap_or(p.pathloss_model.default_shadowing_db()),
            exponent: p.pathloss_exponent,
            reference_loss_db: p.reference_loss_db,
        }
    }

    fn budget_snr(&self) -> f64 {
        let b = &self.link_budget;
        let noise_dbm = b.noise_density_dbm_hz
            + b.noise_figure_db
            + 10.0 * self.system.bandwidth_hz.log10();
        db_to_linear(b.ue_tx_power_dbm - noise_dbm)
    }

    /// Normalized SNR of one pilot symbol.
    pub fn rho_p(&self) -> f64 {
        self.link_budget.rho_p.unwrap_or_else(|| self.budget_snr())
    }

    /// Normalized SNR of one data symbol.
    pub fn rho_u(&self) -> f64 {
        self.link_budget.rho_u.unwrap_or_else(|| self.budget_snr())
    }

    pub fn power_delay_profile(&self) -> Result<PowerDelayProfile> {
        let c = &self.channel;
        PowerDelayProfile::exponential(c.delay_spread_s, c.taps, c.tap_spacing_s)
    }

    /// Coherence bandwidth, `1 / (2 * 50 * delay_spread)`.
    pub fn coherence_bandwidth_hz(&self) -> f64 {
        1.0 / (2.0 * 50.0 * self.channel.delay_spread_s)
    }

    /// Subband count in coherence-interval modes, derived from the coherence
    /// bandwidth unless configured. Never more than the subcarrier count.
    pub fn subbands(&self) -> usize {
        let s = &self.system;
        let max = ((s.bandwidth_hz / s.subcarrier_spacing_hz).floor() as usize).max(1);
        s.subbands
            .unwrap_or_else(|| (s.bandwidth_hz / self.coherence_bandwidth_hz()).floor() as usize)
            .clamp(1, max)
    }

    pub fn estimator(&self) -> EstimatorKind {
        self.detection.estimator.unwrap_or(match self.system.pilot_mode {
            PilotMode::GoldPrb => EstimatorKind::Prb,
            PilotMode::OrthogonalCi if self.channel.channel_model == ChannelModel::TappedDelayLine => {
                EstimatorKind::PerUe
            }
            _ => EstimatorKind::Diagonal,
        })
    }

    /// Preset used for the coherence-interval UMa NLoS experiments with
    /// orthogonal pilots (tau = K = 50, full power).
    pub fn uma_orthogonal() -> Self {
        Scenario::default()
    }

    /// UMa NLoS with tau = 24 Gold sequences in the coherence-interval setting.
    pub fn uma_gold() -> Self {
        let mut s = Scenario::default();
        s.system.pilot_len = PRB_PILOT_LEN;
        s.system.pilot_mode = PilotMode::GoldCi;
        s.channel.channel_model = ChannelModel::TappedDelayLine;
        s.detection.detector = DetectorKind::Ml;
        s
    }

    /// UMi NLoS, 100 m cell, PRB-compliant Gold pilots, open-loop power
    /// control and 5 % dropping of the weakest deployed UEs.
    pub fn umi_prb() -> Self {
        let mut s = Scenario::default();
        s.system.pilot_len = PRB_PILOT_LEN;
        s.system.pilot_mode = PilotMode::GoldPrb;
        s.population.deployed_ues = 100;
        s.population.cell_radius_m = 100.0;
        s.population.pathloss_model = PathlossModel::UmiNlos;
        s.population.power_control = PowerControl::OpenLoop;
        s.population.drop_fraction = 0.05;
        s.channel.channel_model = ChannelModel::TappedDelayLine;
        s.detection.detector = DetectorKind::PrbMl;
        s
    }
}

/// `ceil(fraction * n)`, guarded against floating-point noise just above an
/// integer.
pub(crate) fn dropped_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let c = x.ceil();
    if c - x > 1.0 - 1e-9 { x.floor() as usize } else { c as usize }
}
