//! Monte-Carlo engine.
//!
//! A trial draws (or reuses) a UE population, an activity pattern and the
//! channels of the active UEs, forms the received pilot signal, runs the
//! configured detector and estimator, and scores every active UE. Trials are
//! independent: trial `t` draws from its own ChaCha8 stream derived from
//! `(rng_seed, t)`, so results do not depend on how trials are scheduled over
//! worker threads, and any range of trials can be run separately and merged.

mod cache;
mod compare;
mod result;

use std::ops::Range;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use cache::ThresholdCache;
pub use compare::{compare_scenarios, Assertion, AssertionOutcome, Comparison};
pub use result::{parse_summary, quantile, Quantile, RunResult, UeLabel, UeRecord};

use crate::channel::{
    self, calibrate_small_scale_variance, normalized_frequency_covariance, unit_frequencies,
    ChannelModel, SubcarrierCovariance, TdlGenerator,
};
use crate::detection::{
    coordinate_descent_detect, np_correlate, np_statistics, np_threshold, prb_ml_detect,
    prb_signatures, sample_covariance, threshold_from_null, DetectionResult, DetectorKind,
    Signature, SweepOptions,
};
use crate::estimation::{lmmse_ci_diag, lmmse_ci_perue, lmmse_prb, ChannelEstimate, EstimatorKind};
use crate::linalg::{complex_normal_matrix, CMat};
use crate::link::{build_mmse_receiver, effective_throughput, instantaneous_sinr};
use crate::pilots::{make_gold_pilots, make_orthogonal_pilots_len, PilotBook, PilotMode, PRB_BLOCK_LEN};
use crate::scenario::{build_population, draw_activity, PopulationPolicy, UePopulation};
use crate::{Error, Result, Scenario};

// Stream families; the tag goes into the ChaCha key, the index into the stream.
const TAG_TRIAL: u64 = 1;
const TAG_CALIBRATION: u64 = 2;
const TAG_SETUP: u64 = 3;
const TAG_POPULATION: u64 = 4;

/// Random stream `index` of family `tag` for a run seeded with `seed`.
pub fn trial_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Everything a trial needs that does not change between trials.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub rho_p: f64,
    pub rho_u: f64,
    pub book: PilotBook,
    pub tdl: Option<TdlGenerator>,
    /// Small-scale variance used to scale the estimator priors.
    pub variance: f64,
    /// Unit-gain covariance across the frequency units.
    pub normalized_covariance: CMat,
    pub signatures: Option<Vec<Signature>>,
    pub population: Option<UePopulation>,
    /// `None` only for the perfect detector.
    pub threshold: Option<f64>,
}

impl Prepared {
    /// Builds the trial context and resolves the activity threshold: the
    /// configured value, the closed form for NP, or a calibration run.
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let mut prepared = Self::without_threshold(scenario)?;
        let d = &scenario.detection;
        prepared.threshold = match (d.threshold, d.detector) {
            (Some(t), _) => Some(t),
            (None, DetectorKind::Perfect) => None,
            (None, DetectorKind::Np) => Some(np_threshold(
                d.p_fa,
                scenario.system.antennas,
                prepared.frequency_units(),
            )?),
            (None, detector) => Some(calibrate_prepared(
                &prepared,
                detector,
                d.p_fa,
                default_calibration_trials(scenario),
            )?),
        };
        Ok(prepared)
    }

    fn without_threshold(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let s = &scenario.system;
        let book = match s.pilot_mode {
            PilotMode::OrthogonalCi => make_orthogonal_pilots_len(s.authorized_ues, s.pilot_len)?,
            mode => make_gold_pilots(s.authorized_ues, s.pilot_len, mode)?,
        };
        let freqs = unit_frequencies(scenario);
        let tdl = match scenario.channel.channel_model {
            ChannelModel::TappedDelayLine => Some(TdlGenerator::new(
                scenario.power_delay_profile()?,
                &freqs,
                scenario.channel.antenna_correlation,
            )?),
            ChannelModel::IidRayleigh => None,
        };
        let seed = scenario.run.rng_seed;
        let mut rng = trial_rng(seed, TAG_SETUP, 0);
        let variance = match scenario.channel.small_scale_variance {
            Some(v) => v,
            None => calibrate_small_scale_variance(scenario, scenario.channel.covariance_samples, &mut rng)?,
        };
        let normalized_covariance = normalized_frequency_covariance(
            scenario,
            &freqs,
            scenario.channel.covariance_source,
            scenario.channel.covariance_samples,
            &mut rng,
        )?;
        let signatures = match scenario.detection.detector {
            DetectorKind::PrbMl => {
                let unit = SubcarrierCovariance::from_normalized(&normalized_covariance, &vec![1.0; book.ues()]);
                Some(prb_signatures(&book, &unit)?)
            }
            _ => None,
        };
        let population = match scenario.population.population_policy {
            PopulationPolicy::Fixed => Some(build_population(scenario, &mut trial_rng(seed, TAG_POPULATION, 0))?),
            PopulationPolicy::Redraw => None,
        };
        Ok(Prepared {
            scenario: scenario.clone(),
            rho_p: scenario.rho_p(),
            rho_u: scenario.rho_u(),
            book,
            tdl,
            variance,
            normalized_covariance,
            signatures,
            population,
            threshold: None,
        })
    }

    pub fn frequency_units(&self) -> usize {
        self.normalized_covariance.nrows()
    }

    fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            max_sweeps: self.scenario.detection.max_sweeps,
            tolerance: self.scenario.detection.tolerance,
        }
    }
}

/// Calibration trial count: enough trials for `100 / p_fa` null statistics
/// at the expected number of inactive UEs per trial.
pub fn default_calibration_trials(scenario: &Scenario) -> u64 {
    if let Some(t) = scenario.detection.calibration_trials {
        return t as u64;
    }
    let inactive = (scenario.system.authorized_ues as f64 - scenario.system.mean_active).max(1.0);
    (100.0 / (scenario.detection.p_fa * inactive)).ceil() as u64
}

/// Observations and truth of one trial, before detection.
struct Draw {
    beta: Vec<f64>,
    eta: Vec<f64>,
    active: Vec<usize>,
    amplitude: Vec<f64>,
    /// `M x K` per frequency unit, zero columns for inactive UEs.
    channels: Vec<CMat>,
    /// `tau x M` per frequency unit (a single `24 x M` matrix in PRB mode).
    received: Vec<CMat>,
}

fn draw_trial<R: Rng + ?Sized>(ctx: &Prepared, rng: &mut R) -> Result<Draw> {
    let scenario = &ctx.scenario;
    let owned;
    let population = match &ctx.population {
        Some(p) => p,
        None => {
            owned = build_population(scenario, rng)?;
            &owned
        }
    };
    let beta = population.authorized_beta();
    let eta = population.authorized_eta();
    let activity = draw_activity(scenario, rng);
    let active = activity.active;
    let tau = ctx.book.len() as f64;
    let amplitude: Vec<f64> = eta.iter().map(|&e| (tau * ctx.rho_p * e).sqrt()).collect();

    let active_beta: Vec<f64> = active.iter().map(|&k| beta[k]).collect();
    let compact = channel::generate(scenario, ctx.tdl.as_ref(), &active_beta, rng)?;
    let antennas = scenario.system.antennas;
    let ues = ctx.book.ues();

    let mut channels = Vec::with_capacity(compact.units.len());
    for unit in &compact.units {
        let mut full = CMat::zeros(antennas, ues);
        for (j, &k) in active.iter().enumerate() {
            full.set_column(k, &unit.column(j));
        }
        channels.push(full);
    }

    // pilot columns of the active UEs scaled by their amplitude
    let tx = CMat::from_fn(ctx.book.len(), active.len(), |t, j| {
        ctx.book.phi[(t, active[j])] * amplitude[active[j]]
    });
    let received = if scenario.system.pilot_mode == PilotMode::GoldPrb {
        let mut y = complex_normal_matrix(ctx.book.len(), antennas, rng);
        for (i, unit) in compact.units.iter().enumerate() {
            let rows = i * PRB_BLOCK_LEN..(i + 1) * PRB_BLOCK_LEN;
            let block = tx.rows(rows.start, PRB_BLOCK_LEN) * unit.transpose();
            let mut target = y.rows_mut(rows.start, PRB_BLOCK_LEN);
            target += block;
        }
        vec![y]
    } else {
        compact
            .units
            .iter()
            .map(|unit| complex_normal_matrix(ctx.book.len(), antennas, rng) + &tx * unit.transpose())
            .collect()
    };

    Ok(Draw {
        beta,
        eta,
        active,
        amplitude,
        channels,
        received,
    })
}

/// Runs `detector` on the drawn observations. The threshold is applied by the
/// caller through `threshold` (infinite during calibration).
fn detect<R: Rng + ?Sized>(
    ctx: &Prepared,
    detector: DetectorKind,
    draw: &Draw,
    threshold: f64,
    rng: &mut R,
) -> Result<DetectionResult> {
    match detector {
        DetectorKind::Perfect => Ok(DetectionResult::perfect(
            &crate::scenario::ActivityPattern::from_active(ctx.book.ues(), &draw.active),
        )),
        DetectorKind::Np => {
            let z = np_correlate(&draw.received, &ctx.book)?;
            Ok(DetectionResult::from_statistics(np_statistics(&z), threshold, 0))
        }
        DetectorKind::Ml | DetectorKind::Mmv | DetectorKind::Nnls => {
            let variant = detector.variant().expect("coordinate detector");
            let cov = sample_covariance(&draw.received);
            coordinate_descent_detect(&cov, &ctx.book, variant, ctx.sweep_options(), threshold, rng)
        }
        DetectorKind::PrbMl => {
            let signatures = ctx
                .signatures
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("PRB signatures were not prepared".into()))?;
            let cov = sample_covariance(&draw.received);
            prb_ml_detect(&cov, signatures, ctx.sweep_options(), threshold, rng)
        }
    }
}

fn estimate(ctx: &Prepared, draw: &Draw, set: &[usize]) -> Result<ChannelEstimate> {
    let prior: Vec<f64> = draw.beta.iter().map(|b| b * ctx.variance).collect();
    match ctx.scenario.estimator() {
        EstimatorKind::Diagonal => lmmse_ci_diag(&draw.received, &ctx.book, set, &draw.amplitude, &prior),
        EstimatorKind::PerUe => lmmse_ci_perue(&draw.received, &ctx.book, set, &draw.amplitude, &prior),
        EstimatorKind::Prb => {
            let cov = SubcarrierCovariance::from_normalized(&ctx.normalized_covariance, &draw.beta);
            lmmse_prb(&draw.received[0], &ctx.book, set, &draw.amplitude, &cov)
        }
    }
}

/// Per-trial counts and the records of every active or falsely detected UE.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub records: Vec<UeRecord>,
    pub active: usize,
    pub inactive: usize,
    pub misdetections: usize,
    pub false_alarms: usize,
    pub sweeps: usize,
}

/// Simulates trial `index` of the prepared scenario.
pub fn simulate_trial(ctx: &Prepared, index: u64) -> Result<TrialOutcome> {
    let scenario = &ctx.scenario;
    let mut rng = trial_rng(scenario.run.rng_seed, TAG_TRIAL, index);
    let draw = draw_trial(ctx, &mut rng)?;
    let detector = scenario.detection.detector;
    let threshold = ctx.threshold.unwrap_or(f64::INFINITY);
    let detection = detect(ctx, detector, &draw, threshold, &mut rng)?;
    let detected = &detection.active;
    let est = estimate(ctx, &draw, detected)?;

    let receivers = est
        .units
        .iter()
        .map(|g| build_mmse_receiver(g, &draw.eta, ctx.rho_u, detected))
        .collect::<Result<Vec<_>>>()?;

    let aggregation = scenario.channel.sinr_aggregation;
    let mut records = Vec::with_capacity(draw.active.len());
    let mut misdetections = 0;
    for &k in &draw.active {
        let hit = detection.contains(k);
        let (label, sinr) = if hit {
            let per_unit: Vec<f64> = receivers
                .iter()
                .zip(&draw.channels)
                .map(|(bank, g)| instantaneous_sinr(bank.combiner(k), g, &draw.eta, ctx.rho_u, &draw.active, k))
                .collect();
            (UeLabel::Detected, aggregation.aggregate(&per_unit))
        } else {
            misdetections += 1;
            (UeLabel::Misdetected, 0.0)
        };
        let throughput = if hit { effective_throughput(sinr, scenario) } else { 0.0 };
        records.push(UeRecord {
            trial: index,
            ue: k,
            beta: draw.beta[k],
            eta: draw.eta[k],
            label,
            sinr,
            throughput,
        });
    }
    let mut false_alarms = 0;
    for &k in detected {
        if draw.active.binary_search(&k).is_err() {
            false_alarms += 1;
            records.push(UeRecord {
                trial: index,
                ue: k,
                beta: draw.beta[k],
                eta: draw.eta[k],
                label: UeLabel::FalseAlarm,
                sinr: 0.0,
                throughput: 0.0,
            });
        }
    }
    Ok(TrialOutcome {
        records,
        active: draw.active.len(),
        inactive: ctx.book.ues() - draw.active.len(),
        misdetections,
        false_alarms,
        sweeps: detection.iterations,
    })
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn parallel_map<T: Send>(
    workers: usize,
    range: Range<u64>,
    f: impl Fn(u64) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    thread_pool(workers)?.install(|| {
        range
            .into_par_iter()
            .map(|t| f(t).map_err(|e| Error::Trial { index: t, source: Box::new(e) }))
            .collect()
    })
}

/// Runs trials `0..trials` of `scenario`.
pub fn run(scenario: &Scenario, trials: u64) -> Result<RunResult> {
    run_range(scenario, 0..trials)
}

/// Runs the given trial indices. Merging the results of disjoint ranges gives
/// the same samples as one run over their union.
pub fn run_range(scenario: &Scenario, range: Range<u64>) -> Result<RunResult> {
    let ctx = Prepared::new(scenario)?;
    run_prepared(&ctx, range)
}

pub fn run_prepared(ctx: &Prepared, range: Range<u64>) -> Result<RunResult> {
    let start = Instant::now();
    let trials = range.end.saturating_sub(range.start);
    let outcomes = parallel_map(ctx.scenario.run.workers, range, |t| simulate_trial(ctx, t))?;
    let mut result = RunResult::new(&ctx.scenario, trials, ctx.threshold);
    for o in outcomes {
        result.absorb(o);
    }
    result.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Empirical threshold for `detector` at `p_fa`: the `(1 - p_fa)` quantile of
/// the detector statistic of truly inactive UEs over `trials` synthetic
/// trials of `scenario`.
pub fn calibrate_threshold(detector: DetectorKind, scenario: &Scenario, p_fa: f64, trials: u64) -> Result<f64> {
    let mut s = scenario.clone();
    s.detection.detector = detector;
    s.detection.threshold = None;
    let ctx = Prepared::without_threshold(&s)?;
    calibrate_prepared(&ctx, detector, p_fa, trials)
}

/// Null statistics of inactive UEs collected over `trials` calibration trials.
pub fn null_statistics(ctx: &Prepared, detector: DetectorKind, trials: u64) -> Result<Vec<f64>> {
    if detector == DetectorKind::Perfect {
        return Err(Error::InvalidArgument("the perfect detector has no statistic".into()));
    }
    let seed = ctx.scenario.run.rng_seed;
    let per_trial = parallel_map(ctx.scenario.run.workers, 0..trials, |t| {
        let mut rng = trial_rng(seed, TAG_CALIBRATION, t);
        let draw = draw_trial(ctx, &mut rng)?;
        let r = detect(ctx, detector, &draw, f64::INFINITY, &mut rng)?;
        Ok(r
            .statistic
            .iter()
            .enumerate()
            .filter(|(k, _)| draw.active.binary_search(k).is_err())
            .map(|(_, &s)| s)
            .collect::<Vec<f64>>())
    })?;
    Ok(per_trial.into_iter().flatten().collect())
}

fn calibrate_prepared(ctx: &Prepared, detector: DetectorKind, p_fa: f64, trials: u64) -> Result<f64> {
    let null = null_statistics(ctx, detector, trials)?;
    let t = threshold_from_null(null, p_fa)?;
    log::info!("calibrated {} threshold {t} at P_FA {p_fa:e} over {trials} trials", detector.id());
    Ok(t)
}
