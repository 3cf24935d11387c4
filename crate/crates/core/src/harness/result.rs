use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::TrialOutcome;
use crate::stats::order_statistic;
use crate::{Error, Result, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UeLabel {
    /// Active and detected.
    Detected,
    /// Active but missed; scored with zero throughput.
    Misdetected,
    /// Detected while silent; not a throughput sample.
    FalseAlarm,
}

impl UeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            UeLabel::Detected => "detected-active",
            UeLabel::Misdetected => "misdetected",
            UeLabel::FalseAlarm => "false-alarm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeRecord {
    pub trial: u64,
    pub ue: usize,
    pub beta: f64,
    pub eta: f64,
    pub label: UeLabel,
    /// Linear SINR after frequency aggregation.
    pub sinr: f64,
    /// Bit/s.
    pub throughput: f64,
}

/// One row of a quantile table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantile {
    pub level: f64,
    pub value: f64,
    /// False when fewer than `10 / level` samples back the estimate.
    pub reliable: bool,
}

/// Lower order-statistic quantile of ascending `sorted` samples.
pub fn quantile(sorted: &[f64], level: f64) -> Result<Quantile> {
    Ok(Quantile {
        level,
        value: order_statistic(sorted, level)?,
        reliable: sorted.len() as f64 >= 10.0 / level,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub scenario_hash: String,
    pub seed: u64,
    pub trials: u64,
    pub levels: Vec<f64>,
    pub threshold: Option<f64>,
    /// Records in trial order; within a trial, active UEs ascending followed
    /// by false alarms ascending.
    pub records: Vec<UeRecord>,
    pub active_total: u64,
    pub inactive_total: u64,
    pub misdetections: u64,
    pub false_alarms: u64,
    /// Coordinate-descent sweeps summed over trials.
    pub sweeps: u64,
    pub wall_clock_s: f64,
}

impl RunResult {
    pub(crate) fn new(scenario: &Scenario, trials: u64, threshold: Option<f64>) -> Self {
        RunResult {
            scenario_hash: scenario.hash(),
            seed: scenario.run.rng_seed,
            trials,
            levels: scenario.run.quantile_levels.clone(),
            threshold,
            records: Vec::new(),
            active_total: 0,
            inactive_total: 0,
            misdetections: 0,
            false_alarms: 0,
            sweeps: 0,
            wall_clock_s: 0.0,
        }
    }

    pub(crate) fn absorb(&mut self, outcome: TrialOutcome) {
        self.active_total += outcome.active as u64;
        self.inactive_total += outcome.inactive as u64;
        self.misdetections += outcome.misdetections as u64;
        self.false_alarms += outcome.false_alarms as u64;
        self.sweeps += outcome.sweeps as u64;
        self.records.extend(outcome.records);
    }

    /// Appends the trials of `other`, which must come from the same scenario.
    pub fn merge(&mut self, other: RunResult) -> Result<()> {
        if other.scenario_hash != self.scenario_hash || other.levels != self.levels {
            return Err(Error::MismatchedGrids);
        }
        self.trials += other.trials;
        self.active_total += other.active_total;
        self.inactive_total += other.inactive_total;
        self.misdetections += other.misdetections;
        self.false_alarms += other.false_alarms;
        self.sweeps += other.sweeps;
        self.wall_clock_s += other.wall_clock_s;
        self.records.extend(other.records);
        self.records.sort_by_key(|r| r.trial);
        Ok(())
    }

    /// Misdetected actives over all actives.
    pub fn p_md(&self) -> f64 {
        ratio(self.misdetections, self.active_total)
    }

    /// False alarms over all truly inactive authorized UEs.
    pub fn p_fa(&self) -> f64 {
        ratio(self.false_alarms, self.inactive_total)
    }

    /// Per-active-UE throughputs, ascending. Misdetections contribute zeros.
    pub fn throughput_samples(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.label != UeLabel::FalseAlarm)
            .map(|r| r.throughput)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn quantile(&self, level: f64) -> Result<Quantile> {
        quantile(&self.throughput_samples(), level)
    }

    /// Quantiles at the configured levels.
    pub fn quantiles(&self) -> Result<Vec<Quantile>> {
        let samples = self.throughput_samples();
        self.levels.iter().map(|&p| quantile(&samples, p)).collect()
    }

    pub fn samples_csv(&self) -> String {
        let mut out = String::from("trial,ue,beta,eta,label,sinr_db,throughput_bps\n");
        for r in &self.records {
            let sinr_db = 10.0 * r.sinr.log10();
            let _ = writeln!(
                out,
                "{},{},{:e},{},{},{},{}",
                r.trial,
                r.ue,
                r.beta,
                r.eta,
                r.label.as_str(),
                sinr_db,
                r.throughput
            );
        }
        out
    }

    pub fn summary(&self) -> Result<String> {
        let mut out = String::new();
        let _ = writeln!(out, "scenario_hash={}", self.scenario_hash);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "trials={}", self.trials);
        let _ = writeln!(out, "samples={}", self.active_total);
        let _ = writeln!(out, "p_md={}", self.p_md());
        let _ = writeln!(out, "p_fa={}", self.p_fa());
        if let Some(t) = self.threshold {
            let _ = writeln!(out, "threshold={t}");
        }
        let _ = writeln!(out, "mean_sweeps={}", ratio(self.sweeps, self.trials));
        if self.active_total > 0 {
            for q in self.quantiles()? {
                let _ = writeln!(out, "quantile_{}={}", q.level, q.value);
                let _ = writeln!(out, "quantile_{}_reliable={}", q.level, q.reliable);
            }
        }
        Ok(out)
    }

    /// Empirical CDF: `(i + 1) / n` against the i-th smallest throughput.
    pub fn cdf_csv(&self) -> String {
        let samples = self.throughput_samples();
        let n = samples.len() as f64;
        let mut out = String::from("probability,throughput_bps\n");
        for (i, x) in samples.iter().enumerate() {
            let _ = writeln!(out, "{},{}", (i + 1) as f64 / n, x);
        }
        out
    }

    /// Writes `samples.csv`, `summary.txt` and `cdf.csv` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            ("samples.csv", self.samples_csv()),
            ("summary.txt", self.summary()?),
            ("cdf.csv", self.cdf_csv()),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_summary(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("summary line {}: missing '='", i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}
