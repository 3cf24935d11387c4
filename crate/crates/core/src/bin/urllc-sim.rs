use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmimo_urllc::detection::DetectorKind;
use mmimo_urllc::harness::{self, compare_scenarios, Assertion, RunResult, ThresholdCache};
use mmimo_urllc::pilots::PilotMode;
use mmimo_urllc::{Error, Result, Scenario};

/// Grant-free Massive MIMO uplink URLLC link-level simulator.
#[derive(Parser)]
#[command(name = "urllc-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write samples.csv, summary.txt and cdf.csv.
    Run {
        #[command(flatten)]
        common: Common,
        /// Threshold cache consulted before calibrating.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Calibrate the activity threshold and store it in a cache file.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "thresholds.txt")]
        cache: PathBuf,
    },
    /// Run several scenarios and check ordering assertions.
    Compare {
        /// Scenario files, in the order assertions refer to them.
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// e.g. `q-ge:0:1@0.01`, `q-within:0:1@0.01:0.1`, `pmd-gt:2:0`.
        #[arg(long = "assert")]
        assertions: Vec<Assertion>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scenario for each value of a field.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        field: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    detector: Option<DetectorKind>,
    #[arg(long)]
    pilot_mode: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Extra `--field value` overrides of any scenario key.
    #[arg(last = true)]
    overrides: Vec<String>,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let mut s = match &self.config {
            Some(p) => Scenario::from_file(p)?,
            None => Scenario::default(),
        };
        if let Some(t) = self.trials {
            s.run.trials = t;
        }
        if let Some(seed) = self.seed {
            s.run.rng_seed = seed;
        }
        if let Some(d) = self.detector {
            s.detection.detector = d;
        }
        if let Some(m) = &self.pilot_mode {
            s.system.pilot_mode = m.parse::<PilotMode>()?;
        }
        apply_overrides(&mut s, &self.overrides)?;
        s.validate()?;
        Ok(s)
    }
}

fn apply_overrides(s: &mut Scenario, args: &[String]) -> Result<()> {
    let mut it = args.iter();
    while let Some(key) = it.next() {
        let key = key
            .strip_prefix("--")
            .ok_or_else(|| Error::InvalidArgument(format!("expected --field, got '{key}'")))?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k, v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| Error::InvalidArgument(format!("--{key} needs a value")))?;
                (key, v.clone())
            }
        };
        s.set(key, &value)?;
    }
    Ok(())
}

fn report(name: &str, r: &RunResult) {
    println!(
        "{name}: trials={} samples={} p_md={:.3e} p_fa={:.3e} ({:.1}s)",
        r.trials,
        r.active_total,
        r.p_md(),
        r.p_fa(),
        r.wall_clock_s
    );
    if let Ok(qs) = r.quantiles() {
        for q in qs {
            let flag = if q.reliable { "" } else { " (unreliable)" };
            println!("  q@{}: {:.4} Mbps{flag}", q.level, q.value / 1e6);
        }
    }
}

fn cached_threshold(s: &mut Scenario, cache: &ThresholdCache) {
    if s.detection.threshold.is_none() {
        let d = &s.detection;
        if let Some(t) = cache.get(d.detector.id(), &s.calibration_hash(), d.p_fa) {
            s.detection.threshold = Some(t);
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { common, cache } => {
            let mut s = common.scenario()?;
            if let Some(path) = cache {
                cached_threshold(&mut s, &ThresholdCache::load(&path)?);
            }
            let r = harness::run(&s, s.run.trials)?;
            r.write_outputs(&common.out)?;
            report(&s.hash(), &r);
            Ok(true)
        }
        Command::Calibrate { common, cache } => {
            let s = common.scenario()?;
            let d = &s.detection;
            let trials = harness::default_calibration_trials(&s);
            let t = harness::calibrate_threshold(d.detector, &s, d.p_fa, trials)?;
            let mut c = ThresholdCache::load(&cache)?;
            c.insert(d.detector.id(), &s.calibration_hash(), d.p_fa, t);
            c.save(&cache)?;
            println!("{} threshold at P_FA {:e}: {t} ({trials} trials)", d.detector.id(), d.p_fa);
            Ok(true)
        }
        Command::Compare {
            configs,
            trials,
            seed,
            assertions,
            out,
        } => {
            let mut results = Vec::new();
            for path in &configs {
                let mut s = Scenario::from_file(path)?;
                if let Some(t) = trials {
                    s.run.trials = t;
                }
                if let Some(seed) = seed {
                    s.run.rng_seed = seed;
                }
                let r = harness::run(&s, s.run.trials)?;
                let name = path.file_stem().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into());
                if let Some(dir) = &out {
                    r.write_outputs(&dir.join(&name))?;
                }
                results.push((name, r));
            }
            let refs: Vec<(&str, &RunResult)> = results.iter().map(|(n, r)| (n.as_str(), r)).collect();
            let c = compare_scenarios(&refs, &assertions)?;
            print!("{c}");
            Ok(c.passed())
        }
        Command::Sweep { common, field, values } => {
            let base = common.scenario()?;
            let mut table = String::from("value,p_md,p_fa");
            for l in &base.run.quantile_levels {
                table.push_str(&format!(",q_{l}"));
            }
            table.push('\n');
            for v in &values {
                let mut s = base.clone();
                s.set(&field, v)?;
                let r = harness::run(&s, s.run.trials)?;
                r.write_outputs(&common.out.join(format!("{field}={v}")))?;
                report(&format!("{field}={v}"), &r);
                table.push_str(&format!("{v},{},{}", r.p_md(), r.p_fa()));
                for q in r.quantiles()? {
                    table.push_str(&format!(",{}", q.value));
                }
                table.push('\n');
            }
            std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
            let path = common.out.join("sweep.csv");
            std::fs::write(&path, table).map_err(|e| Error::io(path, e))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
