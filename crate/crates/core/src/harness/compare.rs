use std::fmt;
use std::str::FromStr;

use super::RunResult;
use crate::{Error, Result};

/// An ordering claim between runs, addressed by their position in the list
/// passed to [`compare_scenarios`].
///
/// Text form (used by the CLI):
/// * `q-ge:A:B@P` - quantile at level `P` of run `A` is at least that of `B`;
/// * `q-within:A:B@P:TOL` - `|q_A - q_B| <= TOL * q_B` at level `P`;
/// * `pmd-gt:A:B` - run `A` has a strictly higher misdetection rate than `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Assertion {
    QuantileAtLeast { better: usize, worse: usize, level: f64 },
    QuantileWithin { a: usize, b: usize, level: f64, tolerance: f64 },
    MissRateAbove { higher: usize, lower: usize },
}

impl FromStr for Assertion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse assertion '{s}'"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let (runs, params) = match rest.split_once('@') {
            Some((r, p)) => (r, Some(p)),
            None => (rest, None),
        };
        let (a, b) = runs.split_once(':').ok_or_else(bad)?;
        let a: usize = a.parse().map_err(|_| bad())?;
        let b: usize = b.parse().map_err(|_| bad())?;
        let numbers: Vec<f64> = match params {
            Some(p) => p.split(':').map(|x| x.parse().map_err(|_| bad())).collect::<Result<_>>()?,
            None => Vec::new(),
        };
        match (kind, numbers.as_slice()) {
            ("q-ge", &[level]) => Ok(Assertion::QuantileAtLeast { better: a, worse: b, level }),
            ("q-within", &[level, tolerance]) => Ok(Assertion::QuantileWithin { a, b, level, tolerance }),
            ("pmd-gt", &[]) => Ok(Assertion::MissRateAbove { higher: a, lower: b }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Assertion::QuantileAtLeast { better, worse, level } => write!(f, "q-ge:{better}:{worse}@{level}"),
            Assertion::QuantileWithin { a, b, level, tolerance } => {
                write!(f, "q-within:{a}:{b}@{level}:{tolerance}")
            }
            Assertion::MissRateAbove { higher, lower } => write!(f, "pmd-gt:{higher}:{lower}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssertionOutcome {
    pub assertion: Assertion,
    pub passed: bool,
    pub detail: String,
}

/// Quantile table of several runs with deltas against the first run.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub names: Vec<String>,
    pub levels: Vec<f64>,
    /// `quantiles[run][level]`.
    pub quantiles: Vec<Vec<f64>>,
    /// `deltas[run][level] = quantiles[run][level] - quantiles[0][level]`.
    pub deltas: Vec<Vec<f64>>,
    pub p_md: Vec<f64>,
    pub outcomes: Vec<AssertionOutcome>,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<24}{:>12}", "run", "p_md")?;
        for l in &self.levels {
            write!(f, " {:>18}", format!("q@{l}"))?;
        }
        writeln!(f)?;
        for (i, name) in self.names.iter().enumerate() {
            write!(f, "{:<24}{:>12.3e}", name, self.p_md[i])?;
            for (q, d) in self.quantiles[i].iter().zip(&self.deltas[i]) {
                write!(f, " {:>18}", format!("{:.3}M ({:+.2})", q / 1e6, d / 1e6))?;
            }
            writeln!(f)?;
        }
        for o in &self.outcomes {
            writeln!(f, "{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.assertion, o.detail)?;
        }
        Ok(())
    }
}

/// Tabulates the quantiles of `results` on their shared level grid and checks
/// `assertions`.
pub fn compare_scenarios(results: &[(&str, &RunResult)], assertions: &[Assertion]) -> Result<Comparison> {
    let Some((_, first)) = results.first() else {
        return Err(Error::EmptySamples);
    };
    let levels = first.levels.clone();
    if results.iter().any(|(_, r)| r.levels != levels) {
        return Err(Error::MismatchedGrids);
    }
    let samples: Vec<Vec<f64>> = results.iter().map(|(_, r)| r.throughput_samples()).collect();
    let q = |run: usize, level: f64| -> Result<f64> { Ok(super::quantile(&samples[run], level)?.value) };
    let mut quantiles = Vec::with_capacity(results.len());
    for run in 0..results.len() {
        quantiles.push(levels.iter().map(|&l| q(run, l)).collect::<Result<Vec<_>>>()?);
    }
    let deltas = quantiles
        .iter()
        .map(|row| row.iter().zip(&quantiles[0]).map(|(x, b)| x - b).collect())
        .collect();
    let p_md: Vec<f64> = results.iter().map(|(_, r)| r.p_md()).collect();
    let check = |i: usize| -> Result<usize> {
        if i < results.len() {
            Ok(i)
        } else {
            Err(Error::InvalidArgument(format!("assertion refers to run {i} of {}", results.len())))
        }
    };
    let mut outcomes = Vec::with_capacity(assertions.len());
    for &assertion in assertions {
        let (passed, detail) = match assertion {
            Assertion::QuantileAtLeast { better, worse, level } => {
                let (a, b) = (q(check(better)?, level)?, q(check(worse)?, level)?);
                (a >= b, format!("{a:.6e} >= {b:.6e}"))
            }
            Assertion::QuantileWithin { a, b, level, tolerance } => {
                let (x, y) = (q(check(a)?, level)?, q(check(b)?, level)?);
                let rel = if y != 0.0 { (x - y).abs() / y.abs() } else if x == 0.0 { 0.0 } else { f64::INFINITY };
                (rel <= tolerance, format!("relative gap {rel:.4} <= {tolerance}"))
            }
            Assertion::MissRateAbove { higher, lower } => {
                let (a, b) = (p_md[check(higher)?], p_md[check(lower)?]);
                (a > b, format!("{a:.3e} > {b:.3e}"))
            }
        };
        outcomes.push(AssertionOutcome { assertion, passed, detail });
    }
    Ok(Comparison {
        names: results.iter().map(|(n, _)| n.to_string()).collect(),
        levels,
        quantiles,
        deltas,
        p_md,
        outcomes,
    })
}
