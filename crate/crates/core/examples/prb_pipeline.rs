//! PRB-layout pipeline against the coherence-interval layout at tau = 24,
//! under open-loop power control with the weakest 5 % dropped.

use mmimo_urllc::detection::DetectorKind;
use mmimo_urllc::harness::{compare_scenarios, run, Assertion};
use mmimo_urllc::pilots::PilotMode;
use mmimo_urllc::Scenario;

fn main() -> mmimo_urllc::Result<()> {
    let trials: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let mut prb = Scenario::umi_prb();
    prb.detection.p_fa = 1e-2;
    let mut ci = prb.clone();
    ci.system.pilot_mode = PilotMode::GoldCi;
    ci.detection.detector = DetectorKind::Ml;

    let a = run(&ci, trials)?;
    let b = run(&prb, trials)?;
    let check = Assertion::QuantileAtLeast { better: 0, worse: 1, level: 0.1 };
    print!("{}", compare_scenarios(&[("gold-ci", &a), ("gold-prb", &b)], &[check])?);
    Ok(())
}
