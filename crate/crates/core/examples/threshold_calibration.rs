//! Closed-form NP threshold against its Monte-Carlo calibration, and the
//! calibrated threshold of the ML detector on Gold pilots.

use mmimo_urllc::detection::{np_threshold, DetectorKind};
use mmimo_urllc::harness::{calibrate_threshold, default_calibration_trials};
use mmimo_urllc::Scenario;

fn main() -> mmimo_urllc::Result<()> {
    let p_fa = 1e-2;
    let mut orth = Scenario::uma_orthogonal();
    orth.detection.p_fa = p_fa;
    let closed = np_threshold(p_fa, orth.system.antennas, 1)?;
    let trials = default_calibration_trials(&orth);
    let empirical = calibrate_threshold(DetectorKind::Np, &orth, p_fa, trials)?;
    println!(
        "NP: closed form {closed:.3}, calibrated {empirical:.3} over {trials} trials ({:+.2} %)",
        100.0 * (empirical - closed) / closed
    );

    let mut gold = Scenario::uma_gold();
    gold.detection.p_fa = p_fa;
    let trials = default_calibration_trials(&gold);
    let t = calibrate_threshold(DetectorKind::Ml, &gold, p_fa, trials)?;
    println!("ML on Gold pilots: gamma threshold {t:.4} over {trials} trials");
    Ok(())
}
