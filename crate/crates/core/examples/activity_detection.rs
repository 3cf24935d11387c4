//! Covariance-based activity detection with non-orthogonal pilots: the ML,
//! MMV and NNLS coordinate-descent variants on the same observation.

use mmimo_urllc::detection::{coordinate_descent_detect, sample_covariance, CoordinateVariant, SweepOptions};
use mmimo_urllc::linalg::{complex_normal_matrix, CMat};
use mmimo_urllc::pilots::{make_gold_pilots, PilotMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mmimo_urllc::Result<()> {
    let (antennas, ues, tau) = (128, 50, 24);
    let active = [1usize, 5, 9, 14, 22, 30, 41, 47];
    let book = make_gold_pilots(ues, tau, PilotMode::GoldCi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // received power per active UE, in units of the noise
    let gain: Vec<f64> = (0..active.len()).map(|j| 2.0 + j as f64).collect();
    let g = complex_normal_matrix(antennas, active.len(), &mut rng);
    let tx = CMat::from_fn(tau, active.len(), |t, j| book.phi[(t, active[j])] * gain[j].sqrt());
    let y = complex_normal_matrix(tau, antennas, &mut rng) + tx * g.transpose();
    let cov = sample_covariance(&[y]);

    for variant in [CoordinateVariant::Ml, CoordinateVariant::Mmv, CoordinateVariant::Nnls] {
        let r = coordinate_descent_detect(&cov, &book, variant, SweepOptions::default(), 0.5, &mut rng)?;
        let missed: Vec<usize> = active.iter().copied().filter(|&k| !r.contains(k)).collect();
        let false_alarms: Vec<usize> = r.active.iter().copied().filter(|k| !active.contains(k)).collect();
        println!(
            "{variant:?}: {} sweeps, missed {missed:?}, false alarms {false_alarms:?}",
            r.iterations
        );
        let shown: Vec<String> = active.iter().map(|&k| format!("{:.2}", r.statistic[k])).collect();
        println!("  gamma of actives: {}", shown.join(" "));
    }
    println!("  true gains:       {}", gain.iter().map(|g| format!("{g:.2}")).collect::<Vec<_>>().join(" "));
    Ok(())
}
