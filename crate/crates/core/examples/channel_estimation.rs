//! Joint LMMSE against the per-UE estimator on Gold pilots, by SNR.

use mmimo_urllc::estimation::{lmmse_ci_diag, lmmse_ci_perue};
use mmimo_urllc::linalg::{complex_normal_matrix, CMat};
use mmimo_urllc::pilots::{make_gold_pilots, PilotMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mmimo_urllc::Result<()> {
    let (antennas, ues, tau, draws) = (32, 30, 24, 200);
    let set = [0usize, 4, 8, 12, 16, 20];
    let book = make_gold_pilots(ues, tau, PilotMode::GoldCi)?;
    let prior = vec![1.0; ues];
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    println!("{:>8} {:>12} {:>12}", "rho dB", "joint NMSE", "per-UE NMSE");
    for rho_db in [-10.0, -5.0, 0.0, 5.0, 10.0] {
        let rho: f64 = 10f64.powf(rho_db / 10.0);
        let amplitude = vec![(tau as f64 * rho).sqrt(); ues];
        let (mut joint, mut single, mut energy) = (0.0, 0.0, 0.0);
        for _ in 0..draws {
            let g = complex_normal_matrix(antennas, set.len(), &mut rng);
            let tx = CMat::from_fn(tau, set.len(), |t, j| book.phi[(t, set[j])] * amplitude[set[j]]);
            let y = complex_normal_matrix(tau, antennas, &mut rng) + tx * g.transpose();
            let a = lmmse_ci_diag(&[y.clone()], &book, &set, &amplitude, &prior)?;
            let b = lmmse_ci_perue(&[y], &book, &set, &amplitude, &prior)?;
            for (j, &k) in set.iter().enumerate() {
                let truth = g.column(j).into_owned();
                joint += (a.units[0].column(k) - &truth).norm_squared();
                single += (b.units[0].column(k) - &truth).norm_squared();
                energy += truth.norm_squared();
            }
        }
        println!("{rho_db:>8.1} {:>12.4} {:>12.4}", joint / energy, single / energy);
    }
    Ok(())
}
