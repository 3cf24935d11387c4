//! MMSE combining with estimated channels: instantaneous SINR of each UE
//! against the single-user bound `rho_u * ||g_k||^2`.

use mmimo_urllc::estimation::lmmse_ci_diag;
use mmimo_urllc::link::{build_mmse_receiver, effective_throughput, instantaneous_sinr};
use mmimo_urllc::linalg::{complex_normal_matrix, linear_to_db, CMat};
use mmimo_urllc::pilots::make_orthogonal_pilots;
use mmimo_urllc::Scenario;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mmimo_urllc::Result<()> {
    let scenario = Scenario::uma_orthogonal();
    let (antennas, ues) = (scenario.system.antennas, scenario.system.authorized_ues);
    let active = [0usize, 1, 2, 3];
    let beta: [f64; 4] = [1.0, 0.5, 0.1, 0.01];
    let (rho_p, rho_u) = (0.1, 0.1);
    let book = make_orthogonal_pilots(ues)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    let mut g = CMat::zeros(antennas, ues);
    for (j, &k) in active.iter().enumerate() {
        let col = complex_normal_matrix(antennas, 1, &mut rng) * num_complex::Complex64::from(beta[j].sqrt());
        g.set_column(k, &col.column(0));
    }
    let tau = book.len() as f64;
    let amplitude = vec![(tau * rho_p).sqrt(); ues];
    let tx = CMat::from_fn(book.len(), ues, |t, k| book.phi[(t, k)] * amplitude[k]);
    let y = complex_normal_matrix(book.len(), antennas, &mut rng) + tx * g.transpose();
    let mut prior = vec![1.0; ues];
    for (j, &k) in active.iter().enumerate() {
        prior[k] = beta[j];
    }
    let est = lmmse_ci_diag(&[y], &book, &active, &amplitude, &prior)?;
    let eta = vec![1.0; ues];
    let bank = build_mmse_receiver(&est.units[0], &eta, rho_u, &active)?;
    for &k in &active {
        let sinr = instantaneous_sinr(bank.combiner(k), &g, &eta, rho_u, &active, k);
        let bound = rho_u * g.column(k).norm_squared();
        println!(
            "ue {k}: SINR {:6.2} dB (bound {:6.2} dB), {:7.2} Mbps",
            linear_to_db(sinr),
            linear_to_db(bound),
            effective_throughput(sinr, &scenario) / 1e6
        );
    }
    Ok(())
}
