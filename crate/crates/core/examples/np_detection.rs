//! Energy detection with orthogonal pilots on a single coherence interval.

use mmimo_urllc::detection::{np_correlate, np_detect, np_statistics};
use mmimo_urllc::linalg::{complex_normal_matrix, CMat};
use mmimo_urllc::pilots::make_orthogonal_pilots;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mmimo_urllc::Result<()> {
    let (antennas, ues) = (64, 20);
    let active = [2usize, 7, 11];
    let book = make_orthogonal_pilots(ues)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // unit noise; each active UE arrives 0 dB above noise per pilot symbol
    let tau = book.len() as f64;
    let g = complex_normal_matrix(antennas, active.len(), &mut rng);
    let tx = CMat::from_fn(book.len(), active.len(), |t, j| book.phi[(t, active[j])] * tau.sqrt());
    let y = complex_normal_matrix(book.len(), antennas, &mut rng) + tx * g.transpose();

    let stats = np_statistics(&np_correlate(&[y], &book)?);
    let result = np_detect(&stats, 1e-3, antennas, 1)?;
    println!("threshold {:.2} (noise-only mean {antennas})", result.threshold);
    for (k, s) in stats.iter().enumerate() {
        let mark = if result.contains(k) { "detected" } else { "" };
        println!("ue {k:2}: {s:9.1} {mark}");
    }
    println!("true active {active:?}, detected {:?}", result.active);
    Ok(())
}
