//! Drops a UMi population, applies 5 % dropping and open-loop power control,
//! and prints the spread of large-scale fading before and after.

use mmimo_urllc::linalg::linear_to_db;
use mmimo_urllc::scenario::build_population;
use mmimo_urllc::Scenario;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spread(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn main() -> mmimo_urllc::Result<()> {
    let scenario = Scenario::umi_prb();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pop = build_population(&scenario, &mut rng)?;
    let dropped = pop.retained.iter().filter(|&&r| !r).count();
    println!(
        "{} deployed, {dropped} dropped, {} authorized",
        pop.deployed(),
        pop.authorized.len()
    );

    let beta = pop.authorized_beta();
    let eta = pop.authorized_eta();
    let (lo, hi) = spread(beta.iter().map(|&b| linear_to_db(b)));
    println!("beta over authorized UEs: {lo:.1} .. {hi:.1} dB ({:.1} dB spread)", hi - lo);
    let (lo, hi) = spread(beta.iter().zip(&eta).map(|(b, e)| linear_to_db(b * e)));
    println!("beta * eta after power control: {lo:.1} .. {hi:.1} dB");
    let (lo, hi) = spread(eta.iter().map(|&e| linear_to_db(e)));
    println!("eta: {lo:.1} .. {hi:.1} dB");

    let pl = scenario.pathloss();
    for d in [10.0, 30.0, 100.0] {
        println!("median loss at {d:>5} m: {:.1} dB", pl.loss_db(d));
    }
    Ok(())
}
