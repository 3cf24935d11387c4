//! Runs the orthogonal-pilot scenario and writes its throughput CDF.
//!
//! `cargo run --release --example throughput_cdf -- [trials] [out-dir]`

use std::path::PathBuf;

use mmimo_urllc::harness::run;
use mmimo_urllc::link::throughput;
use mmimo_urllc::Scenario;

fn main() -> mmimo_urllc::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(300);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/throughput_cdf".into()));

    let scenario = Scenario::uma_orthogonal();
    let s = &scenario.system;
    println!(
        "rate at unit SINR after the decoding penalty: {:.3} Mbps",
        throughput(10f64.powf(0.1), s.coherence_symbols, s.pilot_len, s.bandwidth_hz) / 1e6
    );
    let r = run(&scenario, trials)?;
    r.write_outputs(&out)?;
    println!("{} samples, P_MD {:.2e}, P_FA {:.2e}", r.active_total, r.p_md(), r.p_fa());
    for q in r.quantiles()? {
        println!(
            "  {:>6}: {:8.3} Mbps{}",
            q.level,
            q.value / 1e6,
            if q.reliable { "" } else { "  (too few samples)" }
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
