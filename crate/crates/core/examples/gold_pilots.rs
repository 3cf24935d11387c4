//! Gold-sequence pilot book: cross-correlation and the PRB block layout.

use mmimo_urllc::pilots::{make_gold_pilots, PilotMode, PRB_PILOT_LEN};

fn main() -> mmimo_urllc::Result<()> {
    let ues = 50;
    let book = make_gold_pilots(ues, PRB_PILOT_LEN, PilotMode::GoldCi)?;
    let gram = book.phi.adjoint() * &book.phi;
    let mut cross: Vec<f64> = Vec::new();
    for i in 0..ues {
        for j in i + 1..ues {
            cross.push(gram[(i, j)].norm_sqr());
        }
    }
    cross.sort_by(f64::total_cmp);
    let mean = cross.iter().sum::<f64>() / cross.len() as f64;
    println!("tau = {}, K = {ues}", book.len());
    println!(
        "|phi_i^H phi_j|^2: mean {mean:.4}, median {:.4}, max {:.4} (random sequences: {:.4})",
        cross[cross.len() / 2],
        cross[cross.len() - 1],
        1.0 / book.len() as f64
    );

    let prb = make_gold_pilots(ues, PRB_PILOT_LEN, PilotMode::GoldPrb)?;
    let v = prb.assemble_prb_matrix(&[0, 3])?;
    println!("PRB matrix for UEs {{0, 3}}: {} x {}", v.nrows(), v.ncols());
    let support: Vec<usize> = v.column_iter().map(|c| c.iter().filter(|z| z.norm() > 0.0).count()).collect();
    println!("nonzero rows per column: {support:?}");
    Ok(())
}
