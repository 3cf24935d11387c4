//! Pilot books: orthogonal and Gold-sequence pilots for the coherence-interval
//! setting and the PRB block layout.
//!
//! In the PRB layout a UE's 24-symbol sequence is split into six blocks of four
//! symbols, block `i` riding on pilot subcarrier `2i + 1` (1-based) of the PRB.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{CMat, CVec};
use crate::{Error, Result};

/// Pilot subcarriers of a PRB (1-based).
pub const PRB_PILOT_SUBCARRIERS: [usize; 6] = [1, 3, 5, 7, 9, 11];
/// Pilot symbols per pilot subcarrier.
pub const PRB_BLOCK_LEN: usize = 4;
pub const PRB_PILOT_LEN: usize = PRB_BLOCK_LEN * PRB_PILOT_SUBCARRIERS.len();
/// Resource elements in one slot of one PRB (12 subcarriers x 14 symbols).
pub const PRB_SLOT_SYMBOLS: usize = 168;

// NR pseudo-random sequence: output offset of the length-31 Gold generator.
const GOLD_NC: usize = 1600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PilotMode {
    OrthogonalCi,
    GoldCi,
    GoldPrb,
}

impl std::str::FromStr for PilotMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        crate::scenario::parse_kebab(s)
    }
}

/// Unit-norm pilot sequences of `K` UEs.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    pub mode: PilotMode,
    /// `tau x K`, column `k` is UE `k`'s pilot.
    pub phi: CMat,
    /// Gold generator initializers, one per UE (Gold modes only).
    pub seeds: Option<Vec<u32>>,
}

impl PilotBook {
    pub fn len(&self) -> usize {
        self.phi.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.nrows() == 0
    }

    pub fn ues(&self) -> usize {
        self.phi.ncols()
    }

    pub fn pilot(&self, k: usize) -> CVec {
        self.phi.column(k).into_owned()
    }

    /// Largest entry of `|Phi^H Phi - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let gram = self.phi.adjoint() * &self.phi;
        crate::linalg::max_abs_diff(&gram, &CMat::identity(self.ues(), self.ues()))
    }

    fn check_prb(&self) -> Result<()> {
        if self.len() != PRB_PILOT_LEN {
            return Err(Error::InvalidArgument(format!(
                "PRB layout needs {PRB_PILOT_LEN}-symbol pilots, book has {}",
                self.len()
            )));
        }
        Ok(())
    }

    fn check_ue(&self, k: usize) -> Result<()> {
        if k >= self.ues() {
            return Err(Error::UeOutOfRange { index: k, ues: self.ues() });
        }
        Ok(())
    }

    /// The four pilot symbols UE `k` sends on PRB pilot block `block`.
    pub fn prb_block(&self, k: usize, block: usize) -> Result<CVec> {
        self.check_prb()?;
        self.check_ue(k)?;
        Ok(self.phi.view((block * PRB_BLOCK_LEN, k), (PRB_BLOCK_LEN, 1)).column(0).into_owned())
    }

    /// Length-24 vector equal to UE `k`'s pilot on block `block` and zero
    /// elsewhere.
    pub fn masked_pilot(&self, k: usize, block: usize) -> Result<CVec> {
        let part = self.prb_block(k, block)?;
        let mut v = CVec::zeros(PRB_PILOT_LEN);
        v.rows_mut(block * PRB_BLOCK_LEN, PRB_BLOCK_LEN).copy_from(&part);
        Ok(v)
    }

    /// Block-diagonal PRB pilot matrix of a UE set (`24 x 6|set|`).
    ///
    /// Columns are grouped by pilot block, then by UE in `set` order, so column
    /// `i * |set| + a` carries UE `set[a]` on block `i`.
    pub fn assemble_prb_matrix(&self, set: &[usize]) -> Result<CMat> {
        self.check_prb()?;
        if set.is_empty() {
            return Err(Error::InvalidArgument("PRB matrix needs a non-empty UE set".into()));
        }
        for &k in set {
            self.check_ue(k)?;
        }
        let n = set.len();
        let blocks = PRB_PILOT_SUBCARRIERS.len();
        let mut v = CMat::zeros(PRB_PILOT_LEN, blocks * n);
        for i in 0..blocks {
            for (a, &k) in set.iter().enumerate() {
                for r in 0..PRB_BLOCK_LEN {
                    let row = i * PRB_BLOCK_LEN + r;
                    v[(row, i * n + a)] = self.phi[(row, k)];
                }
            }
        }
        Ok(v)
    }

    /// CSV with one row per pilot symbol and a real and an imaginary column
    /// per UE.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("symbol");
        for k in 0..self.ues() {
            let _ = write!(out, ",ue{k}_re,ue{k}_im");
        }
        out.push('\n');
        for t in 0..self.len() {
            let _ = write!(out, "{t}");
            for k in 0..self.ues() {
                let z = self.phi[(t, k)];
                let _ = write!(out, ",{},{}", z.re, z.im);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `K` orthonormal pilots of length `tau >= K`: the first `K` columns of the
/// normalized `tau`-point DFT matrix.
pub fn make_orthogonal_pilots_len(ues: usize, tau: usize) -> Result<PilotBook> {
    if ues < 1 {
        return Err(Error::InvalidArgument("need at least one UE".into()));
    }
    if tau < ues {
        return Err(Error::InvalidArgument(format!(
            "orthogonal pilots need tau >= K ({tau} < {ues})"
        )));
    }
    let scale = 1.0 / (tau as f64).sqrt();
    let phi = CMat::from_fn(tau, ues, |t, k| {
        // reduce the product first so the phase stays exact for large tau
        let idx = (t * k) % tau;
        Complex64::from_polar(scale, -std::f64::consts::TAU * idx as f64 / tau as f64)
    });
    Ok(PilotBook {
        mode: PilotMode::OrthogonalCi,
        phi,
        seeds: None,
    })
}

/// Orthonormal pilots with `tau = K`.
pub fn make_orthogonal_pilots(ues: usize) -> Result<PilotBook> {
    make_orthogonal_pilots_len(ues, ues)
}

/// Gold-sequence pilots for UEs `0..K` with initializers `1..=K`.
pub fn make_gold_pilots(ues: usize, tau: usize, mode: PilotMode) -> Result<PilotBook> {
    let seeds: Vec<u32> = (1..=ues as u32).collect();
    make_gold_pilots_with_seeds(&seeds, tau, mode)
}

/// Gold-sequence pilots, one per initializer: QPSK-mapped NR pseudo-random
/// bits scaled to unit norm.
pub fn make_gold_pilots_with_seeds(seeds: &[u32], tau: usize, mode: PilotMode) -> Result<PilotBook> {
    if seeds.is_empty() || tau == 0 {
        return Err(Error::InvalidArgument("need at least one UE and one symbol".into()));
    }
    if mode == PilotMode::GoldPrb && tau != PRB_PILOT_LEN {
        return Err(Error::InvalidArgument(format!(
            "PRB pilots have {PRB_PILOT_LEN} symbols, got {tau}"
        )));
    }
    let mut seen = HashSet::new();
    for &s in seeds {
        if !seen.insert(s) {
            return Err(Error::DuplicateSeed(s));
        }
    }
    let mut phi = CMat::zeros(tau, seeds.len());
    for (k, &seed) in seeds.iter().enumerate() {
        let seq = gold_qpsk(seed, tau);
        phi.set_column(k, &(seq / Complex64::from((tau as f64).sqrt())));
    }
    Ok(PilotBook {
        mode,
        phi,
        seeds: Some(seeds.to_vec()),
    })
}

/// `len` unit-magnitude QPSK symbols
/// `((1 - 2c(2n)) + j (1 - 2c(2n + 1))) / sqrt(2)`.
pub fn gold_qpsk(c_init: u32, len: usize) -> CVec {
    let bits = gold_sequence(c_init, 2 * len);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVec::from_fn(len, |n, _| {
        Complex64::new(
            s * (1.0 - 2.0 * bits[2 * n] as f64),
            s * (1.0 - 2.0 * bits[2 * n + 1] as f64),
        )
    })
}

/// NR length-31 Gold sequence `c(n)`, `n < len`, for initializer `c_init`.
///
/// `x1` starts at `1, 0, ..., 0`, `x2` holds the 31 bits of `c_init`, and
/// `c(n) = x1(n + 1600) ^ x2(n + 1600)`. Both registers keep `x(n..n+31)` in
/// bits 0..31 of a word.
pub fn gold_sequence(c_init: u32, len: usize) -> Vec<u8> {
    let mut x1: u32 = 1;
    let mut x2: u32 = c_init & 0x7fff_ffff;
    let step1 = |s: u32| (s >> 1) | (((s ^ (s >> 3)) & 1) << 30);
    let step2 = |s: u32| (s >> 1) | (((s ^ (s >> 1) ^ (s >> 2) ^ (s >> 3)) & 1) << 30);
    for _ in 0..GOLD_NC {
        x1 = step1(x1);
        x2 = step2(x2);
    }
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(((x1 ^ x2) & 1) as u8);
        x1 = step1(x1);
        x2 = step2(x2);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    // Direct array form of the recurrences, independent of the bit-packed
    // register implementation.
    fn reference_gold(c_init: u32, len: usize) -> Vec<u8> {
        let total = GOLD_NC + len + 31;
        let mut x1 = vec![0u8; total];
        let mut x2 = vec![0u8; total];
        x1[0] = 1;
        for i in 0..31 {
            x2[i] = ((c_init >> i) & 1) as u8;
        }
        for n in 0..total - 31 {
            x1[n + 31] = (x1[n + 3] + x1[n]) % 2;
            x2[n + 31] = (x2[n + 3] + x2[n + 2] + x2[n + 1] + x2[n]) % 2;
        }
        (0..len).map(|n| (x1[n + GOLD_NC] + x2[n + GOLD_NC]) % 2).collect()
    }

    #[test]
    fn gold_matches_reference_recurrence() {
        for c_init in [0, 1, 2, 17, 1000, 0x7fff_ffff, 0x1234_5678] {
            assert_eq!(gold_sequence(c_init, 200), reference_gold(c_init, 200), "c_init {c_init}");
        }
    }

    #[test]
    fn orthogonal_gram_is_identity() {
        let book = make_orthogonal_pilots(50).unwrap();
        assert_eq!(book.len(), 50);
        assert!(book.orthogonality_defect() < 1e-12);
        for j in 0..50 {
            for k in 0..50 {
                if j != k {
                    assert!(book.pilot(j).dotc(&book.pilot(k)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_orthogonal_pilot_is_one() {
        let book = make_orthogonal_pilots(1).unwrap();
        assert_eq!(book.phi, CMat::from_element(1, 1, Complex64::ONE));
        assert!(make_orthogonal_pilots(0).is_err());
    }

    #[test]
    fn gold_pilots_unit_norm_and_non_orthogonal() {
        let book = make_gold_pilots(50, 24, PilotMode::GoldCi).unwrap();
        let mut max_cross = 0.0f64;
        let mut mean_cross = 0.0;
        let mut pairs = 0;
        for k in 0..50 {
            assert!((book.pilot(k).norm() - 1.0).abs() < 1e-12);
            for j in 0..k {
                let c = book.pilot(j).dotc(&book.pilot(k)).norm();
                max_cross = max_cross.max(c);
                mean_cross += c;
                pairs += 1;
            }
        }
        mean_cross /= pairs as f64;
        assert!(max_cross < 1.0 - 1e-9);
        // random unit-modulus sequences: E|<a,b>| ~ sqrt(pi / (4 tau))
        let rms = 1.0 / (24f64).sqrt();
        assert!(mean_cross > 0.5 * rms && mean_cross < 1.5 * rms, "{mean_cross}");
    }

    #[test]
    fn gold_is_deterministic_and_rejects_duplicates() {
        let a = make_gold_pilots_with_seeds(&[7, 9], 24, PilotMode::GoldCi).unwrap();
        let b = make_gold_pilots_with_seeds(&[7, 3], 24, PilotMode::GoldCi).unwrap();
        assert_eq!(a.pilot(0), b.pilot(0));
        assert!(matches!(
            make_gold_pilots_with_seeds(&[7, 7], 24, PilotMode::GoldCi),
            Err(Error::DuplicateSeed(7))
        ));
        assert!(make_gold_pilots(4, 20, PilotMode::GoldPrb).is_err());
    }

    #[test]
    fn prb_matrix_single_ue_restacks_pilot() {
        let book = make_gold_pilots(3, 24, PilotMode::GoldPrb).unwrap();
        let v = book.assemble_prb_matrix(&[1]).unwrap();
        assert_eq!(v.shape(), (24, 6));
        for i in 0..6 {
            for row in 0..24 {
                let inside = row / 4 == i;
                let expect = if inside { book.phi[(row, 1)] } else { Complex64::ZERO };
                assert_eq!(v[(row, i)], expect);
            }
        }
        // V * 1 recovers phi
        let ones = CVec::from_element(6, Complex64::ONE);
        assert!(max_abs_diff(&(&v * ones), &book.pilot(1)) < 1e-15);
        // V^H V is diagonal with block energies summing to ||phi||^2 = 1
        let gram = v.adjoint() * &v;
        let mut trace = 0.0;
        for a in 0..6 {
            for b in 0..6 {
                if a != b {
                    assert!(gram[(a, b)].norm() < 1e-15);
                }
            }
            trace += gram[(a, a)].re;
        }
        assert!((trace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prb_matrix_column_order_and_errors() {
        let book = make_gold_pilots(5, 24, PilotMode::GoldPrb).unwrap();
        let v = book.assemble_prb_matrix(&[4, 0]).unwrap();
        assert_eq!(v.shape(), (24, 12));
        // block 2, second UE of the set (UE 0) -> column 2 * 2 + 1
        assert_eq!(v.column(5).rows(8, 4), book.phi.column(0).rows(8, 4));
        assert_eq!(v.column(4).rows(8, 4), book.phi.column(4).rows(8, 4));
        let other = book.assemble_prb_matrix(&[1, 2]).unwrap();
        for a in 0..v.ncols() {
            for b in 0..other.ncols() {
                assert_ne!(v.column(a), other.column(b));
            }
        }
        assert!(matches!(book.assemble_prb_matrix(&[5]), Err(Error::UeOutOfRange { .. })));
        assert!(book.assemble_prb_matrix(&[]).is_err());
        let ci = make_gold_pilots(5, 20, PilotMode::GoldCi).unwrap();
        assert!(ci.assemble_prb_matrix(&[0]).is_err());
    }

    #[test]
    fn masked_pilots_sum_to_pilot() {
        let book = make_gold_pilots(2, 24, PilotMode::GoldPrb).unwrap();
        let mut sum = CVec::zeros(24);
        for i in 0..6 {
            let m = book.masked_pilot(0, i).unwrap();
            assert_eq!(m.iter().filter(|z| z.norm() > 0.0).count(), 4);
            sum += m;
        }
        assert_eq!(sum, book.pilot(0));
    }

    #[test]
    fn csv_layout() {
        let book = make_orthogonal_pilots(2).unwrap();
        let csv = book.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "symbol,ue0_re,ue0_im,ue1_re,ue1_im");
        assert_eq!(lines[1].split(',').count(), 5);
    }
}
