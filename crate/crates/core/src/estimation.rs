//! LMMSE channel estimation for the UEs in a detected set `B`.
//!
//! All estimators take the per-UE pilot amplitude `a_k = sqrt(tau rho_p eta_k)`
//! so that power control is accounted for; with full power this is the
//! familiar `sqrt(tau rho_p)`. Estimates are returned in the same layout as
//! [`ChannelRealization`](crate::channel::ChannelRealization): one `M x K`
//! matrix per frequency unit, with exactly zero columns outside `B`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::SubcarrierCovariance;
use crate::linalg::{hermitian_inverse, solve, CMat};
use crate::pilots::{PilotBook, PRB_PILOT_SUBCARRIERS};
use crate::{Error, Result};

/// Prior entries above this switch the diagonal estimator to the form that
/// never inverts the prior.
const LARGE_PRIOR: f64 = 1e6;

/// Eigenvalue ratio below which a PRB prior is treated as singular.
const NEAR_SINGULAR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// Joint LMMSE over `B` with a diagonal prior.
    Diagonal,
    /// Decoupled per-UE LMMSE with an identity-shaped covariance.
    PerUe,
    /// PRB layout: joint over `B` and the six pilot subcarriers.
    Prb,
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        crate::scenario::parse_kebab(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub units: Vec<CMat>,
}

impl ChannelEstimate {
    fn zeros(antennas: usize, ues: usize, units: usize) -> Self {
        ChannelEstimate {
            units: vec![CMat::zeros(antennas, ues); units],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.units.iter().all(|u| u.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

fn check_set(set: &[usize], ues: usize) -> Result<()> {
    match set.iter().find(|&&k| k >= ues) {
        Some(&index) => Err(Error::UeOutOfRange { index, ues }),
        None => Ok(()),
    }
}

/// Joint LMMSE on coherence-interval pilots.
///
/// `received[n]` is the `tau x M` pilot observation of frequency unit `n`,
/// `prior[k]` the variance of UE `k`'s coefficients. With
/// `P = Phi_B diag(a_B)` the filter is `E = P (C^-1 + P^H P)^-1` and
/// `G_B^T = E^H Y`.
pub fn lmmse_ci_diag(
    received: &[CMat],
    book: &PilotBook,
    set: &[usize],
    amplitude: &[f64],
    prior: &[f64],
) -> Result<ChannelEstimate> {
    let ues = book.ues();
    check_set(set, ues)?;
    let antennas = received.first().map_or(0, |y| y.ncols());
    let mut out = ChannelEstimate::zeros(antennas, ues, received.len());
    if set.is_empty() {
        return Ok(out);
    }
    if let Some(&c) = set.iter().map(|&k| &prior[k]).find(|&&c| !(c > 0.0)) {
        return Err(Error::InvalidArgument(format!("prior variance {c} must be positive")));
    }
    let p = CMat::from_fn(book.len(), set.len(), |t, j| {
        book.phi[(t, set[j])] * amplitude[set[j]]
    });
    let c: Vec<f64> = set.iter().map(|&k| prior[k]).collect();
    let e_h = if c.iter().any(|&x| x > LARGE_PRIOR) {
        // E^H = C P^H (I + P C P^H)^-1
        let pc = CMat::from_fn(p.nrows(), p.ncols(), |t, j| p[(t, j)] * c[j]);
        let inner = CMat::identity(p.nrows(), p.nrows()) + &pc * p.adjoint();
        let inv = hermitian_inverse(&inner, "diagonal LMMSE")?;
        pc.adjoint() * inv
    } else {
        let mut inner = p.adjoint() * &p;
        for (j, &x) in c.iter().enumerate() {
            inner[(j, j)] += 1.0 / x;
        }
        hermitian_inverse(&inner, "diagonal LMMSE")? * p.adjoint()
    };
    for (y, g) in received.iter().zip(out.units.iter_mut()) {
        let est = &e_h * y; // |B| x M
        for (j, &k) in set.iter().enumerate() {
            g.set_column(k, &est.row(j).transpose());
        }
    }
    Ok(out)
}

/// Per-UE LMMSE with covariance `const_k I`:
/// `g_k = a_k c_k / (a_k^2 c_k + 1) * Y^T conj(phi_k)`.
pub fn lmmse_ci_perue(
    received: &[CMat],
    book: &PilotBook,
    set: &[usize],
    amplitude: &[f64],
    constants: &[f64],
) -> Result<ChannelEstimate> {
    let ues = book.ues();
    check_set(set, ues)?;
    let antennas = received.first().map_or(0, |y| y.ncols());
    let mut out = ChannelEstimate::zeros(antennas, ues, received.len());
    for &k in set {
        let c = constants[k];
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!("UE {k}: covariance constant {c} must be positive")));
        }
        let a = amplitude[k];
        let gain = Complex64::from(a * c / (a * a * c + 1.0));
        let phi = book.pilot(k);
        for (y, g) in received.iter().zip(out.units.iter_mut()) {
            let z = y.ad_mul(&phi); // Y^H phi = conj(Y^T conj(phi))
            g.set_column(k, &(z.conjugate() * gain));
        }
    }
    Ok(out)
}

/// Joint LMMSE in the PRB layout.
///
/// `received` is the `24 x M` pilot observation (one column per antenna).
/// The unknowns per antenna are the coefficients of every UE in `B` on the six
/// pilot subcarriers, ordered like the columns of
/// [`PilotBook::assemble_prb_matrix`]; their prior couples subcarriers of the
/// same UE only. The returned estimate has one unit per pilot subcarrier.
pub fn lmmse_prb(
    received: &CMat,
    book: &PilotBook,
    set: &[usize],
    amplitude: &[f64],
    covariance: &SubcarrierCovariance,
) -> Result<ChannelEstimate> {
    let ues = book.ues();
    check_set(set, ues)?;
    let blocks = PRB_PILOT_SUBCARRIERS.len();
    let antennas = received.ncols();
    let mut out = ChannelEstimate::zeros(antennas, ues, blocks);
    if set.is_empty() {
        return Ok(out);
    }
    let n = set.len();
    let v = book.assemble_prb_matrix(set)?;
    let p = CMat::from_fn(v.nrows(), v.ncols(), |r, col| v[(r, col)] * amplitude[set[col % n]]);
    let prior = CMat::from_fn(blocks * n, blocks * n, |r, col| {
        let (i, a) = (r / n, r % n);
        let (j, b) = (col / n, col % n);
        if a == b {
            covariance.per_ue[set[a]][(i, j)]
        } else {
            Complex64::ZERO
        }
    });
    let well_conditioned = set.iter().all(|&k| {
        let eig = covariance.per_ue[k].clone().symmetric_eigenvalues();
        let max = eig.iter().cloned().fold(0.0, f64::max);
        eig.iter().all(|&l| l > NEAR_SINGULAR * max)
    });
    let chol = if well_conditioned { prior.clone().cholesky() } else { None };
    let e_h = match chol {
        Some(chol) => {
            let inner = chol.inverse() + p.adjoint() * &p;
            hermitian_inverse(&inner, "PRB LMMSE")? * p.adjoint()
        }
        None => {
            // singular prior: C P^H (P C P^H + I)^-1
            let cp_h = &prior * p.adjoint();
            let inner = &p * &cp_h + CMat::identity(p.nrows(), p.nrows());
            solve(inner.adjoint(), &cp_h.adjoint(), "PRB LMMSE")?.adjoint()
        }
    };
    let est = &e_h * received; // 6|B| x M
    for (i, g) in out.units.iter_mut().enumerate() {
        for (a, &k) in set.iter().enumerate() {
            g.set_column(k, &est.row(i * n + a).transpose());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal, complex_normal_matrix, max_abs_diff, CVec};
    use crate::pilots::{make_gold_pilots, make_orthogonal_pilots, make_orthogonal_pilots_len, PilotMode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex64 {
        Complex64::from(x)
    }

    #[test]
    fn scalar_wiener_filter() {
        let book = make_orthogonal_pilots(1).unwrap();
        let y = CMat::from_element(1, 1, Complex64::new(0.8, -0.4));
        let g = lmmse_ci_diag(&[y.clone()], &book, &[0], &[1.0], &[1.0]).unwrap();
        assert!((g.units[0][(0, 0)] - y[(0, 0)] / 2.0).norm() < 1e-15);
    }

    #[test]
    fn empty_set_gives_zero() {
        let book = make_gold_pilots(4, 8, PilotMode::GoldCi).unwrap();
        let y = vec![CMat::from_element(8, 3, c(1.0))];
        let g = lmmse_ci_diag(&y, &book, &[], &[1.0; 4], &[1.0; 4]).unwrap();
        assert!(g.units[0].iter().all(|z| *z == Complex64::ZERO));
        let prb = make_gold_pilots(4, 24, PilotMode::GoldPrb).unwrap();
        let cov = SubcarrierCovariance::from_normalized(&CMat::identity(6, 6), &[1.0; 4]);
        let g = lmmse_prb(&CMat::from_element(24, 3, c(1.0)), &prb, &[], &[1.0; 4], &cov).unwrap();
        assert_eq!(g.units.len(), 6);
        assert!(g.units.iter().all(|u| u.iter().all(|z| *z == Complex64::ZERO)));
    }

    #[test]
    fn orthogonal_pilots_decouple() {
        let tau = 6;
        let book = make_orthogonal_pilots(tau).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = vec![complex_normal_matrix(tau, 5, &mut rng)];
        let amp: Vec<f64> = (0..tau).map(|k| (1.0 + k as f64).sqrt()).collect();
        let beta: Vec<f64> = (0..tau).map(|k| 0.3 + 0.2 * k as f64).collect();
        let set = [0, 2, 3, 5];
        let joint = lmmse_ci_diag(&y, &book, &set, &amp, &beta).unwrap();
        let per_ue = lmmse_ci_perue(&y, &book, &set, &amp, &beta).unwrap();
        assert!(max_abs_diff(&joint.units[0], &per_ue.units[0]) < 1e-10);
        for k in [1, 4] {
            assert!(joint.units[0].column(k).iter().all(|z| *z == Complex64::ZERO));
        }
    }

    #[test]
    fn large_prior_fallback_agrees() {
        let book = make_gold_pilots(3, 8, PilotMode::GoldCi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y = vec![complex_normal_matrix(8, 2, &mut rng)];
        let amp = [1.0, 2.0, 0.5];
        let a = lmmse_ci_diag(&y, &book, &[0, 1, 2], &amp, &[1e5, 3.0, 0.2]).unwrap();
        let b = lmmse_ci_diag(&y, &book, &[0, 1, 2], &amp, &[1e5 * (1.0 + 1e-12), 3.0, 0.2]).unwrap();
        let f = lmmse_ci_diag(&y, &book, &[0, 1, 2], &amp, &[2e6, 3.0, 0.2]).unwrap();
        assert!(max_abs_diff(&a.units[0], &b.units[0]) < 1e-9);
        assert!(f.is_finite());
        // same problem through both code paths
        let big = [5e6, 3.0, 0.2];
        let fallback = lmmse_ci_diag(&y, &book, &[0, 1, 2], &amp, &big).unwrap();
        let p = CMat::from_fn(8, 3, |t, j| book.phi[(t, j)] * amp[j]);
        let mut inner = p.adjoint() * &p;
        for j in 0..3 {
            inner[(j, j)] += 1.0 / big[j];
        }
        let direct = inner.try_inverse().unwrap() * p.adjoint() * &y[0];
        assert!(max_abs_diff(&fallback.units[0].transpose(), &direct) < 1e-8);
    }

    #[test]
    fn per_ue_limits() {
        let book = make_orthogonal_pilots(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = vec![complex_normal_matrix(4, 3, &mut rng)];
        let a = 3.0f64;
        let g = lmmse_ci_perue(&y, &book, &[2], &[a; 4], &[1e12; 4]).unwrap();
        let mf = y[0].transpose() * book.pilot(2).conjugate() / c(a);
        assert!(max_abs_diff(&g.units[0].column(2).into_owned(), &mf) < 1e-9);
        assert!(lmmse_ci_perue(&y, &book, &[1], &[a; 4], &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn per_ue_noise_free_bias() {
        let book = make_orthogonal_pilots(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = CVec::from_fn(3, |_, _| complex_normal(&mut rng));
        let (a, cst) = (2.0, 0.7);
        let y = book.pilot(1) * g.transpose() * c(a);
        let est = lmmse_ci_perue(&[y], &book, &[1], &[a; 4], &[cst; 4]).unwrap();
        let expected = &g * c(a * a * cst / (a * a * cst + 1.0));
        assert!((est.units[0].column(1) - expected).norm() < 1e-12);
    }

    #[test]
    fn prb_flat_noise_free_shrinkage() {
        let book = make_gold_pilots(2, 24, PilotMode::GoldPrb).unwrap();
        let (amp, beta) = (3.0f64, 0.8);
        // flat channel: nearly singular prior exercises the fallback form
        let cov = SubcarrierCovariance::from_normalized(&CMat::from_element(6, 6, c(1.0)), &[beta, beta]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = CVec::from_fn(4, |_, _| complex_normal(&mut rng));
        let y = book.pilot(0) * g.transpose() * c(amp);
        let est = lmmse_prb(&y, &book, &[0], &[amp, amp], &cov).unwrap();
        let shrink = amp * amp * beta / (amp * amp * beta + 1.0);
        for unit in &est.units {
            assert!((unit.column(0) - &g * c(shrink)).norm() < 1e-9);
        }
    }

    #[test]
    fn prb_diagonal_prior_decouples_blocks() {
        let book = make_gold_pilots(3, 24, PilotMode::GoldPrb).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let y = complex_normal_matrix(24, 2, &mut rng);
        let beta = [0.5, 1.5, 2.0];
        let amp = [1.0, 2.0, 1.5];
        let cov = SubcarrierCovariance::from_normalized(&CMat::identity(6, 6), &beta);
        let set = [0, 2];
        let est = lmmse_prb(&y, &book, &set, &amp, &cov).unwrap();
        for i in 0..6 {
            // independent 4-symbol problem on block i
            let p = CMat::from_fn(4, 2, |r, a| book.phi[(4 * i + r, set[a])] * amp[set[a]]);
            let mut inner = p.adjoint() * &p;
            for (a, &k) in set.iter().enumerate() {
                inner[(a, a)] += 1.0 / beta[k];
            }
            let local = inner.try_inverse().unwrap() * p.adjoint() * y.rows(4 * i, 4);
            for (a, &k) in set.iter().enumerate() {
                assert!((est.units[i].column(k) - local.row(a).transpose()).norm() < 1e-10);
            }
            assert!(est.units[i].column(1).iter().all(|z| *z == Complex64::ZERO));
        }
    }

    #[test]
    fn out_of_range_set_rejected() {
        let book = make_orthogonal_pilots_len(2, 2).unwrap();
        let y = vec![CMat::zeros(2, 1)];
        assert!(matches!(
            lmmse_ci_diag(&y, &book, &[2], &[1.0; 2], &[1.0; 2]),
            Err(Error::UeOutOfRange { index: 2, ues: 2 })
        ));
    }

    #[test]
    fn error_orthogonal_to_observation() {
        // E[(g - g_hat) y^H] = 0 under matched priors
        let book = make_gold_pilots(3, 4, PilotMode::GoldCi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let amp = [1.2, 0.7, 1.0];
        let beta = [1.0, 2.0, 0.5];
        let n = 100_000;
        let mut corr = vec![Complex64::ZERO; 4];
        let (mut err_pow, mut y_pow) = (0.0, vec![0.0; 4]);
        for _ in 0..n {
            let g: Vec<Complex64> = beta.iter().map(|b: &f64| complex_normal(&mut rng) * b.sqrt()).collect();
            let mut y = complex_normal_matrix(4, 1, &mut rng);
            for k in 0..3 {
                for t in 0..4 {
                    y[(t, 0)] += book.phi[(t, k)] * amp[k] * g[k];
                }
            }
            let est = lmmse_ci_diag(&[y.clone()], &book, &[0, 1, 2], &amp, &beta).unwrap();
            let e = g[0] - est.units[0][(0, 0)];
            err_pow += e.norm_sqr();
            for t in 0..4 {
                corr[t] += e * y[(t, 0)].conj();
                y_pow[t] += y[(t, 0)].norm_sqr();
            }
        }
        for t in 0..4 {
            let r = corr[t].norm() / (err_pow * y_pow[t]).sqrt();
            assert!(r < 0.02, "{r}");
        }
    }

    #[test]
    fn mse_non_increasing_in_pilot_snr() {
        let book = make_gold_pilots(4, 6, PilotMode::GoldCi).unwrap();
        let beta = [1.0; 4];
        let mut prev = f64::INFINITY;
        for step in 0..10 {
            let rho = 0.1 * 2f64.powi(step);
            let amp = [(6.0 * rho).sqrt(); 4];
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let mut mse = 0.0;
            let trials = 10_000;
            for _ in 0..trials {
                let g = complex_normal_matrix(1, 4, &mut rng);
                let mut y = complex_normal_matrix(6, 1, &mut rng);
                y += &book.phi * CMat::from_fn(4, 1, |k, _| g[(0, k)] * amp[k]);
                let est = lmmse_ci_diag(&[y], &book, &[0, 1, 2, 3], &amp, &beta).unwrap();
                mse += (&est.units[0] - &g).norm_squared();
            }
            let mse = mse / trials as f64;
            assert!(mse <= prev, "rho {rho}: {mse} > {prev}");
            prev = mse;
        }
    }
}
