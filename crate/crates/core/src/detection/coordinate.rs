//! Covariance-based activity detection by coordinate descent.
//!
//! The received pilot covariance is modelled as `Sigma = I + sum_k gamma_k S_k`
//! where `S_k` is UE `k`'s signature matrix (`phi_k phi_k^H` for
//! coherence-interval pilots). Each coordinate step picks a UE, computes a step
//! `d*` from the sample covariance, clamps it so that `gamma_k` stays
//! non-negative, and applies the update to `Sigma` and to its inverse
//! (Sherman-Morrison per rank-one term).

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use super::DetectionResult;
use crate::channel::SubcarrierCovariance;
use crate::linalg::{check_psd, hermitian_inverse, CMat, CVec, ONE, ZERO};
use crate::pilots::PilotBook;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateVariant {
    /// Maximum likelihood.
    Ml,
    /// Multiple measurement vector.
    Mmv,
    /// Non-negative least squares.
    Nnls,
}

/// A UE's contribution to the pilot covariance.
///
/// `terms` are vectors `t` with `S_k = sum t t^H`; `effective` is the single
/// vector the step-size formulas see. For coherence-interval pilots both are
/// the pilot itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub effective: CVec,
    pub terms: Vec<CVec>,
}

impl Signature {
    pub fn rank_one(phi: CVec) -> Self {
        Signature {
            terms: vec![phi.clone()],
            effective: phi,
        }
    }

    /// PRB signature of UE `k`: `S_k = V_k R_k V_k^H` with `V_k` the UE's
    /// 24 x 6 block pilot matrix and `R_k` its subcarrier covariance
    /// normalized to unit mean diagonal.
    ///
    /// The step size uses the dominant eigen-direction
    /// `sqrt(lambda_max) V_k e_max`. When the six pilot subcarriers are fully
    /// correlated this is exactly the 24-symbol pilot and the detector reduces
    /// to plain ML.
    pub fn prb(book: &PilotBook, k: usize, covariance: &CMat) -> Result<Self> {
        let v = book.assemble_prb_matrix(&[k])?;
        let scale = covariance.diagonal().iter().map(|z| z.re).sum::<f64>() / covariance.nrows() as f64;
        if !(scale > 0.0) {
            return Ok(Signature {
                effective: CVec::zeros(v.nrows()),
                terms: Vec::new(),
            });
        }
        let normalized = covariance / Complex64::from(scale);
        let eig = SymmetricEigen::new(normalized);
        let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let mut terms = Vec::new();
        let mut effective = CVec::zeros(v.nrows());
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= 1e-12 * lambda_max {
                continue;
            }
            let t = &v * eig.eigenvectors.column(i) * Complex64::from(lambda.sqrt());
            if lambda == lambda_max && effective.iter().all(|z| *z == ZERO) {
                effective = t.clone();
            }
            terms.push(t);
        }
        Ok(Signature { effective, terms })
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Signatures of every UE in a PRB pilot book.
pub fn prb_signatures(book: &PilotBook, covariance: &SubcarrierCovariance) -> Result<Vec<Signature>> {
    if covariance.per_ue.len() != book.ues() {
        return Err(Error::InvalidArgument(format!(
            "{} covariances for {} UEs",
            covariance.per_ue.len(),
            book.ues()
        )));
    }
    covariance
        .per_ue
        .iter()
        .enumerate()
        .map(|(k, c)| {
            check_psd(c, 1e-9)?;
            Signature::prb(book, k, c)
        })
        .collect()
}

/// Sample covariance `Y Y^H / columns` over all frequency units.
pub fn sample_covariance(units: &[CMat]) -> CMat {
    let rows = units.first().map_or(0, |u| u.nrows());
    let mut acc = CMat::zeros(rows, rows);
    let mut columns = 0;
    for y in units {
        acc.gemm(ONE, y, &y.adjoint(), ONE);
        columns += y.ncols();
    }
    acc / Complex64::from(columns.max(1) as f64)
}

/// Working state of the coordinate-descent detectors.
#[derive(Debug, Clone)]
pub struct CoordinateState {
    sample_cov: CMat,
    sigma: CMat,
    sigma_inv: CMat,
    gamma: Vec<f64>,
    q: CVec,
    tmp: CVec,
}

impl CoordinateState {
    /// `Sigma = I`, `gamma = 0`.
    pub fn new(sample_cov: CMat, ues: usize) -> Self {
        let n = sample_cov.nrows();
        CoordinateState {
            sample_cov,
            sigma: CMat::identity(n, n),
            sigma_inv: CMat::identity(n, n),
            gamma: vec![0.0; ues],
            q: CVec::zeros(n),
            tmp: CVec::zeros(n),
        }
    }

    pub fn sigma(&self) -> &CMat {
        &self.sigma
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn into_gamma(self) -> Vec<f64> {
        self.gamma
    }

    /// Clamped step for UE `k`.
    pub fn step_size(&mut self, signature: &Signature, k: usize, variant: CoordinateVariant) -> f64 {
        if signature.is_zero() {
            return 0.0;
        }
        let u = &signature.effective;
        let raw = match variant {
            CoordinateVariant::Ml | CoordinateVariant::Mmv => {
                self.q.gemv(ONE, &self.sigma_inv, u, ZERO);
                let a = u.dotc(&self.q).re;
                self.tmp.gemv(ONE, &self.sample_cov, &self.q, ZERO);
                let b = self.q.dotc(&self.tmp).re;
                if variant == CoordinateVariant::Ml {
                    (b - a) / (a * a)
                } else {
                    (b.max(0.0).sqrt() - 1.0) / a
                }
            }
            CoordinateVariant::Nnls => {
                let diff = &self.sample_cov - &self.sigma;
                self.tmp.gemv(ONE, &diff, u, ZERO);
                let norm2 = u.norm_squared();
                u.dotc(&self.tmp).re / (norm2 * norm2)
            }
        };
        raw.max(-self.gamma[k])
    }

    /// `gamma_k += d`, `Sigma += d S_k`, inverse updated term by term.
    pub fn apply(&mut self, signature: &Signature, k: usize, d: f64) {
        if d == 0.0 {
            return;
        }
        self.gamma[k] = (self.gamma[k] + d).max(0.0);
        let dc = Complex64::from(d);
        for t in &signature.terms {
            self.sigma.gerc(dc, t, t, ONE);
            self.q.gemv(ONE, &self.sigma_inv, t, ZERO);
            let denom = 1.0 + d * t.dotc(&self.q).re;
            let q = self.q.clone();
            self.sigma_inv.gerc(Complex64::from(-d / denom), &q, &q, ONE);
        }
    }

    pub fn step(&mut self, signature: &Signature, k: usize, variant: CoordinateVariant) -> f64 {
        let d = self.step_size(signature, k, variant);
        self.apply(signature, k, d);
        d
    }

    /// Recomputes `Sigma^{-1}` from `Sigma` to shed accumulated rounding.
    pub fn refresh_inverse(&mut self) -> Result<()> {
        self.sigma_inv = hermitian_inverse(&self.sigma, "coordinate descent covariance")?;
        Ok(())
    }

    /// Negative log-likelihood up to constants:
    /// `log det Sigma + tr(Sigma^{-1} Sigma_hat)`.
    pub fn ml_objective(&self) -> Result<f64> {
        let chol = self
            .sigma
            .clone()
            .cholesky()
            .ok_or(Error::Singular("coordinate descent covariance"))?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|z| z.re.ln()).sum::<f64>();
        let trace = chol.solve(&self.sample_cov).trace().re;
        Ok(log_det + trace)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub max_sweeps: usize,
    /// Stop once every step of a sweep satisfies `|d| <= tol * max(1, gamma_k)`.
    pub tolerance: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            max_sweeps: 50,
            tolerance: 1e-6,
        }
    }
}

/// Runs coordinate descent in random-permutation sweeps. Returns the final
/// gamma and the number of sweeps.
pub fn coordinate_descent<R: Rng + ?Sized>(
    sample_cov: &CMat,
    signatures: &[Signature],
    variant: CoordinateVariant,
    options: SweepOptions,
    rng: &mut R,
) -> Result<(Vec<f64>, usize)> {
    let mut state = CoordinateState::new(sample_cov.clone(), signatures.len());
    let mut order: Vec<usize> = (0..signatures.len()).collect();
    let mut sweeps = 0;
    while sweeps < options.max_sweeps {
        sweeps += 1;
        if sweeps > 1 {
            state.refresh_inverse()?;
        }
        order.shuffle(rng);
        let mut worst = 0.0f64;
        for &k in &order {
            let d = state.step(&signatures[k], k, variant);
            worst = worst.max(d.abs() / state.gamma[k].max(1.0));
        }
        if worst <= options.tolerance {
            break;
        }
    }
    Ok((state.into_gamma(), sweeps))
}

/// Coordinate-descent detection over rank-one pilot signatures.
pub fn coordinate_descent_detect<R: Rng + ?Sized>(
    sample_cov: &CMat,
    book: &PilotBook,
    variant: CoordinateVariant,
    options: SweepOptions,
    threshold: f64,
    rng: &mut R,
) -> Result<DetectionResult> {
    let signatures: Vec<Signature> = (0..book.ues()).map(|k| Signature::rank_one(book.pilot(k))).collect();
    let (gamma, sweeps) = coordinate_descent(sample_cov, &signatures, variant, options, rng)?;
    Ok(DetectionResult::from_statistics(gamma, threshold, sweeps))
}

/// ML detection in the PRB layout with covariance-weighted signatures.
pub fn prb_ml_detect<R: Rng + ?Sized>(
    sample_cov: &CMat,
    signatures: &[Signature],
    options: SweepOptions,
    threshold: f64,
    rng: &mut R,
) -> Result<DetectionResult> {
    let (gamma, sweeps) = coordinate_descent(sample_cov, signatures, CoordinateVariant::Ml, options, rng)?;
    Ok(DetectionResult::from_statistics(gamma, threshold, sweeps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal, complex_normal_matrix, frobenius, max_abs_diff};
    use crate::pilots::{make_gold_pilots, PilotMode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(values.len(), values.iter().map(|&v| Complex64::from(v))))
    }

    fn e1() -> Signature {
        Signature::rank_one(CVec::from_vec(vec![ONE, ZERO]))
    }

    #[test]
    fn hand_evaluated_first_step() {
        let cov = diag(&[3.0, 1.0]);
        for (variant, expected) in [
            (CoordinateVariant::Ml, 2.0),
            (CoordinateVariant::Nnls, 2.0),
            (CoordinateVariant::Mmv, 3f64.sqrt() - 1.0),
        ] {
            let mut s = CoordinateState::new(cov.clone(), 1);
            let d = s.step_size(&e1(), 0, variant);
            assert!((d - expected).abs() < 1e-15, "{variant:?}: {d}");
        }
    }

    #[test]
    fn identity_sample_covariance_is_fixed_point() {
        for variant in [CoordinateVariant::Ml, CoordinateVariant::Mmv, CoordinateVariant::Nnls] {
            let mut s = CoordinateState::new(CMat::identity(2, 2), 1);
            assert_eq!(s.step(&e1(), 0, variant), 0.0);
            assert_eq!(s.gamma(), &[0.0]);
        }
    }

    #[test]
    fn step_clamped_at_minus_gamma() {
        for variant in [CoordinateVariant::Ml, CoordinateVariant::Mmv, CoordinateVariant::Nnls] {
            let mut s = CoordinateState::new(diag(&[100.0, 1.0]), 1);
            s.step(&e1(), 0, variant);
            assert!(s.gamma()[0] > 1.0);
            // data now says there is nothing in the e1 direction
            s.sample_cov = diag(&[0.01, 1.0]);
            let g = s.gamma()[0];
            let d = s.step(&e1(), 0, variant);
            assert_eq!(d, -g);
            assert_eq!(s.gamma()[0], 0.0);
        }
    }

    fn random_problem(rng: &mut ChaCha8Rng, tau: usize, ues: usize) -> (CMat, Vec<Signature>) {
        let book = make_gold_pilots(ues, tau, PilotMode::GoldCi).unwrap();
        let sigs: Vec<Signature> = (0..ues).map(|k| Signature::rank_one(book.pilot(k))).collect();
        let x = complex_normal_matrix(tau, 3 * tau, rng);
        let mut cov = &x * x.adjoint() / Complex64::from(3.0 * tau as f64);
        // plant a few strong UEs
        for k in [0, 3] {
            cov.gerc(Complex64::from(5.0), &sigs[k].effective, &sigs[k].effective, ONE);
        }
        (cov, sigs)
    }

    fn model_covariance(sigs: &[Signature], gamma: &[f64]) -> CMat {
        let n = sigs[0].effective.len();
        let mut m = CMat::identity(n, n);
        for (s, &g) in sigs.iter().zip(gamma) {
            for t in &s.terms {
                m.gerc(Complex64::from(g), t, t, ONE);
            }
        }
        m
    }

    #[test]
    fn sigma_tracks_gamma_and_gamma_stays_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for variant in [CoordinateVariant::Ml, CoordinateVariant::Mmv, CoordinateVariant::Nnls] {
            let (cov, sigs) = random_problem(&mut rng, 8, 12);
            let mut s = CoordinateState::new(cov, sigs.len());
            for _ in 0..1000 {
                let k = rng.random_range(0..sigs.len());
                s.step(&sigs[k], k, variant);
                assert!(s.gamma().iter().all(|&g| g >= 0.0));
            }
            let err = frobenius(&(s.sigma() - model_covariance(&sigs, s.gamma())));
            assert!(err < 1e-9, "{variant:?}: {err}");
        }
    }

    #[test]
    fn ml_step_never_increases_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (cov, sigs) = random_problem(&mut rng, 6, 10);
        let mut s = CoordinateState::new(cov, sigs.len());
        let mut prev = s.ml_objective().unwrap();
        for _ in 0..500 {
            let k = rng.random_range(0..sigs.len());
            s.step(&sigs[k], k, CoordinateVariant::Ml);
            let now = s.ml_objective().unwrap();
            assert!(now <= prev + 1e-8, "{prev} -> {now}");
            prev = now;
        }
    }

    #[test]
    fn inverse_stays_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let (cov, sigs) = random_problem(&mut rng, 8, 12);
        let mut s = CoordinateState::new(cov, sigs.len());
        for _ in 0..300 {
            let k = rng.random_range(0..sigs.len());
            s.step(&sigs[k], k, CoordinateVariant::Ml);
        }
        let inv = hermitian_inverse(s.sigma(), "test").unwrap();
        assert!(max_abs_diff(&inv, &s.sigma_inv) < 1e-8);
    }

    #[test]
    fn flat_prb_covariance_reduces_to_ml() {
        let book = make_gold_pilots(6, 24, PilotMode::GoldPrb).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let beta = [2.0, 0.5, 1.0, 3.0, 0.1, 1.0];
        let cov = SubcarrierCovariance {
            per_ue: beta.iter().map(|&b| CMat::from_element(6, 6, Complex64::from(b))).collect(),
        };
        let prb = prb_signatures(&book, &cov).unwrap();
        for (k, sig) in prb.iter().enumerate() {
            // effective signature is the pilot up to a global phase
            let phase = sig.effective.dotc(&book.pilot(k));
            assert!((phase.norm() - 1.0).abs() < 1e-12);
            assert!(max_abs_diff(&(sig.effective.clone() * phase), &book.pilot(k)) < 1e-12);
            assert_eq!(sig.terms.len(), 1);
        }
        let x = complex_normal_matrix(24, 40, &mut rng);
        let sample = &x * x.adjoint() / Complex64::from(40.0);
        let rank_one: Vec<Signature> = (0..6).map(|k| Signature::rank_one(book.pilot(k))).collect();
        let mut a = CoordinateState::new(sample.clone(), 6);
        let mut b = CoordinateState::new(sample, 6);
        for i in 0..120 {
            let k = i % 6;
            let da = a.step(&prb[k], k, CoordinateVariant::Ml);
            let db = b.step(&rank_one[k], k, CoordinateVariant::Ml);
            assert!((da - db).abs() < 1e-9 * db.abs().max(1.0));
        }
        assert!(max_abs_diff(a.sigma(), b.sigma()) < 1e-9);
    }

    #[test]
    fn zero_covariance_never_moves() {
        let book = make_gold_pilots(3, 24, PilotMode::GoldPrb).unwrap();
        let cov = SubcarrierCovariance { per_ue: vec![CMat::zeros(6, 6); 3] };
        let sigs = prb_signatures(&book, &cov).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = complex_normal_matrix(24, 30, &mut rng) * Complex64::from(3.0);
        let sample = &x * x.adjoint() / Complex64::from(30.0);
        let (gamma, _) =
            coordinate_descent(&sample, &sigs, CoordinateVariant::Ml, SweepOptions::default(), &mut rng).unwrap();
        assert_eq!(gamma, vec![0.0; 3]);
    }

    #[test]
    fn non_psd_covariance_rejected() {
        let book = make_gold_pilots(1, 24, PilotMode::GoldPrb).unwrap();
        let mut c = CMat::identity(6, 6);
        c[(0, 0)] = Complex64::from(-1.0);
        let cov = SubcarrierCovariance { per_ue: vec![c] };
        assert!(matches!(prb_signatures(&book, &cov), Err(Error::NotPsd(_))));
    }

    #[test]
    fn strong_active_ue_dominates_gamma() {
        let tau = 24;
        let book = make_gold_pilots(20, tau, PilotMode::GoldCi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let m = 64;
        let mut y = complex_normal_matrix(tau, m, &mut rng);
        let amp = Complex64::from(30.0);
        for col in 0..m {
            let g = complex_normal(&mut rng) * amp;
            let phi = book.pilot(7);
            for t in 0..tau {
                y[(t, col)] += phi[t] * g;
            }
        }
        let cov = sample_covariance(&[y]);
        let r = coordinate_descent_detect(&cov, &book, CoordinateVariant::Ml, SweepOptions::default(), 100.0, &mut rng)
            .unwrap();
        assert_eq!(r.active, vec![7]);
        assert!(r.iterations >= 1 && r.iterations <= 50);
    }
}
