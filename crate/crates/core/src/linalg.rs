//! Dense complex linear-algebra helpers shared by the receive chain.

use nalgebra::{DMatrix, DVector, Dim, Matrix, RawStorage};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// One draw from CN(0, 1).
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    // column-major fill order is part of the determinism contract
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Inverse of a Hermitian positive-definite matrix, falling back to LU when
/// the Cholesky factorization fails numerically.
pub fn hermitian_inverse(a: &CMat, context: &'static str) -> Result<CMat> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.inverse());
    }
    a.clone().try_inverse().ok_or(Error::Singular(context))
}

/// Solves `a x = b` for a general square `a`.
pub fn solve(a: CMat, b: &CMat, context: &'static str) -> Result<CMat> {
    a.lu().solve(b).ok_or(Error::Singular(context))
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise modulus of `a - b` (matrices or vectors of equal shape).
pub fn max_abs_diff<R: Dim, C: Dim, S1, S2>(a: &Matrix<Complex64, R, C, S1>, b: &Matrix<Complex64, R, C, S2>) -> f64
where
    S1: RawStorage<Complex64, R, C>,
    S2: RawStorage<Complex64, R, C>,
{
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Checks Hermitian symmetry and non-negative eigenvalues up to `tol`
/// relative to the largest eigenvalue magnitude.
pub fn check_psd(a: &CMat, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotPsd(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let asym = max_abs_diff(a, &a.adjoint());
    if asym > tol * scale {
        return Err(Error::NotPsd(format!("not Hermitian (deviation {asym:e})")));
    }
    let eig = a.clone().symmetric_eigenvalues();
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -tol * scale {
        return Err(Error::NotPsd(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
