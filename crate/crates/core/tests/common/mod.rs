//! Helpers shared by the integration targets: an independent joint-Gaussian
//! conditional-mean oracle and random small estimation instances.

#![allow(dead_code)]

use mmimo_urllc::channel::SubcarrierCovariance;
use mmimo_urllc::estimation::{lmmse_ci_diag, lmmse_ci_perue, lmmse_prb};
use mmimo_urllc::linalg::{complex_normal, complex_normal_matrix, CMat, CVec};
use mmimo_urllc::pilots::{make_gold_pilots, make_orthogonal_pilots_len, PilotBook, PilotMode, PRB_BLOCK_LEN};
use num_complex::Complex64;
use rand::Rng;

/// `E[x | y]` for `y = A x + w`, `x ~ CN(0, C)`, `w ~ CN(0, I)`, written
/// straight from the joint covariance of `(x, y)`.
pub fn posterior_mean(a: &CMat, prior: &CMat, y: &CVec) -> CVec {
    let cov_xy = prior * a.adjoint();
    let cov_yy = a * &cov_xy + CMat::identity(a.nrows(), a.nrows());
    let w = cov_yy.lu().solve(y).expect("observation covariance is positive definite");
    cov_xy * w
}

fn random_subset<R: Rng>(ues: usize, rng: &mut R) -> Vec<usize> {
    loop {
        let set: Vec<usize> = (0..ues).filter(|_| rng.random_bool(0.7)).collect();
        if !set.is_empty() {
            return set;
        }
    }
}

fn random_pilots<R: Rng>(ues: usize, tau: usize, rng: &mut R) -> PilotBook {
    let mut phi = complex_normal_matrix(tau, ues, rng);
    for mut col in phi.column_iter_mut() {
        let n = col.norm();
        col /= Complex64::from(n);
    }
    PilotBook {
        mode: PilotMode::GoldCi,
        phi,
        seeds: None,
    }
}

/// Worst absolute gap between an estimator and the oracle on one random
/// coherence-interval instance (`K <= 2`, `tau <= 4`, `M <= 2`).
///
/// With `orthogonal` the pilots are orthonormal and the per-UE estimator is
/// checked; otherwise random unit-norm pilots and the joint estimator.
pub fn ci_instance_gap<R: Rng>(orthogonal: bool, rng: &mut R) -> f64 {
    let ues = rng.random_range(1..=2);
    let tau = rng.random_range(if orthogonal { ues } else { 1 }..=4);
    let antennas = rng.random_range(1..=2);
    let units = rng.random_range(1..=2);
    let book = if orthogonal {
        make_orthogonal_pilots_len(ues, tau).unwrap()
    } else {
        random_pilots(ues, tau, rng)
    };
    let set = random_subset(ues, rng);
    let amplitude: Vec<f64> = (0..ues).map(|_| rng.random_range(0.2..3.0)).collect();
    let prior: Vec<f64> = (0..ues).map(|_| rng.random_range(0.05..4.0)).collect();
    let received: Vec<CMat> = (0..units).map(|_| complex_normal_matrix(tau, antennas, rng) * Complex64::from(2.0)).collect();

    let est = if orthogonal {
        lmmse_ci_perue(&received, &book, &set, &amplitude, &prior).unwrap()
    } else {
        lmmse_ci_diag(&received, &book, &set, &amplitude, &prior).unwrap()
    };

    // unknowns ordered (unit, antenna, member of set); observations (unit, symbol, antenna)
    let b = set.len();
    let unk = |n: usize, m: usize, j: usize| (n * antennas + m) * b + j;
    let obs = |n: usize, t: usize, m: usize| (n * tau + t) * antennas + m;
    let mut a = CMat::zeros(units * tau * antennas, units * antennas * b);
    let mut c = CMat::zeros(units * antennas * b, units * antennas * b);
    let mut y = CVec::zeros(units * tau * antennas);
    for n in 0..units {
        for m in 0..antennas {
            for (j, &k) in set.iter().enumerate() {
                c[(unk(n, m, j), unk(n, m, j))] = Complex64::from(prior[k]);
                for t in 0..tau {
                    a[(obs(n, t, m), unk(n, m, j))] = book.phi[(t, k)] * amplitude[k];
                }
            }
            for t in 0..tau {
                y[obs(n, t, m)] = received[n][(t, m)];
            }
        }
    }
    let mean = posterior_mean(&a, &c, &y);

    let mut gap = 0.0f64;
    for n in 0..units {
        for m in 0..antennas {
            for k in 0..ues {
                let want = match set.iter().position(|&s| s == k) {
                    Some(j) => mean[unk(n, m, j)],
                    None => Complex64::ZERO,
                };
                gap = gap.max((est.units[n][(m, k)] - want).norm());
            }
        }
    }
    gap
}

/// Random 6 x 6 Hermitian PSD matrix; rank one when `singular`.
fn random_covariance<R: Rng>(singular: bool, rng: &mut R) -> CMat {
    let cols = if singular { 1 } else { 8 };
    let f = complex_normal_matrix(6, cols, rng);
    &f * f.adjoint() * Complex64::from(rng.random_range(0.1..2.0) / cols as f64)
}

/// Worst absolute gap between the PRB estimator and the oracle on one random
/// instance (`K <= 2`, `M <= 2`, the 24-symbol PRB layout).
pub fn prb_instance_gap<R: Rng>(rng: &mut R) -> f64 {
    let ues = rng.random_range(1..=2);
    let antennas = rng.random_range(1..=2);
    let book = make_gold_pilots(ues, 24, PilotMode::GoldPrb).unwrap();
    let set = random_subset(ues, rng);
    let singular = rng.random_bool(0.2);
    let cov = SubcarrierCovariance {
        per_ue: (0..ues).map(|_| random_covariance(singular, rng)).collect(),
    };
    let amplitude: Vec<f64> = (0..ues).map(|_| rng.random_range(0.2..3.0)).collect();
    let mut received = CMat::zeros(24, antennas);
    for z in received.iter_mut() {
        *z = complex_normal(rng) * 2.0;
    }
    let est = lmmse_prb(&received, &book, &set, &amplitude, &cov).unwrap();

    // unknowns ordered (antenna, subcarrier block, member); observations (symbol, antenna)
    let blocks = 6;
    let b = set.len();
    let unk = |m: usize, i: usize, j: usize| (m * blocks + i) * b + j;
    let mut a = CMat::zeros(24 * antennas, antennas * blocks * b);
    let mut c = CMat::zeros(antennas * blocks * b, antennas * blocks * b);
    let mut y = CVec::zeros(24 * antennas);
    for m in 0..antennas {
        for (j, &k) in set.iter().enumerate() {
            for i in 0..blocks {
                for i2 in 0..blocks {
                    c[(unk(m, i, j), unk(m, i2, j))] = cov.per_ue[k][(i, i2)];
                }
                for r in i * PRB_BLOCK_LEN..(i + 1) * PRB_BLOCK_LEN {
                    a[(r * antennas + m, unk(m, i, j))] = book.phi[(r, k)] * amplitude[k];
                }
            }
        }
        for r in 0..24 {
            y[r * antennas + m] = received[(r, m)];
        }
    }
    let mean = posterior_mean(&a, &c, &y);

    let mut gap = 0.0f64;
    for m in 0..antennas {
        for i in 0..blocks {
            for k in 0..ues {
                let want = match set.iter().position(|&s| s == k) {
                    Some(j) => mean[unk(m, i, j)],
                    None => Complex64::ZERO,
                };
                gap = gap.max((est.units[i][(m, k)] - want).norm());
            }
        }
    }
    gap
}

/// Worst deviations seen over `updates` random coordinate steps.
#[derive(Debug, Clone, Copy, Default)]
pub struct InvariantReport {
    /// Frobenius gap between the tracked `Sigma` and `I + sum gamma_k S_k`.
    pub sigma_gap: f64,
    pub min_gamma: f64,
    /// Largest increase of the ML objective over a single step.
    pub objective_rise: f64,
}

/// Applies `updates` steps of `variant` to random UEs of a random instance
/// (`tau = 8`, `K = 12`, three active UEs) and tracks the invariants.
/// With `prb` the 24-symbol PRB signatures under a random subcarrier
/// covariance replace the rank-one pilots.
pub fn coordinate_invariants<R: Rng>(
    variant: mmimo_urllc::detection::CoordinateVariant,
    prb: bool,
    updates: usize,
    rng: &mut R,
) -> InvariantReport {
    use mmimo_urllc::detection::{prb_signatures, sample_covariance, CoordinateState, Signature};

    let ues = 12;
    let (tau, signatures) = if prb {
        let book = make_gold_pilots(ues, 24, PilotMode::GoldPrb).unwrap();
        let cov = SubcarrierCovariance {
            per_ue: (0..ues).map(|_| random_covariance(false, rng)).collect(),
        };
        (24, prb_signatures(&book, &cov).unwrap())
    } else {
        let book = random_pilots(ues, 8, rng);
        (8, (0..ues).map(|k| Signature::rank_one(book.pilot(k))).collect::<Vec<_>>())
    };
    let antennas = 16;
    let mut y = complex_normal_matrix(tau, antennas, rng);
    for _ in 0..3 {
        let k = rng.random_range(0..ues);
        let gain = Complex64::from(rng.random_range(1.0..10.0f64).sqrt());
        for t in &signatures[k].terms {
            let g = complex_normal_matrix(1, antennas, rng);
            y += t * g * gain;
        }
    }
    let mut state = CoordinateState::new(sample_covariance(&[y]), ues);
    let mut report = InvariantReport::default();
    let mut objective = state.ml_objective().unwrap();
    for step in 0..updates {
        if step % ues == ues - 1 {
            state.refresh_inverse().unwrap();
        }
        let k = rng.random_range(0..ues);
        state.step(&signatures[k], k, variant);

        let mut rebuilt = CMat::identity(tau, tau);
        for (g, s) in state.gamma().iter().zip(&signatures) {
            for t in &s.terms {
                rebuilt += t * t.adjoint() * Complex64::from(*g);
            }
        }
        report.sigma_gap = report.sigma_gap.max((state.sigma() - rebuilt).norm());
        report.min_gamma = report.min_gamma.min(state.gamma().iter().cloned().fold(f64::INFINITY, f64::min));
        let next = state.ml_objective().unwrap();
        report.objective_rise = report.objective_rise.max(next - objective);
        objective = next;
    }
    report
}
