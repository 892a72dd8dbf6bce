//! Krylov-subspace propagation, exp(A τ) v ≈ β V exp(τ H) e₁.
//!
//! Each step builds an Arnoldi basis of at most `subspace_dim` vectors and
//! shrinks the substep until the a posteriori estimate
//! β τ |h_{m+1,m}| |e_mᵀ φ₁(τH) e₁| drops below the tolerance. A breakdown
//! (invariant subspace) makes the projection exact.

use faer::Mat;
use num_complex::Complex64;

use crate::coupling::CouplingMatrix;
use crate::dynamics::{check_state, check_times, AmplitudeState, EvolutionSeries};
use crate::error::{Error, Result};
use crate::spectral::mat_vec;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Per-substep error tolerance relative to ‖v‖.
pub const DEFAULT_TOL: f64 = 1e-12;
const MAX_HALVINGS: usize = 60;

/// Evolves `c0` on `times` with Krylov exponentials of dimension `subspace_dim`.
pub fn evolve_krylov(
    a: &CouplingMatrix,
    c0: &AmplitudeState,
    times: &[f64],
    subspace_dim: usize,
) -> Result<EvolutionSeries> {
    evolve_krylov_with_tol(a, c0, times, subspace_dim, DEFAULT_TOL)
}

pub fn evolve_krylov_with_tol(
    a: &CouplingMatrix,
    c0: &AmplitudeState,
    times: &[f64],
    subspace_dim: usize,
    tol: f64,
) -> Result<EvolutionSeries> {
    if subspace_dim < 2 {
        return Err(Error::domain(format!(
            "Krylov subspace dimension {subspace_dim} must be at least 2"
        )));
    }
    check_times(times)?;
    check_state(a.dim(), c0)?;
    let mut v = c0.amplitudes.clone();
    let mut t = c0.time;
    let mut states = Vec::with_capacity(times.len());
    for &target in times {
        if target < t {
            return Err(Error::domain("grid starts before the initial state time"));
        }
        if target > t {
            v = expm_apply(a.matrix(), &v, target - t, subspace_dim, tol)?;
            t = target;
        }
        states.push(v.clone());
    }
    Ok(EvolutionSeries {
        times: times.to_vec(),
        states,
    })
}

struct Arnoldi {
    basis: Vec<Vec<Complex64>>,
    hess: Mat<Complex64>,
    // h_{k+1,k}; zero on breakdown
    residual: f64,
    k: usize,
}

fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn arnoldi(a: &Mat<Complex64>, v: &[Complex64], beta: f64, m: usize) -> Arnoldi {
    let m = m.min(v.len());
    let mut basis = vec![v.iter().map(|x| x / beta).collect::<Vec<_>>()];
    let mut hess = Mat::<Complex64>::zeros(m + 1, m);
    for j in 0..m {
        let mut w = mat_vec(a, &basis[j]);
        let w_norm = norm(&w);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let h = dotc(q, &w);
                hess[(i, j)] += h;
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= h * qi;
                }
            }
        }
        let h_next = norm(&w);
        if h_next <= 1e-13 * w_norm.max(f64::MIN_POSITIVE) || j + 1 == v.len() {
            return Arnoldi {
                basis,
                hess,
                residual: 0.0,
                k: j + 1,
            };
        }
        hess[(j + 1, j)] = Complex64::new(h_next, 0.0);
        if j + 1 < m {
            basis.push(w.iter().map(|x| x / h_next).collect());
        }
    }
    Arnoldi {
        residual: hess[(m, m - 1)].re,
        basis,
        hess,
        k: m,
    }
}

/// exp(A τ) v with adaptive substeps.
pub fn expm_apply(
    a: &Mat<Complex64>,
    v: &[Complex64],
    tau: f64,
    subspace_dim: usize,
    tol: f64,
) -> Result<Vec<Complex64>> {
    let mut v = v.to_vec();
    let mut remaining = tau;
    while remaining > 0.0 {
        let beta = norm(&v);
        if beta == 0.0 {
            break;
        }
        let kr = arnoldi(a, &v, beta, subspace_dim);
        let k = kr.k;
        let mut step = remaining;
        let mut halvings = 0;
        let coeffs = loop {
            // augmented [[τH, e1], [0, 0]] gives exp(τH) and φ1(τH) e1 together
            let aug = Mat::from_fn(k + 1, k + 1, |i, j| {
                if i < k && j < k {
                    kr.hess[(i, j)] * step
                } else if i == 0 && j == k {
                    ONE
                } else {
                    ZERO
                }
            });
            let e = expm_dense(&aug);
            let err = beta * step * kr.residual * e[(k - 1, k)].norm();
            if err <= tol * beta || kr.residual == 0.0 {
                break (0..k).map(|i| e[(i, 0)]).collect::<Vec<_>>();
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::StepUnderflow {
                    step,
                    interval: remaining,
                });
            }
            step /= 2.0;
        };
        let mut next = vec![ZERO; v.len()];
        for (q, &c) in kr.basis.iter().zip(&coeffs) {
            let c = c * beta;
            for (ni, qi) in next.iter_mut().zip(q) {
                *ni += c * qi;
            }
        }
        v = next;
        remaining -= step;
        if remaining < 1e-15 * tau {
            break;
        }
    }
    Ok(v)
}

fn one_norm(m: &Mat<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Dense matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm_dense(x: &Mat<Complex64>) -> Mat<Complex64> {
    let n = x.nrows();
    let nrm = one_norm(x);
    let squarings = if nrm > 0.5 {
        (nrm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings);
    let xs = Mat::from_fn(n, n, |i, j| x[(i, j)] * scale);
    let mut result = Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO });
    let mut term = result.clone();
    // ‖xs‖ <= 0.5, so 0.5^k / k! drops below 1e-17 well before k = 20
    for k in 1..=20 {
        term = &term * &xs;
        let inv = 1.0 / k as f64;
        for j in 0..n {
            for i in 0..n {
                term[(i, j)] *= inv;
                result[(i, j)] += term[(i, j)];
            }
        }
        if one_norm(&term) < 1e-18 * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
