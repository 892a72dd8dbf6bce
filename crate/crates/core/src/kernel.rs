//! Vacuum-mediated dipole-dipole kernels between two atoms.
//!
//! `F` is the cooperative decay rate and `G` the coherent frequency shift of a
//! pair at dimensionless separation ξ = |k| r, with `cos_dr` = d̂·r̂. Both are in
//! units of the single-atom rate Γ (Γ = 1).

use faer::Mat;

use crate::error::{Error, Result};
use crate::geometry::{dot, Lattice};

/// F and G for one pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairKernel {
    pub f_val: f64,
    pub g_val: f64,
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::domain(format!(
            "kernel separation xi = {xi} must be positive and finite"
        )));
    }
    Ok(())
}

/// Pairwise decay rate F(ξ).
pub fn eval_f(xi: f64, cos_dr: f64) -> Result<f64> {
    check_xi(xi)?;
    let c2 = cos_dr * cos_dr;
    let (s, c) = xi.sin_cos();
    Ok(1.5 * ((1.0 - c2) * s / xi + (1.0 - 3.0 * c2) * (c / (xi * xi) - s / (xi * xi * xi))))
}

/// Pairwise frequency shift G(ξ).
pub fn eval_g(xi: f64, cos_dr: f64) -> Result<f64> {
    check_xi(xi)?;
    let c2 = cos_dr * cos_dr;
    let (s, c) = xi.sin_cos();
    Ok(0.75 * (-(1.0 - c2) * c / xi + (1.0 - 3.0 * c2) * (s / (xi * xi) + c / (xi * xi * xi))))
}

pub fn eval_pair(xi: f64, cos_dr: f64) -> Result<PairKernel> {
    Ok(PairKernel {
        f_val: eval_f(xi, cos_dr)?,
        g_val: eval_g(xi, cos_dr)?,
    })
}

/// Kernel for sites `mu`, `nu` (1-based, distinct) of a lattice.
pub fn pair_kernel(lattice: &Lattice, mu: usize, nu: usize) -> Result<PairKernel> {
    let sep = lattice.separation(mu, nu)?;
    eval_pair(sep.xi, dot(lattice.d_hat(), sep.r_hat))
}

/// All pair kernels of a lattice as an N×N table (0-based); the diagonal
/// holds F = 1, G = 0.
pub fn kernel_table(lattice: &Lattice) -> Result<Vec<PairKernel>> {
    let n = lattice.n_atoms();
    let mut table = vec![
        PairKernel {
            f_val: 1.0,
            g_val: 0.0
        };
        n * n
    ];
    for mu in 1..=n {
        for nu in mu + 1..=n {
            let k = pair_kernel(lattice, mu, nu)?;
            table[(mu - 1) * n + (nu - 1)] = k;
            table[(nu - 1) * n + (mu - 1)] = k;
        }
    }
    Ok(table)
}

/// The real symmetric N×N matrix of F with unit diagonal.
pub fn decay_matrix(lattice: &Lattice) -> Result<Mat<f64>> {
    let n = lattice.n_atoms();
    let table = kernel_table(lattice)?;
    Ok(Mat::from_fn(n, n, |i, j| table[i * n + j].f_val))
}
