//! Eigendecomposition of the coupling matrix, A = U diag(λ) U⁻¹.
//!
//! Modes are stored in presentation order: mode `l` (1-based) is column
//! `l - 1` of `U` and row `l - 1` of `U⁻¹`. The decay constant of a mode is
//! −Re(2λ)/Γ, the population decay rate.

use std::cmp::Ordering;
use std::io::Write;

use faer::linalg::solvers::DenseSolveCore;
use faer::{ColRef, Mat};
use num_complex::Complex64;

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::output::fmt_num;

pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SortKey {
    /// Ascending −Re(2λ): mode 1 is the most subradiant.
    #[default]
    DecayAscending,
    /// Ascending Im(2λ).
    ShiftAscending,
}

/// −Re(2λ)/Γ.
pub fn decay_constant(lambda: Complex64) -> f64 {
    -2.0 * lambda.re
}

fn compare(key: SortKey, a: Complex64, b: Complex64) -> Ordering {
    match key {
        SortKey::DecayAscending => decay_constant(a)
            .total_cmp(&decay_constant(b))
            .then(a.im.total_cmp(&b.im)),
        SortKey::ShiftAscending => a
            .im
            .total_cmp(&b.im)
            .then(decay_constant(a).total_cmp(&decay_constant(b))),
    }
}

/// Sorts a bare list of eigenvalues by `key`.
pub fn sort_eigenvalues(values: &mut [Complex64], key: SortKey) {
    values.sort_by(|a, b| compare(key, *a, *b));
}

/// Eigenvalues only, sorted by `key`. Much cheaper than [`diagonalize`].
pub fn eigenvalues(a: &CouplingMatrix, key: SortKey) -> Result<Vec<Complex64>> {
    let mut values = a
        .matrix()
        .eigenvalues()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    sort_eigenvalues(&mut values, key);
    Ok(values)
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    eigenvalues: Vec<Complex64>,
    vectors: Mat<Complex64>,
    inverse: Mat<Complex64>,
    order: Vec<usize>,
    key: SortKey,
}

/// Full non-Hermitian eigendecomposition, presented in decay-ascending order.
///
/// Eigenvector columns have unit Euclidean norm and `U⁻¹` comes from an LU
/// inverse of that `U`. Fails with [`Error::Defective`] when either residual
/// exceeds [`RESIDUAL_TOL`].
pub fn diagonalize(a: &CouplingMatrix) -> Result<Spectrum> {
    let mat = a.matrix();
    if (0..mat.ncols()).any(|j| (0..mat.nrows()).any(|i| !mat[(i, j)].is_finite())) {
        return Err(Error::domain("coupling matrix has non-finite entries"));
    }
    let evd = mat
        .eigen()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let dim = mat.nrows();
    let s = evd.S();
    let eigenvalues: Vec<Complex64> = (0..dim).map(|i| s[i]).collect();
    let mut vectors = evd.U().to_owned();
    for j in 0..dim {
        let norm = (0..dim).map(|i| vectors[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Decomposition(format!("eigenvector {j} has norm {norm}")));
        }
        for i in 0..dim {
            vectors[(i, j)] /= norm;
        }
    }
    let inverse = vectors.partial_piv_lu().inverse();

    let spec = Spectrum {
        eigenvalues,
        vectors,
        inverse,
        order: (0..dim).collect(),
        key: SortKey::DecayAscending,
    };
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let residual = spec.eigen_residual(mat);
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::Defective {
            what: "A·U − U·Λ",
            residual,
            tolerance: RESIDUAL_TOL * scale,
        });
    }
    let inv_residual = spec.inverse_residual();
    if inv_residual > RESIDUAL_TOL {
        return Err(Error::Defective {
            what: "U⁻¹·U − I",
            residual: inv_residual,
            tolerance: RESIDUAL_TOL,
        });
    }
    Ok(spec.sort_modes(SortKey::DecayAscending))
}

impl Spectrum {
    /// Builds a spectrum from explicit parts (raw order), checking only shapes.
    pub fn from_parts(
        eigenvalues: Vec<Complex64>,
        vectors: Mat<Complex64>,
        inverse: Mat<Complex64>,
    ) -> Result<Self> {
        let n = eigenvalues.len();
        if vectors.nrows() != n || vectors.ncols() != n || inverse.nrows() != n || inverse.ncols() != n
        {
            return Err(Error::domain("spectrum parts have inconsistent shapes"));
        }
        Ok(Self {
            eigenvalues,
            vectors,
            inverse,
            order: (0..n).collect(),
            key: SortKey::DecayAscending,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Eigenvalue of 1-based mode `l`.
    pub fn eigenvalue(&self, l: usize) -> Complex64 {
        self.eigenvalues[l - 1]
    }

    pub fn vectors(&self) -> &Mat<Complex64> {
        &self.vectors
    }

    pub fn inverse(&self) -> &Mat<Complex64> {
        &self.inverse
    }

    /// `order[l]` is the solver's original index of presentation mode `l + 1`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn key(&self) -> SortKey {
        self.key
    }

    pub fn decay_constants(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|&l| decay_constant(l)).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.eigenvalues.iter().sum()
    }

    /// Relabels the modes by `key`; the multiset of eigenvalues is unchanged.
    pub fn sort_modes(self, key: SortKey) -> Spectrum {
        let n = self.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by(|&i, &j| compare(key, self.eigenvalues[i], self.eigenvalues[j]));
        let eigenvalues = perm.iter().map(|&p| self.eigenvalues[p]).collect();
        let vectors = Mat::from_fn(n, n, |i, j| self.vectors[(i, perm[j])]);
        let inverse = Mat::from_fn(n, n, |i, j| self.inverse[(perm[i], j)]);
        let order = perm.iter().map(|&p| self.order[p]).collect();
        Spectrum {
            eigenvalues,
            vectors,
            inverse,
            order,
            key,
        }
    }

    /// max |(A U − U Λ)_ij|.
    pub fn eigen_residual(&self, a: &Mat<Complex64>) -> f64 {
        let au = a * &self.vectors;
        let n = self.len();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max((au[(i, j)] - self.vectors[(i, j)] * self.eigenvalues[j]).norm());
            }
        }
        worst
    }

    /// max |(U⁻¹ U − I)_ij|.
    pub fn inverse_residual(&self) -> f64 {
        let prod = &self.inverse * &self.vectors;
        let n = self.len();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - id).norm());
            }
        }
        worst
    }

    /// Applies `U diag(g(λ)) U⁻¹` to `v`.
    pub fn apply_function(&self, v: &[Complex64], g: impl Fn(Complex64) -> Complex64) -> Vec<Complex64> {
        let y = self.project(v);
        let scaled: Vec<Complex64> = y
            .iter()
            .zip(&self.eigenvalues)
            .map(|(&yi, &l)| yi * g(l))
            .collect();
        self.reconstruct(&scaled)
    }

    /// Modal coordinates `U⁻¹ v`.
    pub fn project(&self, v: &[Complex64]) -> Vec<Complex64> {
        mat_vec(&self.inverse, v)
    }

    /// Bare-state vector `U y` from modal coordinates.
    pub fn reconstruct(&self, y: &[Complex64]) -> Vec<Complex64> {
        mat_vec(&self.vectors, y)
    }

    /// CSV rows `mode_index,re_2lambda_over_gamma,im_2lambda_over_gamma,decay_const`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_eigenvalue_csv(&self.eigenvalues, out)
    }
}

pub fn write_eigenvalue_csv<W: Write>(values: &[Complex64], mut out: W) -> Result<()> {
    writeln!(out, "mode_index,re_2lambda_over_gamma,im_2lambda_over_gamma,decay_const")?;
    for (l, &lam) in values.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            l + 1,
            fmt_num(2.0 * lam.re),
            fmt_num(2.0 * lam.im),
            fmt_num(decay_constant(lam))
        )?;
    }
    Ok(())
}

pub(crate) fn mat_vec(m: &Mat<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(m.ncols(), v.len(), "matrix-vector shape mismatch");
    let y = m * ColRef::from_slice(v);
    y.iter().copied().collect()
}

/// Greedy nearest-neighbour matching of two eigenvalue multisets.
///
/// Returns the largest pair distance divided by `max(1, max |λ|)`, or
/// `f64::INFINITY` when the lengths differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let scale = a
        .iter()
        .chain(b)
        .map(|z| z.norm())
        .fold(1.0f64, f64::max);
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for &x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, &y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    worst / scale
}
