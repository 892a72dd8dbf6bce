//! The non-Hermitian generator of M-excitation amplitude dynamics, ċ = A c.
//!
//! `A[n][n] = -M/2` and, for bare states that differ by moving one excitation
//! from site s1 (in n) to site s2 (in m),
//! `A[n][m] = (-F(s1,s2)/2 + i G(s1,s2)) exp(-i k·(r_s1 - r_s2))`.
//! All other entries vanish. Rates are in units of Γ.

use std::io::Write;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Lattice;
use crate::hilbert::HilbertSpace;
use crate::kernel::kernel_table;
use crate::output::fmt_num;

/// Above this dimension callers may prefer a sparse representation.
pub const SPARSE_THRESHOLD: usize = 2000;

#[derive(Clone, Debug)]
pub struct CouplingMatrix {
    matrix: Mat<Complex64>,
    n_excitations: usize,
    origin: Option<(HilbertSpace, Lattice)>,
}

impl CouplingMatrix {
    /// Builds A for `space` on `lattice`.
    pub fn assemble(space: &HilbertSpace, lattice: &Lattice) -> Result<Self> {
        let n_atoms = space.n_atoms();
        if n_atoms != lattice.n_atoms() {
            return Err(Error::domain(format!(
                "space has N = {n_atoms} atoms but lattice has {}",
                lattice.n_atoms()
            )));
        }
        let m = space.n_excitations();
        let dim = space.dim();
        let kernels = kernel_table(lattice)?;
        let phases: Vec<f64> = (1..=n_atoms).map(|s| lattice.phase_of(s)).collect();

        let mut matrix = Mat::<Complex64>::zeros(dim, dim);
        let diag = Complex64::new(-(m as f64) / 2.0, 0.0);
        let mut neighbor = vec![0usize; m];
        for (row, cfg) in space.iter().enumerate() {
            matrix[(row, row)] = diag;
            let sites = cfg.sites();
            for (slot, &s1) in sites.iter().enumerate() {
                for s2 in (1..=n_atoms).filter(|s| !cfg.contains(*s)) {
                    replace_sorted(sites, slot, s2, &mut neighbor);
                    let col = space.rank_sites(&neighbor) - 1;
                    if col <= row {
                        continue;
                    }
                    let k = kernels[(s1 - 1) * n_atoms + (s2 - 1)];
                    let amp = Complex64::new(-k.f_val / 2.0, k.g_val);
                    let phase = Complex64::from_polar(1.0, -(phases[s1 - 1] - phases[s2 - 1]));
                    matrix[(row, col)] = amp * phase;
                    matrix[(col, row)] = amp * phase.conj();
                }
            }
        }
        Ok(Self {
            matrix,
            n_excitations: m,
            origin: Some((space.clone(), lattice.clone())),
        })
    }

    /// Wraps an arbitrary square generator (no lattice attached).
    pub fn from_raw(matrix: Mat<Complex64>, n_excitations: usize) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::domain(format!(
                "generator must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            matrix,
            n_excitations,
            origin: None,
        })
    }

    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }

    pub fn space(&self) -> Option<&HilbertSpace> {
        self.origin.as_ref().map(|(s, _)| s)
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.origin.as_ref().map(|(_, l)| l)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut best = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                best = best.max(self.matrix[(i, j)].norm());
            }
        }
        best
    }

    /// Nonzero off-diagonals per row implied by the hopping structure, M·(N−M).
    pub fn structural_row_nonzeros(&self) -> Option<usize> {
        self.space()
            .map(|s| s.n_excitations() * (s.n_atoms() - s.n_excitations()))
    }

    pub fn prefers_sparse(&self) -> bool {
        self.dim() > SPARSE_THRESHOLD
    }

    /// Removes the traveling-phase factors by the diagonal similarity
    /// `B = D A D⁻¹` with `D[n] = exp(i k·R(n))`, `R(n)` the summed positions
    /// of the excited sites. `B` is complex symmetric and isospectral to `A`.
    pub fn gauge_strip(&self) -> Result<Self> {
        let (space, lattice) = self.origin.as_ref().ok_or_else(|| {
            Error::domain("gauge_strip needs a generator assembled from a lattice")
        })?;
        let gauge: Vec<Complex64> = space
            .iter()
            .map(|cfg| {
                let kr: f64 = cfg.sites().iter().map(|&s| lattice.phase_of(s)).sum();
                Complex64::from_polar(1.0, kr)
            })
            .collect();
        let dim = self.dim();
        let matrix = Mat::from_fn(dim, dim, |i, j| {
            gauge[i] * self.matrix[(i, j)] * gauge[j].conj()
        });
        Ok(Self {
            matrix,
            n_excitations: self.n_excitations,
            origin: self.origin.clone(),
        })
    }

    /// Writes nonzero entries as `row,col,re,im` with 1-based indices.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "row,col,re,im")?;
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                let z = self.matrix[(i, j)];
                if z.re != 0.0 || z.im != 0.0 {
                    writeln!(out, "{},{},{},{}", i + 1, j + 1, fmt_num(z.re), fmt_num(z.im))?;
                }
            }
        }
        Ok(())
    }
}

// Writes `sites` with `sites[slot]` replaced by `new_site`, kept sorted.
fn replace_sorted(sites: &[usize], slot: usize, new_site: usize, out: &mut [usize]) {
    let mut k = 0;
    let mut placed = false;
    for (i, &s) in sites.iter().enumerate() {
        if i == slot {
            continue;
        }
        if !placed && new_site < s {
            out[k] = new_site;
            k += 1;
            placed = true;
        }
        out[k] = s;
        k += 1;
    }
    if !placed {
        out[k] = new_site;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::sort_pair;
    use crate::kernel::pair_kernel;

    const X: [f64; 3] = [1.0, 0.0, 0.0];
    const Z: [f64; 3] = [0.0, 0.0, 1.0];

    // Independent route: compare every pair of bare states with sort_pair.
    fn assemble_by_sort_pair(space: &HilbertSpace, lat: &Lattice) -> Mat<Complex64> {
        let cfgs = space.enumerate();
        let dim = cfgs.len();
        let k = lat.wave_vector();
        Mat::from_fn(dim, dim, |i, j| {
            if i == j {
                return Complex64::new(-(space.n_excitations() as f64) / 2.0, 0.0);
            }
            let (s1, s2) = sort_pair(&cfgs[i], &cfgs[j]).unwrap();
            if (s1, s2) == (0, 0) {
                return Complex64::new(0.0, 0.0);
            }
            let pk = pair_kernel(lat, s1, s2).unwrap();
            let sep = lat.separation(s1, s2).unwrap();
            let kr = k[0] * sep.r_vec[0] + k[1] * sep.r_vec[1] + k[2] * sep.r_vec[2];
            Complex64::new(-pk.f_val / 2.0, pk.g_val) * Complex64::from_polar(1.0, -kr)
        })
    }

    #[test]
    fn single_atom() {
        let space = HilbertSpace::new(1, 1).unwrap();
        let lat = Lattice::chain(1, 0.25).unwrap();
        let a = CouplingMatrix::assemble(&space, &lat).unwrap();
        assert_eq!(a.dim(), 1);
        assert_eq!(a.matrix()[(0, 0)], Complex64::new(-0.5, 0.0));
    }

    #[test]
    fn matches_pairwise_construction() {
        for (dims, m) in [([1, 1, 4], 2), ([2, 2, 2], 3), ([3, 2, 1], 1), ([1, 1, 7], 4)] {
            let lat = Lattice::build(dims, 0.17, [0.3, 0.5, 0.8], [0.2, 1.0, 0.4]).unwrap();
            let space = HilbertSpace::new(lat.n_atoms(), m).unwrap();
            let a = CouplingMatrix::assemble(&space, &lat).unwrap();
            let b = assemble_by_sort_pair(&space, &lat);
            let n = space.dim();
            for i in 0..n {
                for j in 0..n {
                    assert!((a.matrix()[(i, j)] - b[(i, j)]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn structural_zero_entries_and_equal_magnitudes() {
        let space = HilbertSpace::new(4, 2).unwrap();
        let lat = Lattice::chain(4, 0.2).unwrap();
        let a = CouplingMatrix::assemble(&space, &lat).unwrap();
        let m = a.matrix();
        assert_eq!(m[(0, 5)], Complex64::new(0.0, 0.0));
        assert_eq!(m[(1, 4)], Complex64::new(0.0, 0.0));
        // (1,2) hops 2->3 and (4,5) hops 3->4: both nearest neighbours
        assert!((m[(0, 1)].norm() - m[(3, 4)].norm()).abs() < 1e-15);
        assert!(m[(0, 1)].norm() > 0.0);
    }

    #[test]
    fn structure_and_trace() {
        let lat = Lattice::build([2, 2, 2], 0.3, X, Z).unwrap();
        for m in 1..=4 {
            let space = HilbertSpace::new(8, m).unwrap();
            let a = CouplingMatrix::assemble(&space, &lat).unwrap();
            let expect = a.structural_row_nonzeros().unwrap();
            assert_eq!(expect, m * (8 - m));
            for i in 0..a.dim() {
                assert_eq!(a.matrix()[(i, i)].re, -(m as f64) / 2.0);
                let nz = (0..a.dim())
                    .filter(|&j| j != i && a.matrix()[(i, j)] != Complex64::new(0.0, 0.0))
                    .count();
                assert_eq!(nz, expect);
            }
            assert_eq!(a.trace(), Complex64::new(-((a.dim() * m) as f64) / 2.0, 0.0));
        }
    }

    #[test]
    fn gauge_strip_symmetric_and_identity_at_zero_k() {
        let lat = Lattice::build([1, 2, 3], 0.22, X, [0.0, 0.6, 0.8]).unwrap();
        let space = HilbertSpace::new(6, 2).unwrap();
        let a = CouplingMatrix::assemble(&space, &lat).unwrap();
        let b = a.gauge_strip().unwrap();
        let n = a.dim();
        for i in 0..n {
            for j in 0..n {
                assert!((b.matrix()[(i, j)] - b.matrix()[(j, i)]).norm() < 1e-14);
            }
        }
        let a0 = CouplingMatrix::assemble(&space, &lat.clone().with_k_mag(0.0).unwrap()).unwrap();
        let b0 = a0.gauge_strip().unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(a0.matrix()[(i, j)], b0.matrix()[(i, j)]);
            }
        }
        // stripped generator does not depend on k at all
        for i in 0..n {
            for j in 0..n {
                assert!((b0.matrix()[(i, j)] - b.matrix()[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let space = HilbertSpace::new(5, 2).unwrap();
        let lat = Lattice::chain(4, 0.2).unwrap();
        assert!(CouplingMatrix::assemble(&space, &lat).is_err());
        assert!(CouplingMatrix::from_raw(Mat::zeros(2, 3), 1).is_err());
        let raw = CouplingMatrix::from_raw(Mat::zeros(2, 2), 1).unwrap();
        assert!(raw.gauge_strip().is_err());
    }

    #[test]
    fn csv_dump_lists_nonzeros() {
        let space = HilbertSpace::new(4, 2).unwrap();
        let lat = Lattice::chain(4, 0.2).unwrap();
        let a = CouplingMatrix::assemble(&space, &lat).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("row,col,re,im"));
        // 6 diagonal + 6 rows * M(N-M) = 4 off-diagonals
        assert_eq!(lines.count(), 6 + 6 * 4);
        assert!(text.contains("\n1,1,-1.00000000000e0,0.00000000000e0\n"));
    }
}
