//! Atom positions and pairwise geometry.
//!
//! Lengths are in units of the transition wavelength λ, so the resonant
//! wavenumber is 2π. Grid sites are labeled first along x, then y, then z.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Resonant transition wavenumber |k| in units of 1/λ.
pub const TRANSITION_WAVENUMBER: f64 = TAU;

const UNIT_TOL: f64 = 1e-12;

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn normalize(v: Vec3, what: &str) -> Result<Vec3> {
    let n = norm(v);
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::domain(format!("{what} must be a nonzero finite vector")));
    }
    let u = scale(v, 1.0 / n);
    debug_assert!((norm(u) - 1.0).abs() < UNIT_TOL);
    Ok(u)
}

/// Geometry of one pair of sites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Separation {
    /// |k| r in units where |k| = 2π/λ.
    pub xi: f64,
    pub r_hat: Vec3,
    /// r_mu - r_nu in units of λ.
    pub r_vec: Vec3,
}

/// Atomic positions plus the dipole orientation and excitation wave vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    positions: Vec<Vec3>,
    d_hat: Vec3,
    k_hat: Vec3,
    k_mag: f64,
    dims: Option<[usize; 3]>,
    spacing: Option<f64>,
}

impl Lattice {
    /// Rectangular grid of `dims[0] × dims[1] × dims[2]` sites.
    pub fn build(dims: [usize; 3], spacing: f64, d_hat: Vec3, k_hat: Vec3) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::domain(format!("lattice dims {dims:?} must all be >= 1")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::domain(format!("lattice spacing {spacing} must be positive")));
        }
        let [nx, ny, nz] = dims;
        let positions = (0..nx * ny * nz)
            .map(|i| {
                let ix = i % nx;
                let iy = (i / nx) % ny;
                let iz = i / (nx * ny);
                [ix as f64 * spacing, iy as f64 * spacing, iz as f64 * spacing]
            })
            .collect();
        Ok(Self {
            positions,
            d_hat: normalize(d_hat, "dipole orientation")?,
            k_hat: normalize(k_hat, "wave vector direction")?,
            k_mag: TRANSITION_WAVENUMBER,
            dims: Some(dims),
            spacing: Some(spacing),
        })
    }

    /// 1D chain along z with x-polarized dipoles and excitation along the chain.
    pub fn chain(n: usize, spacing: f64) -> Result<Self> {
        Self::build([1, 1, n], spacing, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0])
    }

    /// Arbitrary positions (units of λ); rejects coincident atoms.
    pub fn from_positions(positions: Vec<Vec3>, d_hat: Vec3, k_hat: Vec3) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::domain("lattice needs at least one atom"));
        }
        if positions.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::domain("atom positions must be finite"));
        }
        for (i, a) in positions.iter().enumerate() {
            for (j, b) in positions.iter().enumerate().skip(i + 1) {
                if norm(sub(*a, *b)) == 0.0 {
                    return Err(Error::domain(format!(
                        "atoms {} and {} coincide",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            positions,
            d_hat: normalize(d_hat, "dipole orientation")?,
            k_hat: normalize(k_hat, "wave vector direction")?,
            k_mag: TRANSITION_WAVENUMBER,
            dims: None,
            spacing: None,
        })
    }

    /// Overrides the magnitude of the excitation wave vector (default 2π).
    ///
    /// Only the traveling-phase factors see this; the pair kernels always use
    /// the resonant wavenumber.
    pub fn with_k_mag(mut self, k_mag: f64) -> Result<Self> {
        if !(k_mag.is_finite() && k_mag >= 0.0) {
            return Err(Error::domain(format!("k magnitude {k_mag} must be >= 0")));
        }
        self.k_mag = k_mag;
        Ok(self)
    }

    pub fn with_k_hat(mut self, k_hat: Vec3) -> Result<Self> {
        self.k_hat = normalize(k_hat, "wave vector direction")?;
        Ok(self)
    }

    pub fn n_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    /// Position of a 1-based site.
    pub fn position(&self, site: usize) -> Result<Vec3> {
        self.check_site(site)?;
        Ok(self.positions[site - 1])
    }

    pub fn d_hat(&self) -> Vec3 {
        self.d_hat
    }

    pub fn k_hat(&self) -> Vec3 {
        self.k_hat
    }

    pub fn k_mag(&self) -> f64 {
        self.k_mag
    }

    pub fn wave_vector(&self) -> Vec3 {
        scale(self.k_hat, self.k_mag)
    }

    pub fn dims(&self) -> Option<[usize; 3]> {
        self.dims
    }

    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site < 1 || site > self.n_atoms() {
            return Err(Error::domain(format!(
                "site {site} outside [1, {}]",
                self.n_atoms()
            )));
        }
        Ok(())
    }

    /// Pair geometry between 1-based sites `mu` and `nu`.
    pub fn separation(&self, mu: usize, nu: usize) -> Result<Separation> {
        self.check_site(mu)?;
        self.check_site(nu)?;
        if mu == nu {
            return Err(Error::domain(format!("separation of site {mu} with itself")));
        }
        let r_vec = sub(self.positions[mu - 1], self.positions[nu - 1]);
        let r = norm(r_vec);
        Ok(Separation {
            xi: TRANSITION_WAVENUMBER * r,
            r_hat: scale(r_vec, 1.0 / r),
            r_vec,
        })
    }

    /// k · r for a 1-based site.
    pub(crate) fn phase_of(&self, site: usize) -> f64 {
        self.k_mag * dot(self.k_hat, self.positions[site - 1])
    }
}
