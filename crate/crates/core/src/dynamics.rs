//! Initial states, amplitude evolution, and eigenmode weightings.
//!
//! Three evolution paths share one contract, `c(t) = exp(A t) c(0)` sampled on
//! a time grid in units of 1/Γ:
//! - [`evolve_eigen`] uses the eigendecomposition,
//! - [`evolve_ode`] integrates ċ = A c with fixed-step RK4 (the oracle),
//! - [`crate::krylov::evolve_krylov`] applies Arnoldi exponentials step by step.
//!
//! For the n-th phase-imprinted state the projected amplitude
//! `d_n(t) = Σ_l v_l(n) e^{λ_l t} w_l(n)` is available from [`evolve_imprinted`].

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::output::fmt_num;
use crate::spectral::{mat_vec, Spectrum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest RK4 step, in 1/Γ.
pub const ODE_MAX_STEP: f64 = 1e-3;
const ODE_MIN_STEP: f64 = 1e-12;

/// Bare-state amplitudes at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeState {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl AmplitudeState {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        Self {
            amplitudes,
            time: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|&c| c * alpha).collect(),
            time: self.time,
        }
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// States sampled on a time grid. Projected series (d_n) hold one-element states.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionSeries {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
}

impl EvolutionSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Σ|c(t)|² at each grid point; |d_n(t)|² for projected series.
    pub fn population(&self) -> Vec<f64> {
        self.states.iter().map(|s| norm_sqr(s)).collect()
    }

    /// The scalar amplitude of a projected series.
    pub fn scalar(&self) -> Option<Vec<Complex64>> {
        self.states
            .iter()
            .map(|s| (s.len() == 1).then(|| s[0]))
            .collect()
    }

    /// Largest |c_i(t) - c'_i(t)| over the whole series.
    pub fn max_abs_diff(&self, other: &EvolutionSeries) -> f64 {
        assert_eq!(self.len(), other.len(), "series lengths differ");
        self.states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// `t_gamma,re_d,im_d,population` for projected series,
    /// `t_gamma,norm_sq` otherwise.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        match self.scalar() {
            Some(d) => {
                writeln!(out, "t_gamma,re_d,im_d,population")?;
                for (t, z) in self.times.iter().zip(d) {
                    writeln!(
                        out,
                        "{},{},{},{}",
                        fmt_num(*t),
                        fmt_num(z.re),
                        fmt_num(z.im),
                        fmt_num(z.norm_sqr())
                    )?;
                }
            }
            None => {
                writeln!(out, "t_gamma,norm_sq")?;
                for (t, p) in self.times.iter().zip(self.population()) {
                    writeln!(out, "{},{}", fmt_num(*t), fmt_num(p))?;
                }
            }
        }
        Ok(())
    }
}

/// `points` equally spaced times on [0, t_max]; a single point is t = 0.
pub fn time_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::domain("time grid needs at least one point"));
    }
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::domain(format!("t_max = {t_max} must be finite and >= 0")));
    }
    if points == 1 {
        return Ok(vec![0.0]);
    }
    let dt = t_max / (points - 1) as f64;
    Ok((0..points).map(|i| i as f64 * dt).collect())
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::domain("times must be finite and nonnegative"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("times must be ascending"));
    }
    Ok(())
}

pub(crate) fn check_state(dim: usize, c0: &AmplitudeState) -> Result<()> {
    if c0.dim() != dim {
        return Err(Error::domain(format!(
            "state has {} amplitudes, generator has dimension {dim}",
            c0.dim()
        )));
    }
    Ok(())
}

/// Imprinted phases `exp(i 2π n (f(μ) − 1) / C(N,M))` in canonical order.
pub fn imprint_phases(space: &HilbertSpace, n: usize) -> Result<Vec<Complex64>> {
    let dim = space.dim();
    if n < 1 || n > dim {
        return Err(Error::domain(format!(
            "imprint index n = {n} outside [1, {dim}]"
        )));
    }
    Ok(space
        .iter()
        .map(|cfg| phase_factor(n, cfg.phase_index(), dim))
        .collect())
}

// Reduce n (f − 1) modulo dim before scaling so the angle stays exact.
fn phase_factor(n: usize, f: usize, dim: usize) -> Complex64 {
    let turns = ((n as u128 * (f as u128 - 1)) % dim as u128) as f64 / dim as f64;
    Complex64::from_polar(1.0, TAU * turns)
}

/// Symmetric start, every amplitude 1/√C(N,M).
pub fn initial_timed_dicke(space: &HilbertSpace) -> AmplitudeState {
    let amp = 1.0 / (space.dim() as f64).sqrt();
    AmplitudeState::new(vec![Complex64::new(amp, 0.0); space.dim()])
}

/// The n-th phase-imprinted state.
pub fn initial_phase_imprinted(space: &HilbertSpace, n: usize) -> Result<AmplitudeState> {
    let norm = 1.0 / (space.dim() as f64).sqrt();
    Ok(AmplitudeState::new(
        imprint_phases(space, n)?.into_iter().map(|p| p * norm).collect(),
    ))
}

/// `c(t) = U diag(e^{λt}) U⁻¹ c(0)` on every grid point.
pub fn evolve_eigen(spec: &Spectrum, c0: &AmplitudeState, times: &[f64]) -> Result<EvolutionSeries> {
    check_times(times)?;
    check_state(spec.len(), c0)?;
    let modal = spec.project(&c0.amplitudes);
    let states = times
        .iter()
        .map(|&t| {
            let y: Vec<Complex64> = modal
                .iter()
                .zip(spec.eigenvalues())
                .map(|(&m, &l)| m * (l * t).exp())
                .collect();
            spec.reconstruct(&y)
        })
        .collect();
    Ok(EvolutionSeries {
        times: times.to_vec(),
        states,
    })
}

/// Fixed-step RK4 with `h <= min(1e-3, 0.1 / max|A_ij|)`.
pub fn evolve_ode(a: &CouplingMatrix, c0: &AmplitudeState, times: &[f64]) -> Result<EvolutionSeries> {
    let bound = 0.1 / a.max_abs().max(f64::MIN_POSITIVE);
    evolve_ode_with_step(a, c0, times, ODE_MAX_STEP.min(bound))
}

/// RK4 with a caller-chosen maximal step. Each grid interval is split into
/// equal steps no longer than `max_step`.
pub fn evolve_ode_with_step(
    a: &CouplingMatrix,
    c0: &AmplitudeState,
    times: &[f64],
    max_step: f64,
) -> Result<EvolutionSeries> {
    check_times(times)?;
    check_state(a.dim(), c0)?;
    if !(max_step.is_finite() && max_step >= ODE_MIN_STEP) {
        return Err(Error::StepUnderflow {
            step: max_step,
            interval: times.last().copied().unwrap_or(0.0),
        });
    }
    let m = a.matrix();
    let mut c = c0.amplitudes.clone();
    let mut t = c0.time;
    if times.first().is_some_and(|&t0| t0 < t) {
        return Err(Error::domain("grid starts before the initial state time"));
    }
    let mut states = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / max_step).ceil();
            if steps > 1e12 {
                return Err(Error::StepUnderflow {
                    step: max_step,
                    interval: span,
                });
            }
            let h = span / steps;
            for _ in 0..steps as u64 {
                rk4_step(m, &mut c, h);
            }
            t = target;
        }
        states.push(c.clone());
    }
    Ok(EvolutionSeries {
        times: times.to_vec(),
        states,
    })
}

fn rk4_step(m: &faer::Mat<Complex64>, c: &mut [Complex64], h: f64) {
    let axpy = |base: &[Complex64], k: &[Complex64], s: f64| -> Vec<Complex64> {
        base.iter().zip(k).map(|(&b, &kk)| b + kk * s).collect()
    };
    let k1 = mat_vec(m, c);
    let k2 = mat_vec(m, &axpy(c, &k1, h / 2.0));
    let k3 = mat_vec(m, &axpy(c, &k2, h / 2.0));
    let k4 = mat_vec(m, &axpy(c, &k3, h));
    for i in 0..c.len() {
        c[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
}

/// Eigenmode overlaps of the n-th phase-imprinted state.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeWeights {
    /// Imprint index.
    pub n: usize,
    /// `v_l(n)`: overlap of the imprinted state with eigenvector `l`.
    pub v: Vec<Complex64>,
    /// `w_l(n)`: modal coordinate of the imprinted state.
    pub w: Vec<Complex64>,
    /// `|v_l w_l|²` normalized to unit sum.
    pub wt: Vec<f64>,
    /// Eigenvalues in the same mode order.
    pub eigenvalues: Vec<Complex64>,
}

impl ModeWeights {
    /// Σ_l v_l w_l, which equals d_n(0) = 1.
    pub fn overlap_sum(&self) -> Complex64 {
        self.v.iter().zip(&self.w).map(|(a, b)| a * b).sum()
    }

    /// Mode indices (1-based) sorted by descending weight.
    pub fn ranked_modes(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.wt.len()).collect();
        idx.sort_by(|&a, &b| self.wt[b].total_cmp(&self.wt[a]).then(a.cmp(&b)));
        idx.into_iter().map(|i| i + 1).collect()
    }

    /// Shannon entropy of the weight profile (nats).
    pub fn entropy(&self) -> f64 {
        -self
            .wt
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    /// `d_n(t) = Σ_l v_l e^{λ_l t} w_l`.
    pub fn amplitude_at(&self, t: f64) -> Complex64 {
        self.v
            .iter()
            .zip(&self.w)
            .zip(&self.eigenvalues)
            .map(|((a, b), l)| a * b * (l * t).exp())
            .sum()
    }

    /// CSV rows `mode_index,wt,re_2lambda_over_gamma,im_2lambda_over_gamma`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "mode_index,wt,re_2lambda_over_gamma,im_2lambda_over_gamma")?;
        for (l, (wt, lam)) in self.wt.iter().zip(&self.eigenvalues).enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                l + 1,
                fmt_num(*wt),
                fmt_num(2.0 * lam.re),
                fmt_num(2.0 * lam.im)
            )?;
        }
        Ok(())
    }
}

/// Precomputed sums of eigenvector rows (and inverse columns) grouped by the
/// phase index f(μ). Imprinted phases depend on a bare state only through f,
/// so each `mode_weights` evaluation costs O(#f · dim) instead of O(dim²).
pub struct ImprintProjector<'a> {
    spec: &'a Spectrum,
    dim: usize,
    f_values: Vec<usize>,
    // [group][mode]
    u_sums: Vec<Vec<Complex64>>,
    uinv_sums: Vec<Vec<Complex64>>,
}

impl<'a> ImprintProjector<'a> {
    pub fn new(spec: &'a Spectrum, space: &HilbertSpace) -> Result<Self> {
        let dim = space.dim();
        if spec.len() != dim {
            return Err(Error::domain(format!(
                "spectrum has {} modes, space has dimension {dim}",
                spec.len()
            )));
        }
        let m = space.n_excitations();
        let f_min = m * (m + 1) / 2;
        let f_max = (space.n_atoms() - m + 1..=space.n_atoms()).sum::<usize>();
        let groups = f_max - f_min + 1;
        let mut u_sums = vec![vec![ZERO; dim]; groups];
        let mut uinv_sums = vec![vec![ZERO; dim]; groups];
        let u = spec.vectors();
        let ui = spec.inverse();
        for (row, cfg) in space.iter().enumerate() {
            let g = cfg.phase_index() - f_min;
            for l in 0..dim {
                u_sums[g][l] += u[(row, l)];
                uinv_sums[g][l] += ui[(l, row)];
            }
        }
        Ok(Self {
            spec,
            dim,
            f_values: (f_min..=f_max).collect(),
            u_sums,
            uinv_sums,
        })
    }

    /// `v_l(n)` and `w_l(n)` for every mode.
    pub fn overlaps(&self, n: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        if n < 1 || n > self.dim {
            return Err(Error::domain(format!(
                "imprint index n = {n} outside [1, {}]",
                self.dim
            )));
        }
        let norm = 1.0 / (self.dim as f64).sqrt();
        let mut v = vec![ZERO; self.dim];
        let mut w = vec![ZERO; self.dim];
        for (g, &f) in self.f_values.iter().enumerate() {
            let p = phase_factor(n, f, self.dim) * norm;
            let pc = p.conj();
            for l in 0..self.dim {
                v[l] += pc * self.u_sums[g][l];
                w[l] += p * self.uinv_sums[g][l];
            }
        }
        Ok((v, w))
    }

    pub fn weights(&self, n: usize) -> Result<ModeWeights> {
        let (v, w) = self.overlaps(n)?;
        let raw: Vec<f64> = v.iter().zip(&w).map(|(a, b)| (a * b).norm_sqr()).collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Decomposition(format!(
                "mode weights for n = {n} have degenerate total {total}"
            )));
        }
        Ok(ModeWeights {
            n,
            v,
            w,
            wt: raw.into_iter().map(|x| x / total).collect(),
            eigenvalues: self.spec.eigenvalues().to_vec(),
        })
    }
}

/// Weightings of the n-th phase-imprinted state on the eigenmodes of `spec`.
pub fn mode_weights(spec: &Spectrum, space: &HilbertSpace, n: usize) -> Result<ModeWeights> {
    ImprintProjector::new(spec, space)?.weights(n)
}

/// `d_n(t)` on the grid from the modal expansion.
pub fn evolve_imprinted(
    spec: &Spectrum,
    space: &HilbertSpace,
    n: usize,
    times: &[f64],
) -> Result<EvolutionSeries> {
    check_times(times)?;
    let weights = mode_weights(spec, space, n)?;
    Ok(EvolutionSeries {
        times: times.to_vec(),
        states: times.iter().map(|&t| vec![weights.amplitude_at(t)]).collect(),
    })
}

/// Projects full-state amplitudes onto the n-th imprinted state,
/// `d_n(t) = ⟨φ_n|Ψ(t)⟩`.
pub fn project_imprinted(
    series: &EvolutionSeries,
    space: &HilbertSpace,
    n: usize,
) -> Result<EvolutionSeries> {
    let phi = initial_phase_imprinted(space, n)?;
    let states = series
        .states
        .iter()
        .map(|c| {
            if c.len() != phi.dim() {
                return Err(Error::domain("series dimension does not match the space"));
            }
            Ok(vec![phi
                .amplitudes
                .iter()
                .zip(c)
                .map(|(p, x)| p.conj() * x)
                .sum()])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionSeries {
        times: series.times.clone(),
        states,
    })
}
