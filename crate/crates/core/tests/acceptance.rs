//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

mod common;

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subradiance::analysis::{beat_period, fit_decay, min_decay, peak_spacing, Beat, FitMode};
use subradiance::coupling::CouplingMatrix;
use subradiance::dynamics::{
    evolve_eigen, evolve_imprinted, evolve_ode, imprint_phases, initial_phase_imprinted, mode_weights,
    time_grid,
};
use subradiance::geometry::Lattice;
use subradiance::hilbert::HilbertSpace;
use subradiance::krylov::evolve_krylov;
use subradiance::spectral::{decay_constant, diagonalize, eigenvalues, multiset_distance, SortKey};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn chain(n: usize, spacing: f64) -> Lattice {
    Lattice::chain(n, spacing).unwrap()
}

fn grid(dims: [usize; 3], spacing: f64) -> Lattice {
    Lattice::build(dims, spacing, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap()
}

fn assemble(n: usize, m: usize, lattice: &Lattice) -> (HilbertSpace, CouplingMatrix) {
    let space = HilbertSpace::new(n, m).unwrap();
    let a = CouplingMatrix::assemble(&space, lattice).unwrap();
    (space, a)
}

/// Two-photon beat at 0.1λ.
fn criterion_1() -> Check {
    let start = Instant::now();
    let (space, a) = assemble(16, 2, &chain(16, 0.1));
    let spec = diagonalize(&a).map_err(|e| e.to_string())?;
    let w = mode_weights(&spec, &space, 45).unwrap();
    let ranked = w.ranked_modes();
    let (la, lb) = (w.eigenvalues[ranked[0] - 1], w.eigenvalues[ranked[1] - 1]);
    // frequency-shift difference of λ; the population beats at exactly this rate
    let shift = (la.im - lb.im).abs();
    let decays = [decay_constant(la), decay_constant(lb)];
    let times = time_grid(60.0, 2000).unwrap();
    let series = evolve_imprinted(&spec, &space, 45, &times).unwrap();
    let spacing = peak_spacing(&times, &series.population());
    let beat = beat_period(&w);
    let elapsed = start.elapsed();
    let ok = (shift - 0.33).abs() <= 0.07
        && decays.iter().all(|&d| d <= 0.01)
        && spacing.is_some_and(|t| (t - 20.0).abs() <= 3.0)
        && matches!(beat, Beat::Beat { .. })
        && within(elapsed, 5.0);
    verdict(
        ok,
        format!(
            "top modes {:?} wt {:.3}/{:.3}, |dIm(lambda)| = {shift:.4} (|dIm(2 lambda)| = {:.4}), decays {:.4}/{:.4}, \
             peak spacing {spacing:?}, beat {beat:?}, {:.2}s",
            &ranked[..2],
            w.wt[ranked[0] - 1],
            w.wt[ranked[1] - 1],
            2.0 * shift,
            decays[0],
            decays[1],
            elapsed.as_secs_f64()
        ),
    )
}

/// No beat at 0.25λ, and the population stays above exp(−2Γt).
fn criterion_2() -> Check {
    let start = Instant::now();
    let (space, a) = assemble(16, 2, &chain(16, 0.25));
    let spec = diagonalize(&a).map_err(|e| e.to_string())?;
    let w = mode_weights(&spec, &space, 45).unwrap();
    let ranked = w.ranked_modes();
    let joint = w.wt[ranked[0] - 1] + w.wt[ranked[1] - 1];
    let beat = beat_period(&w);
    let times = time_grid(20.0, 2001).unwrap();
    let series = evolve_imprinted(&spec, &space, 45, &times).unwrap();
    let worst = times
        .iter()
        .zip(series.population())
        .skip(1)
        .map(|(&t, p)| p / (-2.0 * t).exp())
        .fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    let ok = beat == Beat::NoBeat && worst > 1.0 && within(elapsed, 5.0);
    verdict(
        ok,
        format!(
            "top-two joint wt {joint:.4} (beat iff > 0.5), beat {beat:?}, min P/exp(-2t) on (0,20] = {worst:.4}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Three-photon lifetimes: 1D array vs cuboid vs square.
fn criterion_3() -> Check {
    let start = Instant::now();
    let times = time_grid(60.0, 2000).unwrap();
    let ratios = |lattice: Lattice, n: usize| -> Result<[f64; 2], String> {
        let (space, a) = assemble(16, 3, &lattice);
        let spec = diagonalize(&a).map_err(|e| e.to_string())?;
        let series = evolve_imprinted(&spec, &space, n, &times).unwrap();
        let mut out = [0.0; 2];
        for (slot, mode) in out.iter_mut().zip([FitMode::Free, FitMode::Anchored]) {
            let fit = fit_decay(&series, mode.default_window(), mode).map_err(|e| e.to_string())?;
            *slot = fit.lifetime_ratio(3);
        }
        Ok(out)
    };
    let array = ratios(chain(16, 0.25), 135)?;
    let cuboid = ratios(grid([2, 2, 4], 0.25), 100)?;
    let square = ratios(grid([4, 4, 1], 0.25), 70)?;
    let elapsed = start.elapsed();
    let in_band = |r: f64, lo: f64, hi: f64| (lo..=hi).contains(&r);
    let ok = array.iter().all(|&r| in_band(r, 100.0, 250.0))
        && cuboid.iter().chain(&square).all(|&r| in_band(r, 3.0, 6.0))
        && square.iter().zip(&cuboid).all(|(s, c)| s < c)
        && within(elapsed, 30.0);
    verdict(
        ok,
        format!(
            "lifetime ratios [free, anchored]: 1x1x16 n=135 {array:.1?} (want [100,250]), \
             2x2x4 n=100 {cuboid:.2?}, 4x4x1 n=70 {square:.2?} (want [3,6], square smaller), {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Most subradiant three-photon modes of 27 atoms.
fn criterion_4() -> Check {
    let start = Instant::now();
    let min_of = |lattice: Lattice| -> Result<f64, String> {
        let (_, a) = assemble(27, 3, &lattice);
        let values = eigenvalues(&a, SortKey::DecayAscending).map_err(|e| e.to_string())?;
        Ok(min_decay(&values).unwrap().1)
    };
    let array = min_of(chain(27, 0.25))?;
    let cube = min_of(grid([3, 3, 3], 0.25))?;
    let elapsed = start.elapsed();
    let ok = (2.2e-4..=9e-4).contains(&array) && (0.02..=0.08).contains(&cube) && within(elapsed, 600.0);
    verdict(
        ok,
        format!(
            "min decay 1x1x27 {array:.4e} (want [2.2e-4, 9e-4]), 3x3x3 {cube:.4e} (want [0.02, 0.08]), {:.0}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Σλ = −C(N,M)·M/2 across random lattices.
fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=10 {
        for m in 1..=3.min(n) {
            for _ in 0..3 {
                let lattice = common::random_lattice(&mut rng, n);
                let (space, a) = assemble(n, m, &lattice);
                let values = eigenvalues(&a, SortKey::DecayAscending).map_err(|e| e.to_string())?;
                let expected = -((space.dim() * m) as f64) / 2.0;
                let sum: Complex64 = values.iter().sum();
                worst = worst.max((sum - expected).norm() / expected.abs());
                cases += 1;
            }
        }
    }
    verdict(worst <= 1e-10, format!("{cases} lattices, worst relative trace error {worst:.2e}"))
}

/// Spectra of A and its gauge-stripped form agree.
fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let n = rng.random_range(3..=9);
        let m = rng.random_range(1..=3.min(n));
        let lattice = common::random_lattice(&mut rng, n);
        let (_, a) = assemble(n, m, &lattice);
        let b = a.gauge_strip().unwrap();
        let sa = eigenvalues(&a, SortKey::DecayAscending).map_err(|e| e.to_string())?;
        let sb = eigenvalues(&b, SortKey::DecayAscending).map_err(|e| e.to_string())?;
        worst = worst.max(multiset_distance(&sa, &sb));
    }
    verdict(worst <= 1e-10, format!("10 random lattices, worst multiset distance {worst:.2e}"))
}

/// Eigen vs ODE on small spaces; Krylov vs eigen at dim 560.
fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases: Vec<(usize, usize, Lattice)> = vec![
        (16, 2, chain(16, 0.1)),
        (16, 2, chain(16, 0.25)),
        (10, 3, chain(10, 0.2)),
        (8, 2, grid([2, 2, 2], 0.3)),
    ];
    for _ in 0..4 {
        let n = rng.random_range(3..=8);
        let m = rng.random_range(1..=3.min(n));
        cases.push((n, m, common::random_lattice(&mut rng, n)));
    }
    let times = time_grid(3.0, 31).unwrap();
    let mut worst_ode: f64 = 0.0;
    for (n, m, lattice) in &cases {
        let (space, a) = assemble(*n, *m, lattice);
        assert!(space.dim() <= 120);
        let spec = diagonalize(&a).map_err(|e| e.to_string())?;
        let c0 = initial_phase_imprinted(&space, rng.random_range(1..=space.dim())).unwrap();
        let e = evolve_eigen(&spec, &c0, &times).unwrap();
        let o = evolve_ode(&a, &c0, &times).map_err(|e| e.to_string())?;
        worst_ode = worst_ode.max(e.max_abs_diff(&o));
    }

    let (space, a) = assemble(16, 3, &chain(16, 0.25));
    let spec = diagonalize(&a).map_err(|e| e.to_string())?;
    let c0 = initial_phase_imprinted(&space, 135).unwrap();
    let times = time_grid(20.0, 41).unwrap();
    let e = evolve_eigen(&spec, &c0, &times).unwrap();
    let k = evolve_krylov(&a, &c0, &times, 30).map_err(|e| e.to_string())?;
    let krylov = e.max_abs_diff(&k);
    verdict(
        worst_ode <= 1e-8 && krylov <= 1e-6,
        format!(
            "eigen vs ode over {} cases (dim <= 120): {worst_ode:.2e}; krylov(m=30) vs eigen at dim 560: {krylov:.2e}",
            cases.len()
        ),
    )
}

/// Re λ ≤ 0, norm non-increasing, weights normalized.
fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let times = time_grid(10.0, 101).unwrap();
    let (mut max_re, mut max_rise, mut wt_err, mut vw_err) = (f64::NEG_INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let n = rng.random_range(2..=9);
        let m = rng.random_range(1..=3.min(n));
        let lattice = common::random_lattice(&mut rng, n);
        let (space, a) = assemble(n, m, &lattice);
        let spec = diagonalize(&a).map_err(|e| e.to_string())?;
        max_re = spec.eigenvalues().iter().map(|l| l.re).fold(max_re, f64::max);
        let idx = rng.random_range(1..=space.dim());
        let w = mode_weights(&spec, &space, idx).unwrap();
        wt_err = wt_err.max((w.wt.iter().sum::<f64>() - 1.0).abs());
        vw_err = vw_err.max((w.overlap_sum() - 1.0).norm());
        let series = evolve_eigen(&spec, &initial_phase_imprinted(&space, idx).unwrap(), &times).unwrap();
        let pop = series.population();
        max_rise = pop.windows(2).map(|p| p[1] - p[0]).fold(max_rise, f64::max);
    }
    verdict(
        max_re <= 1e-10 && max_rise <= 1e-12 && wt_err <= 1e-10 && vw_err <= 1e-10,
        format!(
            "20 draws: max Re lambda {max_re:.2e}, max norm rise {max_rise:.2e}, |sum wt - 1| {wt_err:.2e}, |sum v w - 1| {vw_err:.2e}"
        ),
    )
}

fn gram_error(n: usize, m: usize) -> f64 {
    let space = HilbertSpace::new(n, m).unwrap();
    let dim = space.dim() as f64;
    let basis: Vec<Vec<Complex64>> = (1..=space.dim()).map(|i| imprint_phases(&space, i).unwrap()).collect();
    let mut worst: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let g: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() / dim;
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}

/// Imprinted bases that are orthonormal.
fn criterion_9() -> Check {
    let cases = [(3, 1), (8, 1), (16, 1), (3, 2)];
    let errs: Vec<f64> = cases.iter().map(|&(n, m)| gram_error(n, m)).collect();
    verdict(
        errs.iter().all(|&e| e <= 1e-12),
        format!(
            "Gram deviation {}",
            cases
                .iter()
                .zip(&errs)
                .map(|((n, m), e)| format!("(N={n},M={m}) {e:.1e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

/// Far-separated atoms decay independently.
fn criterion_10() -> Check {
    let (space, a) = assemble(8, 2, &chain(8, 50.0));
    let spec = diagonalize(&a).map_err(|e| e.to_string())?;
    let times = time_grid(3.0, 301).unwrap();
    let mut worst: f64 = 0.0;
    for n in 1..=space.dim() {
        let series = evolve_imprinted(&spec, &space, n, &times).unwrap();
        for (&t, p) in times.iter().zip(series.population()) {
            worst = worst.max((p - (-2.0 * t).exp()).abs());
        }
    }
    verdict(worst <= 1e-2, format!("max |P - exp(-2t)| on [0,3] over all 28 imprints: {worst:.2e}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("two-photon beat at 0.1 lambda", criterion_1),
        ("no beat at 0.25 lambda", criterion_2),
        ("three-photon lifetime ratios", criterion_3),
        ("27-atom minimum decay", criterion_4),
        ("trace identity", criterion_5),
        ("gauge invariance", criterion_6),
        ("propagator agreement", criterion_7),
        ("dissipativity and normalization", criterion_8),
        ("imprinted basis orthogonality", criterion_9),
        ("non-interacting limit", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        match check() {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                println!("criterion {id:>2} FAIL  {name}: {detail}");
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: {} of {} criteria failed: {failed:?}", failed.len(), criteria.len());
        std::process::exit(1);
    }
}
