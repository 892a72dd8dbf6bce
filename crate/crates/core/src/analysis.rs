//! Decay fits, beat periods, imprint-index scans, and spectral minima.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{EvolutionSeries, ImprintProjector, ModeWeights};
use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::output::fmt_num;
use crate::spectral::{decay_constant, Spectrum};

/// Modes below this weight never count toward a beat.
pub const BEAT_MODE_THRESHOLD: f64 = 0.05;
/// The two dominant modes must jointly exceed this weight.
pub const BEAT_JOINT_THRESHOLD: f64 = 0.5;
/// Peaks with less than this fraction of the largest prominence are ignored.
pub const PEAK_PROMINENCE_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMode {
    /// Intercept pinned to ln P(0).
    Anchored,
    /// Slope and intercept both fitted.
    Free,
}

impl FitMode {
    /// Default window in 1/Γ: the free fit skips the early transient.
    pub fn default_window(self) -> FitWindow {
        match self {
            FitMode::Anchored => FitWindow::new(0.0, 40.0),
            FitMode::Free => FitWindow::new(5.0, 40.0),
        }
    }
}

impl fmt::Display for FitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMode::Anchored => "anchored",
            FitMode::Free => "free",
        })
    }
}

impl FromStr for FitMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "anchored" => Ok(FitMode::Anchored),
            "free" => Ok(FitMode::Free),
            other => Err(format!("expected `anchored` or `free`, got `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitWindow {
    pub start: f64,
    pub end: f64,
}

impl FitWindow {
    pub const fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

/// Straight-line fit of ln P(t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// Population decay rate in Γ (−slope).
    pub rate: f64,
    /// ln P at t = 0.
    pub intercept: f64,
    pub window: FitWindow,
    pub mode: FitMode,
    /// RMS of the log residuals.
    pub residual: f64,
}

impl DecayFit {
    /// Lifetime relative to the intrinsic M-excitation lifetime 1/(MΓ).
    pub fn lifetime_ratio(&self, n_excitations: usize) -> f64 {
        n_excitations as f64 / self.rate
    }
}

/// Fits ln P(t) of `series` over `window`.
pub fn fit_decay(series: &EvolutionSeries, window: FitWindow, mode: FitMode) -> Result<DecayFit> {
    fit_population(&series.times, &series.population(), window, mode)
}

pub fn fit_population(
    times: &[f64],
    population: &[f64],
    window: FitWindow,
    mode: FitMode,
) -> Result<DecayFit> {
    if times.len() != population.len() {
        return Err(Error::domain("times and population differ in length"));
    }
    if window.start.is_nan() || window.end.is_nan() || window.start > window.end {
        return Err(Error::domain(format!(
            "fit window [{}, {}] is empty",
            window.start, window.end
        )));
    }
    let mut pts = Vec::new();
    for (&t, &p) in times.iter().zip(population) {
        if window.contains(t) {
            if p.is_nan() || p <= 0.0 {
                return Err(Error::domain(format!(
                    "population {p:e} at t = {t} is not positive"
                )));
            }
            pts.push((t, p.ln()));
        }
    }
    let (slope, intercept) = match mode {
        FitMode::Free => {
            if pts.len() < 2 {
                return Err(Error::domain("free fit needs at least two points in the window"));
            }
            let n = pts.len() as f64;
            let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
            if sxx == 0.0 {
                return Err(Error::domain("fit window holds a single time"));
            }
            let slope = sxy / sxx;
            (slope, ym - slope * tm)
        }
        FitMode::Anchored => {
            let p0 = match times.first() {
                Some(&t0) if t0 == 0.0 && population[0] > 0.0 => population[0],
                _ => {
                    return Err(Error::domain(
                        "anchored fit needs a positive population sample at t = 0",
                    ))
                }
            };
            let y0 = p0.ln();
            let stt: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            if stt == 0.0 {
                return Err(Error::domain("anchored fit needs a point with t > 0 in the window"));
            }
            let sty: f64 = pts.iter().map(|p| p.0 * (p.1 - y0)).sum();
            (sty / stt, y0)
        }
    };
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    Ok(DecayFit {
        rate: -slope,
        intercept,
        window,
        mode,
        residual,
    })
}

/// CSV rows `mode,window_start,window_end,rate_gamma,lifetime_x_intrinsic,residual`.
pub fn write_fit_csv<W: Write>(fits: &[DecayFit], n_excitations: usize, mut out: W) -> Result<()> {
    writeln!(out, "mode,window_start,window_end,rate_gamma,lifetime_x_intrinsic,residual")?;
    for fit in fits {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fit.mode,
            fmt_num(fit.window.start),
            fmt_num(fit.window.end),
            fmt_num(fit.rate),
            fmt_num(fit.lifetime_ratio(n_excitations)),
            fmt_num(fit.residual)
        )?;
    }
    Ok(())
}

/// Beat between the two dominant eigenmodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beat {
    NoBeat,
    Beat {
        /// Period in 1/Γ.
        period: f64,
        /// 1-based modes, largest weight first.
        modes: (usize, usize),
        /// |Im λ_a − Im λ_b| in Γ.
        shift_difference: f64,
        joint_weight: f64,
    },
}

/// Beat period of |d_n(t)|² from the two largest-weight modes.
///
/// The population beats at the difference of the modes' frequency shifts,
/// `T = 2π / |Im λ_a − Im λ_b|`.
pub fn beat_period(weights: &ModeWeights) -> Beat {
    let ranked = weights.ranked_modes();
    if ranked.len() < 2 {
        return Beat::NoBeat;
    }
    let (a, b) = (ranked[0], ranked[1]);
    let (wa, wb) = (weights.wt[a - 1], weights.wt[b - 1]);
    if wa <= BEAT_MODE_THRESHOLD || wb <= BEAT_MODE_THRESHOLD || wa + wb <= BEAT_JOINT_THRESHOLD {
        return Beat::NoBeat;
    }
    let shift = (weights.eigenvalues[a - 1].im - weights.eigenvalues[b - 1].im).abs();
    if shift == 0.0 {
        return Beat::NoBeat;
    }
    Beat::Beat {
        period: TAU / shift,
        modes: (a, b),
        shift_difference: shift,
        joint_weight: wa + wb,
    }
}

/// Interior local maxima of `values` with their topographic prominence.
pub fn find_peaks(values: &[f64]) -> Vec<(usize, f64)> {
    let n = values.len();
    let mut peaks = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(values[i] > values[i - 1] && values[i] >= values[i + 1]) {
            continue;
        }
        let h = values[i];
        let mut left_min = h;
        let mut j = i;
        while j > 0 && values[j - 1] <= h {
            j -= 1;
            left_min = left_min.min(values[j]);
        }
        let mut right_min = h;
        let mut k = i;
        while k + 1 < n && values[k + 1] <= h {
            k += 1;
            right_min = right_min.min(values[k]);
        }
        peaks.push((i, h - left_min.max(right_min)));
    }
    peaks
}

/// Mean spacing of the prominent peaks of `values` sampled at `times`.
pub fn peak_spacing(times: &[f64], values: &[f64]) -> Option<f64> {
    let peaks = find_peaks(values);
    let top = peaks.iter().map(|p| p.1).fold(0.0, f64::max);
    if top <= 0.0 {
        return None;
    }
    let kept: Vec<f64> = peaks
        .iter()
        .filter(|p| p.1 >= PEAK_PROMINENCE_FRACTION * top)
        .map(|p| times[p.0])
        .collect();
    if kept.len() < 2 {
        return None;
    }
    Some((kept[kept.len() - 1] - kept[0]) / (kept.len() - 1) as f64)
}

/// Weight of `target_mode` for every imprint index, sorted by descending
/// weight (ties by ascending n).
pub fn scan_imprint_index(
    spec: &Spectrum,
    space: &HilbertSpace,
    target_mode: usize,
) -> Result<Vec<(usize, f64)>> {
    if target_mode < 1 || target_mode > spec.len() {
        return Err(Error::domain(format!(
            "target mode {target_mode} outside [1, {}]",
            spec.len()
        )));
    }
    let projector = ImprintProjector::new(spec, space)?;
    let mut ranking = (1..=space.dim())
        .into_par_iter()
        .map(|n| Ok((n, projector.weights(n)?.wt[target_mode - 1])))
        .collect::<Result<Vec<_>>>()?;
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranking)
}

/// CSV rows `rank,n,wt_target`.
pub fn write_scan_csv<W: Write>(ranking: &[(usize, f64)], mut out: W) -> Result<()> {
    writeln!(out, "rank,n,wt_target")?;
    for (r, (n, wt)) in ranking.iter().enumerate() {
        writeln!(out, "{},{},{}", r + 1, n, fmt_num(*wt))?;
    }
    Ok(())
}

/// Most subradiant mode: 1-based position in `eigenvalues` and its decay constant.
pub fn min_decay(eigenvalues: &[Complex64]) -> Result<(usize, f64)> {
    eigenvalues
        .iter()
        .map(|&l| decay_constant(l))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, d)| (i + 1, d))
        .ok_or_else(|| Error::domain("empty spectrum"))
}

pub fn max_decay(eigenvalues: &[Complex64]) -> Result<(usize, f64)> {
    eigenvalues
        .iter()
        .map(|&l| decay_constant(l))
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, d)| (i + 1, d))
        .ok_or_else(|| Error::domain("empty spectrum"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingMatrix;
    use crate::dynamics::{evolve_imprinted, mode_weights, time_grid};
    use crate::geometry::Lattice;
    use crate::spectral::diagonalize;

    fn series(times: &[f64], f: impl Fn(f64) -> f64) -> EvolutionSeries {
        EvolutionSeries {
            times: times.to_vec(),
            states: times.iter().map(|&t| vec![Complex64::new(f(t).sqrt(), 0.0)]).collect(),
        }
    }

    #[test]
    fn pure_exponential_recovered() {
        let times = time_grid(60.0, 601).unwrap();
        let s = series(&times, |t| (-3.0 * t).exp());
        for mode in [FitMode::Anchored, FitMode::Free] {
            for window in [mode.default_window(), FitWindow::new(1.0, 3.0), FitWindow::new(0.0, 60.0)] {
                let fit = fit_decay(&s, window, mode).unwrap();
                assert!((fit.rate - 3.0).abs() < 1e-10, "{mode} {window:?}");
                assert!(fit.residual < 1e-10);
                assert!((fit.lifetime_ratio(3) - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_mode_rate_is_twice_amplitude_rate() {
        let lam = Complex64::new(-0.0137, -4.2);
        let times = time_grid(30.0, 301).unwrap();
        let s = EvolutionSeries {
            times: times.clone(),
            states: times.iter().map(|&t| vec![(lam * t).exp()]).collect(),
        };
        let fit = fit_decay(&s, FitWindow::new(0.0, 30.0), FitMode::Free).unwrap();
        assert!((fit.rate - decay_constant(lam)).abs() < 1e-10);
    }

    #[test]
    fn fit_rejects_nonpositive_population() {
        let times = [0.0, 1.0, 2.0];
        let err = fit_population(&times, &[1.0, 0.0, 0.5], FitWindow::new(0.0, 2.0), FitMode::Free);
        assert!(matches!(err, Err(Error::Domain(_))));
        // zeros outside the window are fine
        assert!(fit_population(&times, &[1.0, 0.5, 0.0], FitWindow::new(0.0, 1.0), FitMode::Free).is_ok());
    }

    #[test]
    fn anchored_and_free_differ_on_two_stage_decay() {
        let times = time_grid(60.0, 601).unwrap();
        let s = series(&times, |t| 0.7 * (-5.0 * t).exp() + 0.3 * (-0.02 * t).exp());
        let a = fit_decay(&s, FitMode::Anchored.default_window(), FitMode::Anchored).unwrap();
        let f = fit_decay(&s, FitMode::Free.default_window(), FitMode::Free).unwrap();
        assert!((f.rate - 0.02).abs() < 1e-6);
        assert!(a.rate > 2.0 * f.rate);
    }

    fn weights(wt: &[f64], lambdas: &[Complex64]) -> ModeWeights {
        ModeWeights {
            n: 1,
            v: vec![Complex64::new(1.0, 0.0); wt.len()],
            w: vec![Complex64::new(1.0, 0.0); wt.len()],
            wt: wt.to_vec(),
            eigenvalues: lambdas.to_vec(),
        }
    }

    #[test]
    fn beat_from_two_dominant_shifts() {
        // 2λ/Γ = 0.004 − 18.19i and 0.0068 − 17.53i
        let lams = [
            Complex64::new(-0.002, -9.095),
            Complex64::new(-0.0034, -8.765),
            Complex64::new(-1.0, 0.0),
        ];
        match beat_period(&weights(&[0.6, 0.3, 0.1], &lams)) {
            Beat::Beat {
                period,
                modes,
                shift_difference,
                ..
            } => {
                assert_eq!(modes, (1, 2));
                assert!((shift_difference - 0.33).abs() < 1e-12);
                assert!((period - TAU / 0.33).abs() < 1e-9);
                assert!((period - 19.04).abs() < 0.01);
            }
            Beat::NoBeat => panic!("expected a beat"),
        }
    }

    #[test]
    fn no_beat_cases() {
        let lams = [Complex64::new(-0.1, -2.0), Complex64::new(-0.2, -2.0), Complex64::new(-0.3, 1.0)];
        assert_eq!(beat_period(&weights(&[0.5, 0.4, 0.1], &lams)), Beat::NoBeat);
        let lams = [Complex64::new(-0.1, -2.0), Complex64::new(-0.2, -1.0), Complex64::new(-0.3, 1.0)];
        let five = [lams[0], lams[1], lams[2], Complex64::new(-0.4, 3.0), Complex64::new(-0.5, 5.0)];
        assert_eq!(beat_period(&weights(&[0.25, 0.2, 0.2, 0.2, 0.15], &five)), Beat::NoBeat);
        assert_eq!(beat_period(&weights(&[0.94, 0.04, 0.02], &lams)), Beat::NoBeat);
        assert_eq!(beat_period(&weights(&[1.0], &lams[..1])), Beat::NoBeat);
    }

    #[test]
    fn synthetic_two_mode_peak_spacing() {
        for (delta, noise) in [(0.33, 0.0), (0.5, 0.02), (1.1, 0.05)] {
            let la = Complex64::new(-0.002, -9.0);
            let lb = Complex64::new(-0.003, -9.0 + delta);
            let period = TAU / delta;
            let times = time_grid(4.0 * period, 4000).unwrap();
            let p: Vec<f64> = times
                .iter()
                .map(|&t| {
                    let d = 0.62 * (la * t).exp() + 0.38 * (lb * t).exp()
                        + noise * Complex64::new(0.0, -4.0 * t).exp();
                    d.norm_sqr()
                })
                .collect();
            let measured = peak_spacing(&times, &p).unwrap();
            assert!((measured / period - 1.0).abs() < 0.02, "delta={delta}: {measured} vs {period}");
        }
    }

    #[test]
    fn peaks_and_prominence() {
        let v = [0.0, 1.0, 0.5, 0.6, 0.2, 2.0, 0.0];
        let peaks = find_peaks(&v);
        assert_eq!(peaks.len(), 3);
        // the right base stops at the taller peak, whose trough is 0.2
        assert!((peaks[0].1 - 0.8).abs() < 1e-15);
        assert!((peaks[1].1 - 0.1).abs() < 1e-15);
        assert_eq!(peaks[2], (5, 2.0));
        assert_eq!(peak_spacing(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]), None);
    }

    #[test]
    fn scan_is_a_ranking() {
        let space = HilbertSpace::new(7, 2).unwrap();
        let a = CouplingMatrix::assemble(&space, &Lattice::chain(7, 0.2).unwrap()).unwrap();
        let spec = diagonalize(&a).unwrap();
        let ranking = scan_imprint_index(&spec, &space, 1).unwrap();
        let mut ns: Vec<usize> = ranking.iter().map(|r| r.0).collect();
        ns.sort();
        assert_eq!(ns, (1..=21).collect::<Vec<_>>());
        assert!(ranking.windows(2).all(|w| w[0].1 >= w[1].1));
        assert!(ranking.iter().all(|r| (0.0..=1.0).contains(&r.1)));
        for &(n, wt) in ranking.iter().take(3) {
            assert!((mode_weights(&spec, &space, n).unwrap().wt[0] - wt).abs() < 1e-14);
        }
        assert!(scan_imprint_index(&spec, &space, 0).is_err());
    }

    #[test]
    fn scan_fully_excited() {
        let space = HilbertSpace::new(3, 3).unwrap();
        let a = CouplingMatrix::assemble(&space, &Lattice::chain(3, 0.2).unwrap()).unwrap();
        let spec = diagonalize(&a).unwrap();
        let ranking = scan_imprint_index(&spec, &space, 1).unwrap();
        assert_eq!(ranking.len(), 1);
        assert_eq!(ranking[0].0, 1);
        assert!((ranking[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn min_decay_examples() {
        assert_eq!(min_decay(&[Complex64::new(-0.5, 0.0)]).unwrap(), (1, 1.0));
        assert!(min_decay(&[]).is_err());
        let space = HilbertSpace::new(6, 2).unwrap();
        let a = CouplingMatrix::assemble(&space, &Lattice::chain(6, 0.2).unwrap()).unwrap();
        let spec = diagonalize(&a).unwrap();
        let (mode, d) = min_decay(spec.eigenvalues()).unwrap();
        assert_eq!(mode, 1);
        let stripped = diagonalize(&a.gauge_strip().unwrap()).unwrap();
        assert!((min_decay(stripped.eigenvalues()).unwrap().1 - d).abs() < 1e-10);
        let resorted = spec.sort_modes(crate::spectral::SortKey::ShiftAscending);
        assert_eq!(min_decay(resorted.eigenvalues()).unwrap().1, d);
    }

    #[test]
    fn subradiant_imprint_beats_like_weights_predict() {
        // small chain analogue of the two-mode beat
        let space = HilbertSpace::new(16, 2).unwrap();
        let a = CouplingMatrix::assemble(&space, &Lattice::chain(16, 0.1).unwrap()).unwrap();
        let spec = diagonalize(&a).unwrap();
        let w = mode_weights(&spec, &space, 45).unwrap();
        let Beat::Beat { period, .. } = beat_period(&w) else {
            panic!("expected a beat");
        };
        let times = time_grid(60.0, 2000).unwrap();
        let d = evolve_imprinted(&spec, &space, 45, &times).unwrap();
        let measured = peak_spacing(&times, &d.population()).unwrap();
        assert!((measured / period - 1.0).abs() < 0.05);
    }
}
