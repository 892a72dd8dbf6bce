//! Command-line front end.
//!
//! Every subcommand reads a run config, writes CSV artifacts (plus a plot
//! script for figure-style outputs) into the output directory and prints a
//! `key=value` summary. Exit codes: 0 success, 1 configuration / usage / I/O
//! error, 2 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::analysis::{
    beat_period, fit_decay, max_decay, min_decay, peak_spacing, scan_imprint_index, write_fit_csv,
    write_scan_csv, Beat,
};
use crate::config::{EvolutionPath, RunConfig, DEFAULT_OUTPUT_DIR};
use crate::coupling::CouplingMatrix;
use crate::dynamics::{
    evolve_eigen, evolve_imprinted, evolve_ode, initial_phase_imprinted, initial_timed_dicke,
    mode_weights, project_imprinted, EvolutionSeries,
};
use crate::error::{Error, FieldError, Result};
use crate::krylov::evolve_krylov;
use crate::output::{
    evolution_plot_script, fmt_num, spectrum_plot_script, sweep_plot_script, write_text,
};
use crate::spectral::{diagonalize, eigenvalues, write_eigenvalue_csv, SortKey};

/// Environment variable overriding the output directory (below `--out`).
pub const OUT_DIR_ENV: &str = "SUBRADIANCE_OUT";

#[derive(Debug, Parser)]
#[command(name = "subradiance", version, about = "Multiphoton subradiance in atomic arrays")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run config (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; beats $SUBRADIANCE_OUT and the config's `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Also write the coupling matrix as `matrix.csv`.
    #[arg(long)]
    pub dump_matrix: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of the coupling matrix.
    Spectrum(Common),
    /// Time evolution of the imprinted (or timed-Dicke) state.
    Evolve(Common),
    /// Rank imprint indices by the weight they put on one mode.
    Scan {
        #[command(flatten)]
        common: Common,
        /// 1-based mode in decay-ascending order.
        #[arg(long, default_value_t = 1)]
        target_mode: usize,
    },
    /// Min/max decay constants across spacings or lattice shapes.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated: spacings in λ, or shapes such as `2x2x4`.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Spacing,
    Geometry,
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Spectrum(c) | Command::Evolve(c) => c,
            Command::Scan { common, .. } | Command::Sweep { common, .. } => common,
        }
    }
}

/// Ordered `key=value` pairs printed after a run.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Summary(pub Vec<(String, String)>);

impl Summary {
    fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.0 {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        2
    } else {
        1
    }
}

/// Parses `args` (including the program name), runs, prints, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap's own usage exit code would collide with the numerical-failure code
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    match run(&cli, env_out) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// `--out`, then the environment override, then the config, then `out`.
pub fn resolve_output_dir(cli_out: Option<&Path>, env_out: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    cli_out
        .or(env_out)
        .or(cfg.output_dir.as_deref())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

pub fn run(cli: &Cli, env_out: Option<PathBuf>) -> Result<Summary> {
    let common = cli.command.common();
    if common.jobs == 0 {
        return Err(Error::Config(vec![FieldError::new("--jobs", "must be >= 1")]));
    }
    let cfg = RunConfig::load(&common.config)?;
    if let Command::Sweep { values, .. } = &cli.command {
        if values.iter().all(|v| v.trim().is_empty()) {
            return Err(Error::Config(vec![FieldError::new("--values", "no values given")]));
        }
    }
    let out = resolve_output_dir(common.out.as_deref(), env_out.as_deref(), &cfg);
    std::fs::create_dir_all(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build()
        .map_err(|e| Error::Config(vec![FieldError::new("--jobs", e.to_string())]))?;
    pool.install(|| {
        let mut summary = Summary::default();
        summary.push("output_dir", out.display());
        match &cli.command {
            Command::Spectrum(c) => cmd_spectrum(&cfg, &out, c.dump_matrix, &mut summary)?,
            Command::Evolve(c) => cmd_evolve(&cfg, &out, c.dump_matrix, &mut summary)?,
            Command::Scan { common, target_mode } => {
                cmd_scan(&cfg, &out, common.dump_matrix, *target_mode, &mut summary)?
            }
            Command::Sweep { param, values, .. } => cmd_sweep(&cfg, &out, *param, values, &mut summary)?,
        }
        Ok(summary)
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn assemble(cfg: &RunConfig, out: &Path, dump: bool, summary: &mut Summary) -> Result<CouplingMatrix> {
    let space = cfg.space()?;
    let a = CouplingMatrix::assemble(&space, &cfg.lattice()?)?;
    summary.push("n_atoms", space.n_atoms());
    summary.push("excitations", space.n_excitations());
    summary.push("dim", space.dim());
    if dump {
        let path = out.join("matrix.csv");
        a.write_csv(create(&path)?)?;
        summary.push("matrix_csv", path.display());
    }
    Ok(a)
}

fn push_extremes(values: &[Complex64], summary: &mut Summary) -> Result<()> {
    let (lo_mode, lo) = min_decay(values)?;
    let (hi_mode, hi) = max_decay(values)?;
    summary.push("min_decay_mode", lo_mode);
    summary.push("min_decay_gamma", fmt_num(lo));
    summary.push("max_decay_mode", hi_mode);
    summary.push("max_decay_gamma", fmt_num(hi));
    Ok(())
}

pub fn cmd_spectrum(cfg: &RunConfig, out: &Path, dump: bool, summary: &mut Summary) -> Result<()> {
    summary.push("command", "spectrum");
    let a = assemble(cfg, out, dump, summary)?;
    let values = eigenvalues(&a, SortKey::DecayAscending)?;
    let trace: Complex64 = values.iter().sum();
    let expected = -((a.dim() * a.n_excitations()) as f64) / 2.0;
    push_extremes(&values, summary)?;
    summary.push("trace_re", fmt_num(trace.re));
    summary.push("trace_im", fmt_num(trace.im));
    summary.push("trace_expected", fmt_num(expected));
    summary.push("trace_rel_error", fmt_num((trace - expected).norm() / expected.abs()));
    let csv = out.join("eigenvalues.csv");
    write_eigenvalue_csv(&values, create(&csv)?)?;
    write_text(&out.join("eigenvalues_plot.py"), &spectrum_plot_script("eigenvalues.csv"))?;
    summary.push("eigenvalues_csv", csv.display());
    Ok(())
}

pub fn cmd_evolve(cfg: &RunConfig, out: &Path, dump: bool, summary: &mut Summary) -> Result<()> {
    summary.push("command", "evolve");
    let a = assemble(cfg, out, dump, summary)?;
    let space = cfg.space()?;
    let times = cfg.times()?;
    summary.push("evolution_path", cfg.evolution_path);
    summary.push("n_time_points", times.len());

    let needs_spectrum = cfg.imprint_index.is_some() || cfg.evolution_path == EvolutionPath::Eigen;
    let spec = if needs_spectrum { Some(diagonalize(&a)?) } else { None };
    let c0 = match cfg.imprint_index {
        Some(n) => initial_phase_imprinted(&space, n)?,
        None => initial_timed_dicke(&space),
    };
    let full = |path: EvolutionPath| -> Result<EvolutionSeries> {
        match path {
            EvolutionPath::Eigen => evolve_eigen(spec.as_ref().expect("diagonalized"), &c0, &times),
            EvolutionPath::Ode => evolve_ode(&a, &c0, &times),
            EvolutionPath::Krylov => evolve_krylov(&a, &c0, &times, cfg.krylov_dim),
        }
    };
    let series = match (cfg.imprint_index, cfg.evolution_path) {
        (Some(n), EvolutionPath::Eigen) => {
            evolve_imprinted(spec.as_ref().expect("diagonalized"), &space, n, &times)?
        }
        (Some(n), path) => project_imprinted(&full(path)?, &space, n)?,
        (None, path) => full(path)?,
    };

    let evolution_csv = out.join("evolution.csv");
    series.write_csv(create(&evolution_csv)?)?;
    summary.push("evolution_csv", evolution_csv.display());
    let population = series.population();
    summary.push("final_population", fmt_num(*population.last().expect("nonempty grid")));

    let mut weights_name = None;
    if let (Some(n), Some(spec)) = (cfg.imprint_index, spec.as_ref()) {
        summary.push("imprint_index", n);
        let w = mode_weights(spec, &space, n)?;
        let path = out.join("weights.csv");
        w.write_csv(create(&path)?)?;
        summary.push("weights_csv", path.display());
        for (rank, &l) in w.ranked_modes().iter().take(2).enumerate() {
            summary.push(format!("top{}_mode", rank + 1), l);
            summary.push(format!("top{}_wt", rank + 1), fmt_num(w.wt[l - 1]));
            summary.push(format!("top{}_decay_gamma", rank + 1), fmt_num(-2.0 * w.eigenvalues[l - 1].re));
        }
        match beat_period(&w) {
            Beat::Beat { period, shift_difference, .. } => {
                summary.push("beat_period_gamma", fmt_num(period));
                summary.push("beat_shift_difference_gamma", fmt_num(shift_difference));
            }
            Beat::NoBeat => summary.push("beat_period_gamma", "none"),
        }
        weights_name = Some("weights.csv");
    }
    match peak_spacing(&times, &population) {
        Some(s) => summary.push("peak_spacing_gamma", fmt_num(s)),
        None => summary.push("peak_spacing_gamma", "none"),
    }

    let mut fits = Vec::new();
    for (mode, window) in cfg.fits() {
        match fit_decay(&series, window, mode) {
            Ok(fit) => {
                summary.push(format!("fit_{mode}_rate_gamma"), fmt_num(fit.rate));
                summary.push(
                    format!("fit_{mode}_lifetime_x_intrinsic"),
                    fmt_num(fit.lifetime_ratio(cfg.excitations)),
                );
                fits.push(fit);
            }
            // a short or underflowing grid leaves nothing to fit; not fatal
            Err(e) => summary.push(format!("fit_{mode}_error"), e),
        }
    }
    let fits_csv = out.join("fits.csv");
    write_fit_csv(&fits, cfg.excitations, create(&fits_csv)?)?;
    summary.push("fits_csv", fits_csv.display());
    write_text(
        &out.join("evolution_plot.py"),
        &evolution_plot_script("evolution.csv", weights_name, cfg.excitations),
    )?;
    Ok(())
}

pub fn cmd_scan(
    cfg: &RunConfig,
    out: &Path,
    dump: bool,
    target_mode: usize,
    summary: &mut Summary,
) -> Result<()> {
    summary.push("command", "scan");
    let a = assemble(cfg, out, dump, summary)?;
    if target_mode < 1 || target_mode > a.dim() {
        return Err(Error::Config(vec![FieldError::new(
            "--target-mode",
            format!("must lie in [1, {}]", a.dim()),
        )]));
    }
    let spec = diagonalize(&a)?;
    let ranking = scan_imprint_index(&spec, &cfg.space()?, target_mode)?;
    summary.push("target_mode", target_mode);
    summary.push("target_decay_gamma", fmt_num(-2.0 * spec.eigenvalue(target_mode).re));
    for (r, (n, wt)) in ranking.iter().take(5).enumerate() {
        summary.push(format!("rank{}", r + 1), format!("{n}:{}", fmt_num(*wt)));
    }
    let path = out.join("scan.csv");
    write_scan_csv(&ranking, create(&path)?)?;
    summary.push("scan_csv", path.display());
    Ok(())
}

fn parse_shape(s: &str) -> Option<[usize; 3]> {
    let parts: Vec<usize> = s.split('x').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    <[usize; 3]>::try_from(parts).ok()
}

/// One config per sweep value; every bad value is reported.
pub fn sweep_configs(cfg: &RunConfig, param: SweepParam, values: &[String]) -> Result<Vec<RunConfig>> {
    let mut errs = Vec::new();
    let mut runs = Vec::new();
    for raw in values {
        let v = raw.trim();
        let mut run = cfg.clone();
        match param {
            SweepParam::Spacing => match v.parse::<f64>() {
                Ok(s) => run.spacing_lambda = s,
                Err(_) => {
                    errs.push(FieldError::new("--values", format!("`{v}` is not a spacing")));
                    continue;
                }
            },
            SweepParam::Geometry => match parse_shape(v) {
                Some(d) => run.dims = d,
                None => {
                    errs.push(FieldError::new("--values", format!("`{v}` is not a shape like 2x2x4")));
                    continue;
                }
            },
        }
        if let Err(Error::Config(fe)) = run.validate() {
            errs.extend(fe.into_iter().map(|e| FieldError::new(format!("--values {v}: {}", e.field), e.message)));
            continue;
        }
        runs.push(run);
    }
    if values.is_empty() {
        errs.push(FieldError::new("--values", "no values given"));
    }
    if errs.is_empty() {
        Ok(runs)
    } else {
        Err(Error::Config(errs))
    }
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    out: &Path,
    param: SweepParam,
    values: &[String],
    summary: &mut Summary,
) -> Result<()> {
    summary.push("command", "sweep");
    let values: Vec<String> = values.iter().map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    let runs = sweep_configs(cfg, param, &values)?;
    summary.push("param", format!("{param:?}").to_lowercase());
    summary.push("runs", runs.len());
    let rows = runs
        .par_iter()
        .enumerate()
        .map(|(i, run)| -> Result<(f64, f64)> {
            let a = CouplingMatrix::assemble(&run.space()?, &run.lattice()?)?;
            let vals = eigenvalues(&a, SortKey::DecayAscending)?;
            write_eigenvalue_csv(&vals, create(&out.join(format!("sweep_{:03}_eigenvalues.csv", i + 1)))?)?;
            Ok((min_decay(&vals)?.1, max_decay(&vals)?.1))
        })
        .collect::<Result<Vec<_>>>()?;
    let path = out.join("sweep.csv");
    let mut w = create(&path)?;
    use std::io::Write;
    writeln!(w, "value,min_decay_gamma,max_decay_gamma")?;
    for (v, (lo, hi)) in values.iter().zip(&rows) {
        let label = match param {
            SweepParam::Spacing => fmt_num(v.parse().expect("validated")),
            SweepParam::Geometry => v.clone(),
        };
        writeln!(w, "{label},{},{}", fmt_num(*lo), fmt_num(*hi))?;
        summary.push(format!("min_decay_gamma[{v}]"), fmt_num(*lo));
    }
    w.flush()?;
    write_text(&out.join("sweep_plot.py"), &sweep_plot_script("sweep.csv"))?;
    summary.push("sweep_csv", path.display());
    Ok(())
}
