//! Run configuration: flat `key = value` text with `#` comments.
//!
//! | key              | type / values                  | default                 |
//! |------------------|--------------------------------|-------------------------|
//! | `dims`           | `Nx,Ny,Nz`                     | required                |
//! | `spacing_lambda` | float > 0                      | required                |
//! | `excitations`    | integer 1..=N                  | required                |
//! | `imprint_index`  | integer 1..=C(N,M)             | none (timed Dicke)      |
//! | `d_hat`          | `x,y,z`                        | `1,0,0`                 |
//! | `k_hat`          | `x,y,z`                        | `0,0,1`                 |
//! | `t_max_gamma`    | float >= 0                     | `60`                    |
//! | `n_time_points`  | integer >= 1                   | `2000`                  |
//! | `fit_window`     | `start,end`                    | per fit mode            |
//! | `fit_mode`       | `free`, `anchored`, `both`     | `both`                  |
//! | `evolution_path` | `eigen`, `ode`, `krylov`       | `eigen`                 |
//! | `krylov_dim`     | integer >= 2                   | `30`                    |
//! | `output_dir`     | path                           | `out`                   |
//! | `dim_cap`        | integer >= 1                   | `20000`                 |

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::{FitMode, FitWindow};
use crate::dynamics::time_grid;
use crate::error::{Error, FieldError, Result};
use crate::geometry::{Lattice, Vec3};
use crate::hilbert::{binomial, HilbertSpace, DEFAULT_DIM_CAP};

pub const DEFAULT_T_MAX: f64 = 60.0;
pub const DEFAULT_TIME_POINTS: usize = 2000;
pub const DEFAULT_KRYLOV_DIM: usize = 30;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

const KEYS: &[&str] = &[
    "dims",
    "spacing_lambda",
    "excitations",
    "imprint_index",
    "d_hat",
    "k_hat",
    "t_max_gamma",
    "n_time_points",
    "fit_window",
    "fit_mode",
    "evolution_path",
    "krylov_dim",
    "output_dir",
    "dim_cap",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EvolutionPath {
    #[default]
    Eigen,
    Ode,
    Krylov,
}

impl FromStr for EvolutionPath {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "eigen" => Ok(Self::Eigen),
            "ode" => Ok(Self::Ode),
            "krylov" => Ok(Self::Krylov),
            other => Err(format!("expected `eigen`, `ode` or `krylov`, got `{other}`")),
        }
    }
}

impl fmt::Display for EvolutionPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Eigen => "eigen",
            Self::Ode => "ode",
            Self::Krylov => "krylov",
        })
    }
}

/// Which decay fits an evolve run reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FitSelection {
    Free,
    Anchored,
    #[default]
    Both,
}

impl FitSelection {
    pub fn modes(self) -> &'static [FitMode] {
        match self {
            Self::Free => &[FitMode::Free],
            Self::Anchored => &[FitMode::Anchored],
            Self::Both => &[FitMode::Free, FitMode::Anchored],
        }
    }
}

impl FromStr for FitSelection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "both" => Ok(Self::Both),
            other => match other.parse::<FitMode>() {
                Ok(FitMode::Free) => Ok(Self::Free),
                Ok(FitMode::Anchored) => Ok(Self::Anchored),
                Err(_) => Err(format!("expected `free`, `anchored` or `both`, got `{other}`")),
            },
        }
    }
}

impl fmt::Display for FitSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Free => "free",
            Self::Anchored => "anchored",
            Self::Both => "both",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dims: [usize; 3],
    pub spacing_lambda: f64,
    pub excitations: usize,
    pub imprint_index: Option<usize>,
    pub d_hat: Vec3,
    pub k_hat: Vec3,
    pub t_max_gamma: f64,
    pub n_time_points: usize,
    /// Overrides the per-mode default window when set.
    pub fit_window: Option<FitWindow>,
    pub fit_mode: FitSelection,
    pub evolution_path: EvolutionPath,
    pub krylov_dim: usize,
    pub output_dir: Option<PathBuf>,
    pub dim_cap: usize,
}

impl RunConfig {
    /// A config with every optional key at its default.
    pub fn new(dims: [usize; 3], spacing_lambda: f64, excitations: usize) -> Self {
        Self {
            dims,
            spacing_lambda,
            excitations,
            imprint_index: None,
            d_hat: [1.0, 0.0, 0.0],
            k_hat: [0.0, 0.0, 1.0],
            t_max_gamma: DEFAULT_T_MAX,
            n_time_points: DEFAULT_TIME_POINTS,
            fit_window: None,
            fit_mode: FitSelection::default(),
            evolution_path: EvolutionPath::default(),
            krylov_dim: DEFAULT_KRYLOV_DIM,
            output_dir: None,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    pub fn n_atoms(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::with_cap(self.n_atoms(), self.excitations, self.dim_cap)
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::build(self.dims, self.spacing_lambda, self.d_hat, self.k_hat)
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        time_grid(self.t_max_gamma, self.n_time_points)
    }

    /// The (mode, window) pairs an evolve run fits.
    pub fn fits(&self) -> Vec<(FitMode, FitWindow)> {
        self.fit_mode
            .modes()
            .iter()
            .map(|&m| (m, self.fit_window.unwrap_or_else(|| m.default_window())))
            .collect()
    }

    /// Cross-field checks; every problem is reported, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.dims.contains(&0) {
            errs.push(FieldError::new("dims", "every extent must be >= 1"));
        }
        if !(self.spacing_lambda.is_finite() && self.spacing_lambda > 0.0) {
            errs.push(FieldError::new("spacing_lambda", "must be a positive number"));
        }
        let n = self.n_atoms();
        if self.excitations < 1 || (n > 0 && self.excitations > n) {
            errs.push(FieldError::new(
                "excitations",
                format!("must lie in [1, {n}] for a {n}-atom lattice"),
            ));
        } else if n > 0 {
            match binomial(n, self.excitations) {
                Some(dim) if dim <= self.dim_cap => {
                    if let Some(idx) = self.imprint_index {
                        if idx < 1 || idx > dim {
                            errs.push(FieldError::new(
                                "imprint_index",
                                format!("must lie in [1, {dim}]"),
                            ));
                        }
                    }
                }
                _ => errs.push(FieldError::new(
                    "excitations",
                    format!(
                        "C({n}, {}) exceeds dim_cap = {}",
                        self.excitations, self.dim_cap
                    ),
                )),
            }
        }
        for (name, v) in [("d_hat", self.d_hat), ("k_hat", self.k_hat)] {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                errs.push(FieldError::new(name, "must be a finite nonzero vector"));
            }
        }
        if !(self.t_max_gamma.is_finite() && self.t_max_gamma >= 0.0) {
            errs.push(FieldError::new("t_max_gamma", "must be a finite number >= 0"));
        }
        if self.n_time_points < 1 {
            errs.push(FieldError::new("n_time_points", "must be >= 1"));
        } else if self.n_time_points == 1 && self.t_max_gamma != 0.0 {
            errs.push(FieldError::new("n_time_points", "a single point requires t_max_gamma = 0"));
        }
        if let Some(w) = self.fit_window {
            if !(w.start.is_finite() && w.end.is_finite() && 0.0 <= w.start && w.start < w.end) {
                errs.push(FieldError::new("fit_window", "must satisfy 0 <= start < end"));
            }
        }
        if self.krylov_dim < 2 {
            errs.push(FieldError::new("krylov_dim", "must be >= 2"));
        }
        if self.dim_cap < 1 {
            errs.push(FieldError::new("dim_cap", "must be >= 1"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let v3 = |v: Vec3| format!("{},{},{}", v[0], v[1], v[2]);
        let _ = writeln!(s, "dims = {},{},{}", self.dims[0], self.dims[1], self.dims[2]);
        let _ = writeln!(s, "spacing_lambda = {}", self.spacing_lambda);
        let _ = writeln!(s, "excitations = {}", self.excitations);
        if let Some(n) = self.imprint_index {
            let _ = writeln!(s, "imprint_index = {n}");
        }
        let _ = writeln!(s, "d_hat = {}", v3(self.d_hat));
        let _ = writeln!(s, "k_hat = {}", v3(self.k_hat));
        let _ = writeln!(s, "t_max_gamma = {}", self.t_max_gamma);
        let _ = writeln!(s, "n_time_points = {}", self.n_time_points);
        if let Some(w) = self.fit_window {
            let _ = writeln!(s, "fit_window = {},{}", w.start, w.end);
        }
        let _ = writeln!(s, "fit_mode = {}", self.fit_mode);
        let _ = writeln!(s, "evolution_path = {}", self.evolution_path);
        let _ = writeln!(s, "krylov_dim = {}", self.krylov_dim);
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(s, "output_dir = {}", dir.display());
        }
        let _ = writeln!(s, "dim_cap = {}", self.dim_cap);
        s
    }
}

fn parse_list<T: FromStr>(s: &str, len: usize) -> std::result::Result<Vec<T>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != len {
        return Err(format!("expected {len} comma-separated values, got {}", parts.len()));
    }
    parts
        .iter()
        .map(|p| p.parse::<T>().map_err(|_| format!("cannot parse `{p}`")))
        .collect()
}

fn parse_scalar<T: FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("cannot parse `{s}`"))
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut errs = Vec::new();
        let mut entries: BTreeMap<&str, &str> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errs.push(FieldError::new(
                    format!("line {}", lineno + 1),
                    "expected `key = value`",
                ));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                errs.push(FieldError::new(key, "unknown key"));
            } else if entries.insert(key, value).is_some() {
                errs.push(FieldError::new(key, "given more than once"));
            }
        }

        let mut cfg = RunConfig::new([0; 3], f64::NAN, 0);
        for key in ["dims", "spacing_lambda", "excitations"] {
            if !entries.contains_key(key) {
                errs.push(FieldError::new(key, "required"));
            }
        }
        for (&key, &value) in &entries {
            let parsed: std::result::Result<(), String> = (|| {
                match key {
                    "dims" => {
                        let v = parse_list::<usize>(value, 3)?;
                        cfg.dims = [v[0], v[1], v[2]];
                    }
                    "spacing_lambda" => cfg.spacing_lambda = parse_scalar(value)?,
                    "excitations" => cfg.excitations = parse_scalar(value)?,
                    "imprint_index" => cfg.imprint_index = Some(parse_scalar(value)?),
                    "d_hat" | "k_hat" => {
                        let v = parse_list::<f64>(value, 3)?;
                        let v = [v[0], v[1], v[2]];
                        if key == "d_hat" {
                            cfg.d_hat = v;
                        } else {
                            cfg.k_hat = v;
                        }
                    }
                    "t_max_gamma" => cfg.t_max_gamma = parse_scalar(value)?,
                    "n_time_points" => cfg.n_time_points = parse_scalar(value)?,
                    "fit_window" => {
                        let v = parse_list::<f64>(value, 2)?;
                        cfg.fit_window = Some(FitWindow::new(v[0], v[1]));
                    }
                    "fit_mode" => cfg.fit_mode = value.parse()?,
                    "evolution_path" => cfg.evolution_path = value.parse()?,
                    "krylov_dim" => cfg.krylov_dim = parse_scalar(value)?,
                    "output_dir" => {
                        if value.is_empty() {
                            return Err("must not be empty".into());
                        }
                        cfg.output_dir = Some(PathBuf::from(value));
                    }
                    "dim_cap" => cfg.dim_cap = parse_scalar(value)?,
                    _ => unreachable!("key list checked above"),
                }
                Ok(())
            })();
            if let Err(msg) = parsed {
                errs.push(FieldError::new(key, msg));
            }
        }
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
