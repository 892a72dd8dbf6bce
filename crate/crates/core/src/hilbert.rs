//! M-excitation configuration space of N two-level atoms.
//!
//! A configuration is the strictly increasing tuple of excited sites
//! (1-based). Configurations are ordered lexicographically: the last site
//! increments first and carries into earlier ones, so for N = 4, M = 3 the
//! order is (1,2,3), (1,2,4), (1,3,4), (2,3,4). The position in this order
//! (1-based) is the bare-state label used by every matrix and vector in the
//! crate.

use std::fmt;

use crate::error::{Error, Result};

/// Default upper bound on C(N, M).
pub const DEFAULT_DIM_CAP: usize = 20_000;

/// Binomial coefficient, `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Excited sites of one bare state, strictly increasing and 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExcitationConfig {
    sites: Vec<usize>,
}

impl ExcitationConfig {
    /// Validates that the sites are strictly increasing and at least 1.
    pub fn new(sites: Vec<usize>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::domain("configuration must excite at least one site"));
        }
        if sites[0] == 0 {
            return Err(Error::domain("site indices are 1-based"));
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(format!(
                "sites must be strictly increasing, got {sites:?}"
            )));
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    /// Sum of the excited site labels; sets the imprinted phase step.
    pub fn phase_index(&self) -> usize {
        self.sites.iter().sum()
    }
}

impl fmt::Display for ExcitationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.sites.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Free-function form of [`ExcitationConfig::phase_index`].
pub fn phase_index(cfg: &ExcitationConfig) -> usize {
    cfg.phase_index()
}

/// Compares two configurations of the same space.
///
/// Returns `(s1, s2)` when they differ by exactly one site, with `s1` excited
/// only in `cfg_n` and `s2` excited only in `cfg_m`; otherwise `(0, 0)`.
pub fn sort_pair(cfg_n: &ExcitationConfig, cfg_m: &ExcitationConfig) -> Result<(usize, usize)> {
    if cfg_n.len() != cfg_m.len() {
        return Err(Error::domain(format!(
            "configurations {cfg_n} and {cfg_m} have different excitation counts"
        )));
    }
    if cfg_n == cfg_m {
        return Err(Error::domain(format!(
            "sort_pair called on identical configurations {cfg_n}"
        )));
    }
    let (a, b) = (cfg_n.sites(), cfg_m.sites());
    let (mut i, mut j) = (0, 0);
    let mut only_n = None;
    let mut only_m = None;
    let mut diffs = 0usize;
    while i < a.len() || j < b.len() {
        let next_a = a.get(i).copied();
        let next_b = b.get(j).copied();
        match (next_a, next_b) {
            (Some(x), Some(y)) if x == y => {
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                only_n = Some(x);
                diffs += 1;
                i += 1;
            }
            (Some(x), None) => {
                only_n = Some(x);
                diffs += 1;
                i += 1;
            }
            (_, Some(y)) => {
                only_m = Some(y);
                diffs += 1;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
        if diffs > 2 {
            return Ok((0, 0));
        }
    }
    match (only_n, only_m) {
        (Some(s1), Some(s2)) if diffs == 2 => Ok((s1, s2)),
        _ => Ok((0, 0)),
    }
}

/// The C(N, M)-dimensional space of M excitations among N atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    n_atoms: usize,
    n_excitations: usize,
    dim: usize,
    // pascal[n][k] = C(n, k) for n <= N, k <= M
    pascal: Vec<Vec<usize>>,
}

impl HilbertSpace {
    pub fn new(n_atoms: usize, n_excitations: usize) -> Result<Self> {
        Self::with_cap(n_atoms, n_excitations, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(n_atoms: usize, n_excitations: usize, cap: usize) -> Result<Self> {
        if n_excitations < 1 {
            return Err(Error::InvalidDimension(format!(
                "excitation count M = {n_excitations} must be at least 1"
            )));
        }
        if n_excitations > n_atoms {
            return Err(Error::InvalidDimension(format!(
                "excitation count M = {n_excitations} exceeds atom count N = {n_atoms}"
            )));
        }
        let dim = binomial(n_atoms, n_excitations).ok_or_else(|| {
            Error::InvalidDimension(format!("C({n_atoms}, {n_excitations}) overflows"))
        })?;
        if dim > cap {
            return Err(Error::InvalidDimension(format!(
                "C({n_atoms}, {n_excitations}) = {dim} exceeds the dimension cap {cap}"
            )));
        }
        let pascal = (0..=n_atoms)
            .map(|n| {
                (0..=n_excitations)
                    .map(|k| binomial(n, k).expect("bounded by C(N, M)"))
                    .collect()
            })
            .collect();
        Ok(Self {
            n_atoms,
            n_excitations,
            dim,
            pascal,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn choose(&self, n: usize, k: usize) -> usize {
        if k > n {
            0
        } else {
            self.pascal[n][k]
        }
    }

    /// Checks that `cfg` belongs to this space.
    pub fn validate(&self, cfg: &ExcitationConfig) -> Result<()> {
        if cfg.len() != self.n_excitations {
            return Err(Error::domain(format!(
                "configuration {cfg} has {} sites, space has M = {}",
                cfg.len(),
                self.n_excitations
            )));
        }
        if cfg.sites().last().is_some_and(|&s| s > self.n_atoms) {
            return Err(Error::domain(format!(
                "configuration {cfg} exceeds N = {}",
                self.n_atoms
            )));
        }
        Ok(())
    }

    /// All configurations in canonical order.
    pub fn enumerate(&self) -> Vec<ExcitationConfig> {
        self.iter().collect()
    }

    /// Lazily walks the configurations in canonical order.
    pub fn iter(&self) -> Configs {
        Configs {
            n_atoms: self.n_atoms,
            current: Some((1..=self.n_excitations).collect()),
        }
    }

    /// 1-based position of `cfg` in the canonical order, in O(M).
    pub fn rank(&self, cfg: &ExcitationConfig) -> Result<usize> {
        self.validate(cfg)?;
        Ok(self.rank_sites(cfg.sites()))
    }

    // Lexicographic rank via the combinatorial number system on the
    // reflected sites c_i = N - mu_i.
    pub(crate) fn rank_sites(&self, sites: &[usize]) -> usize {
        let m = self.n_excitations;
        let colex: usize = sites
            .iter()
            .enumerate()
            .map(|(i, &mu)| self.choose(self.n_atoms - mu, m - i))
            .sum();
        self.dim - colex
    }

    /// Configuration at 1-based position `rank`.
    pub fn unrank(&self, rank: usize) -> Result<ExcitationConfig> {
        if rank < 1 || rank > self.dim {
            return Err(Error::domain(format!(
                "rank {rank} outside [1, {}]",
                self.dim
            )));
        }
        let m = self.n_excitations;
        let mut remaining = self.dim - rank;
        let mut sites = Vec::with_capacity(m);
        let mut upper = self.n_atoms;
        for i in 0..m {
            let k = m - i;
            // largest c < upper with C(c, k) <= remaining
            let mut c = upper - 1;
            while self.choose(c, k) > remaining {
                c -= 1;
            }
            remaining -= self.choose(c, k);
            sites.push(self.n_atoms - c);
            upper = c;
        }
        Ok(ExcitationConfig { sites })
    }
}

/// Iterator over configurations in canonical order.
pub struct Configs {
    n_atoms: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for Configs {
    type Item = ExcitationConfig;

    fn next(&mut self) -> Option<ExcitationConfig> {
        let cur = self.current.take()?;
        let m = cur.len();
        let mut next = cur.clone();
        // rightmost position that can still increase: site i may reach N - M + i + 1
        let pos = (0..m).rev().find(|&i| next[i] < self.n_atoms - m + i + 1);
        if let Some(i) = pos {
            next[i] += 1;
            for j in i + 1..m {
                next[j] = next[j - 1] + 1;
            }
            self.current = Some(next);
        }
        Some(ExcitationConfig { sites: cur })
    }
}

/// Enumerates all M-excitation configurations of N atoms.
pub fn enumerate(n_atoms: usize, n_excitations: usize) -> Result<Vec<ExcitationConfig>> {
    Ok(HilbertSpace::new(n_atoms, n_excitations)?.enumerate())
}
