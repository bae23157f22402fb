use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the total Hilbert-space dimension `site_dim^n_sites`.
pub const DEFAULT_DIM_CAP: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

/// A finite chain of `n_sites` sites, each carrying a `site_dim`-dimensional
/// Hilbert space.
///
/// Basis states are indexed little-endian in the site index: site 0 is the
/// fastest-varying digit of the composite index, so the basis index of a
/// product state is `sum_s digit_s * site_dim^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawChain", into = "RawChain")]
pub struct ChainConfig {
    n_sites: usize,
    site_dim: usize,
    boundary: Boundary,
    dim_cap: usize,
}

#[derive(Serialize, Deserialize)]
struct RawChain {
    n_sites: usize,
    site_dim: usize,
    boundary: Boundary,
    #[serde(default = "default_cap")]
    dim_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}

impl TryFrom<RawChain> for ChainConfig {
    type Error = Error;
    fn try_from(raw: RawChain) -> Result<Self> {
        ChainConfig::with_cap(raw.n_sites, raw.site_dim, raw.boundary, raw.dim_cap)
    }
}

impl From<ChainConfig> for RawChain {
    fn from(c: ChainConfig) -> Self {
        RawChain {
            n_sites: c.n_sites,
            site_dim: c.site_dim,
            boundary: c.boundary,
            dim_cap: c.dim_cap,
        }
    }
}

impl ChainConfig {
    pub fn new(n_sites: usize, site_dim: usize, boundary: Boundary) -> Result<Self> {
        Self::with_cap(n_sites, site_dim, boundary, DEFAULT_DIM_CAP)
    }

    pub fn periodic(n_sites: usize, site_dim: usize) -> Result<Self> {
        Self::new(n_sites, site_dim, Boundary::Periodic)
    }

    pub fn open(n_sites: usize, site_dim: usize) -> Result<Self> {
        Self::new(n_sites, site_dim, Boundary::Open)
    }

    pub fn with_cap(
        n_sites: usize,
        site_dim: usize,
        boundary: Boundary,
        dim_cap: usize,
    ) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidChain(format!("n_sites = {n_sites} < 2")));
        }
        if site_dim < 2 {
            return Err(Error::InvalidChain(format!("site_dim = {site_dim} < 2")));
        }
        let dim = checked_pow(site_dim, n_sites);
        if dim > dim_cap as u128 {
            return Err(Error::DimensionCap { dim, cap: dim_cap });
        }
        Ok(Self {
            n_sites,
            site_dim,
            boundary,
            dim_cap,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.site_dim.pow(self.n_sites as u32)
    }

    /// Stride of a site in the composite basis index.
    pub fn stride(&self, site: usize) -> usize {
        self.site_dim.pow(site as u32)
    }

    /// Local basis digit of `site` in basis state `index`.
    pub fn digit(&self, index: usize, site: usize) -> usize {
        (index / self.stride(site)) % self.site_dim
    }

    /// Maps a lattice coordinate onto a chain site. Periodic chains wrap,
    /// open chains reject coordinates outside `[0, n_sites)`.
    pub fn wrap(&self, site: i64) -> Result<usize> {
        let n = self.n_sites as i64;
        match self.boundary {
            Boundary::Periodic => Ok(site.rem_euclid(n) as usize),
            Boundary::Open => {
                if (0..n).contains(&site) {
                    Ok(site as usize)
                } else {
                    Err(Error::SiteOutOfRange {
                        site,
                        n_sites: self.n_sites,
                    })
                }
            }
        }
    }

    /// Maps a set of lattice coordinates onto distinct chain sites.
    pub fn place(&self, sites: &[i64]) -> Result<Vec<usize>> {
        let mapped = sites
            .iter()
            .map(|&s| self.wrap(s))
            .collect::<Result<Vec<_>>>()?;
        let mut sorted = mapped.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != mapped.len() {
            return Err(Error::InvalidSupport(format!(
                "sites {sites:?} overlap after wrapping onto a chain of {}",
                self.n_sites
            )));
        }
        Ok(mapped)
    }

    /// Permutation of basis indices implementing the unit shift `T`, which
    /// moves the content of site `s` to site `s + 1` (mod `n_sites`):
    /// `T |i> = |perm[i]>`.
    pub fn shift_permutation(&self) -> Vec<usize> {
        let d = self.site_dim;
        let n = self.n_sites;
        let top = self.stride(n - 1);
        (0..self.dim())
            .map(|i| {
                let last = i / top;
                (i % top) * d + last
            })
            .collect()
    }
}

fn checked_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}
