use faer::Mat;
use serde::{Deserialize, Serialize};

use super::interaction::{ChargeSpec, Interaction};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::operator::{embed, embed_sum, Boundary, ChainConfig, GlobalOperator, LocalOperator, SparseOperator};

/// Largest window used by [`check_conservation`].
pub const CONSERVATION_MAX_WINDOW: usize = 8;

/// Closed lattice interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::EmptyWindow);
        }
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sites(&self) -> Vec<i64> {
        (self.lo..=self.hi).collect()
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Checks that the interval maps onto distinct chain sites: inside
    /// `[0, n)` for open chains, an arc no longer than the chain otherwise.
    pub fn check_fits(&self, chain: &ChainConfig) -> Result<()> {
        match chain.boundary() {
            Boundary::Open => {
                chain.wrap(self.lo)?;
                chain.wrap(self.hi)?;
            }
            Boundary::Periodic => {
                if self.len() > chain.n_sites() {
                    return Err(Error::Geometry(format!(
                        "window [{}, {}] is longer than the chain of {}",
                        self.lo,
                        self.hi,
                        chain.n_sites()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn sum_on(support: Vec<i64>, site_dim: usize, ops: &[LocalOperator]) -> Result<LocalOperator> {
    let dim = site_dim.pow(support.len() as u32);
    let mut acc = linalg::zeros(dim, dim);
    for op in ops {
        acc += op.extend_to(&support)?.coeffs();
    }
    LocalOperator::new(support, site_dim, acc)
}

/// `H_Lambda = sum_{X ⊂ Lambda} Phi(X)` as a local operator on every site of
/// the window.
pub fn window_hamiltonian(phi: &Interaction, w: Interval) -> Result<LocalOperator> {
    sum_on(w.sites(), phi.site_dim(), &phi.terms_within(w.lo, w.hi))
}

/// `N_Lambda = sum_{x in Lambda} n_x` as a local operator on the window.
pub fn window_charge(spec: &ChargeSpec, w: Interval) -> Result<LocalOperator> {
    let ops: Vec<_> = w.sites().into_iter().map(|x| spec.at(x)).collect();
    sum_on(w.sites(), spec.site_dim(), &ops)
}

/// `H_Lambda` embedded in the chain.
pub fn local_hamiltonian(phi: &Interaction, w: Interval, chain: &ChainConfig) -> Result<GlobalOperator> {
    w.check_fits(chain)?;
    check_site_dim(phi.site_dim(), chain)?;
    embed(&window_hamiltonian(phi, w)?, chain)
}

/// `N_Lambda` embedded in the chain.
pub fn charge_operator(spec: &ChargeSpec, w: Interval, chain: &ChainConfig) -> Result<GlobalOperator> {
    w.check_fits(chain)?;
    check_site_dim(spec.site_dim(), chain)?;
    embed(&window_charge(spec, w)?, chain)
}

fn check_site_dim(d: usize, chain: &ChainConfig) -> Result<()> {
    if d != chain.site_dim() {
        return Err(Error::DimensionMismatch {
            expected: chain.site_dim(),
            found: d,
        });
    }
    Ok(())
}

/// Terms of the chain Hamiltonian: all translates on a periodic chain
/// (wrapping around), all terms inside `[0, n)` on an open chain.
pub fn chain_terms(phi: &Interaction, chain: &ChainConfig) -> Result<Vec<LocalOperator>> {
    check_site_dim(phi.site_dim(), chain)?;
    let n = chain.n_sites() as i64;
    match chain.boundary() {
        Boundary::Open => Ok(phi.terms_within(0, n - 1)),
        Boundary::Periodic => {
            if phi.range() as i64 >= n {
                return Err(Error::Geometry(format!(
                    "range {} does not fit on a ring of {n} sites",
                    phi.range()
                )));
            }
            let mut out = Vec::new();
            for t in phi.terms() {
                for x in 0..n {
                    let op = t.at(x, phi.site_dim());
                    let wrapped: Vec<i64> = op.support().iter().map(|s| s.rem_euclid(n)).collect();
                    out.push(LocalOperator::from_unsorted(wrapped, phi.site_dim(), op.into_coeffs())?);
                }
            }
            Ok(out)
        }
    }
}

/// Chain Hamiltonian in sparse form.
pub fn chain_hamiltonian(phi: &Interaction, chain: &ChainConfig) -> Result<SparseOperator> {
    embed_sum(&chain_terms(phi, chain)?, chain)
}

/// Total charge `N_chain` in sparse form.
pub fn chain_charge(spec: &ChargeSpec, chain: &ChainConfig) -> Result<SparseOperator> {
    check_site_dim(spec.site_dim(), chain)?;
    let ops: Vec<_> = (0..chain.n_sites() as i64).map(|x| spec.at(x)).collect();
    embed_sum(&ops, chain)
}

/// Max over windows `[0, len)`, `1 <= len <= min(n_sites, 8)`, of
/// `||[N_Lambda, H_Lambda]||`. By translation invariance the window position
/// is immaterial.
pub fn check_conservation(phi: &Interaction, spec: &ChargeSpec, chain: &ChainConfig) -> Result<f64> {
    check_site_dim(phi.site_dim(), chain)?;
    check_site_dim(spec.site_dim(), chain)?;
    let mut worst: f64 = 0.0;
    for len in 1..=chain.n_sites().min(CONSERVATION_MAX_WINDOW) {
        let w = Interval::new(0, len as i64 - 1)?;
        let h = window_hamiltonian(phi, w)?;
        let n = window_charge(spec, w)?;
        worst = worst.max(n.commutator(&h)?.norm()?);
    }
    Ok(worst)
}

/// Max over canonical terms of `||U Phi(X) U^† - Phi(X)||` with
/// `U = exp(i theta N)` restricted to `X`.
pub fn symmetry_residual(phi: &Interaction, spec: &ChargeSpec, theta: f64) -> Result<f64> {
    let (vals, vecs) = linalg::eigh(spec.n0().as_ref())?;
    let d = spec.site_dim();
    let phase = Mat::from_fn(d, d, |i, j| if i == j { C64::from_polar(1.0, theta * vals[i]) } else { C64::new(0.0, 0.0) });
    let u1 = linalg::matmul(linalg::matmul(vecs.as_ref(), phase.as_ref()).as_ref(), linalg::adjoint(vecs.as_ref()).as_ref());
    let mut worst: f64 = 0.0;
    for t in phi.terms() {
        let mut u = Mat::from_fn(1, 1, |_, _| C64::new(1.0, 0.0));
        for _ in t.offsets() {
            u = linalg::kron(u1.as_ref(), u.as_ref());
        }
        let conj = linalg::matmul(linalg::matmul(u.as_ref(), t.matrix().as_ref()).as_ref(), linalg::adjoint(u.as_ref()).as_ref());
        worst = worst.max(linalg::operator_norm((conj - t.matrix()).as_ref())?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_xxz_model;

    #[test]
    fn single_site_window_of_xx_is_zero() {
        let (phi, _) = build_xxz_model(0.0).unwrap();
        let h = window_hamiltonian(&phi, Interval::new(0, 0).unwrap()).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn charge_spectrum_on_full_chain() {
        let (_, spec) = build_xxz_model(0.3).unwrap();
        let chain = ChainConfig::periodic(6, 2).unwrap();
        let n = charge_operator(&spec, Interval::new(0, 5).unwrap(), &chain).unwrap();
        let vals = linalg::eigvalsh(n.mat().as_ref()).unwrap();
        for v in vals {
            let twice = 2.0 * v;
            assert!((twice - twice.round()).abs() < 1e-12 && twice.abs() <= 6.0 + 1e-12);
        }
    }

    #[test]
    fn window_fit() {
        let chain = ChainConfig::open(4, 2).unwrap();
        assert!(Interval::new(0, 4).unwrap().check_fits(&chain).is_err());
        assert!(Interval::new(-1, 2).unwrap().check_fits(&chain).is_err());
        assert!(Interval::new(1, 0).is_err());
        let ring = ChainConfig::periodic(4, 2).unwrap();
        assert!(Interval::new(-2, 1).unwrap().check_fits(&ring).is_ok());
        assert!(Interval::new(-2, 2).unwrap().check_fits(&ring).is_err());
    }
}
