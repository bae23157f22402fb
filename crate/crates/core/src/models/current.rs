use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::interaction::{ChargeSpec, Interaction};
use super::windows::Interval;
use crate::error::{Error, Result};
use crate::linalg::{self, C64, I};
use crate::operator::{ChainConfig, LocalOperator};

/// Entrywise tolerance below which accumulated commutator terms count as zero.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Charge window `[-L, 0]` and Hamiltonian window `[-M, M]`.
///
/// Requires `L > M >= 2r` and `L - M >= 2r`, so that the two window
/// boundaries are separated by more than the interaction range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct CurrentGeometry {
    l: usize,
    m: usize,
    range: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGeometry {
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "M")]
    m: usize,
    range: usize,
}

impl TryFrom<RawGeometry> for CurrentGeometry {
    type Error = Error;
    fn try_from(raw: RawGeometry) -> Result<Self> {
        CurrentGeometry::new(raw.l, raw.m, raw.range)
    }
}

impl From<CurrentGeometry> for RawGeometry {
    fn from(g: CurrentGeometry) -> Self {
        RawGeometry {
            l: g.l,
            m: g.m,
            range: g.range,
        }
    }
}

impl CurrentGeometry {
    pub fn new(l: usize, m: usize, range: usize) -> Result<Self> {
        if range < 1 {
            return Err(Error::Geometry("range must be at least 1".into()));
        }
        if m < 2 * range {
            return Err(Error::Geometry(format!("M = {m} < 2r = {}", 2 * range)));
        }
        if l < m + 2 * range {
            return Err(Error::Geometry(format!(
                "L - M = {} < 2r = {}",
                l as i64 - m as i64,
                2 * range
            )));
        }
        Ok(Self { l, m, range })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn charge_window(&self) -> Interval {
        Interval {
            lo: -(self.l as i64),
            hi: 0,
        }
    }

    pub fn hamiltonian_window(&self) -> Interval {
        Interval {
            lo: -(self.m as i64),
            hi: self.m as i64,
        }
    }

    /// Number of chain sites needed so that `[-L, M + r]` does not wrap.
    pub fn required_sites(&self) -> usize {
        self.l + self.m + self.range + 1
    }

    pub fn check_chain(&self, chain: &ChainConfig) -> Result<()> {
        if chain.n_sites() < self.required_sites() {
            return Err(Error::Geometry(format!(
                "windows [-{}, {}] need {} sites, chain has {}",
                self.l,
                self.m + self.range,
                self.required_sites(),
                chain.n_sites()
            )));
        }
        Ok(())
    }
}

/// Accumulates local terms grouped by their span `(min, max)`; groups whose
/// sum vanishes are dropped before the remaining ones are added up.
#[derive(Default)]
struct SpanAccumulator {
    groups: BTreeMap<(i64, i64), LocalOperator>,
}

impl SpanAccumulator {
    fn push(&mut self, op: LocalOperator) -> Result<()> {
        let (lo, hi) = match (op.support().first(), op.support().last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Ok(()),
        };
        let sites: Vec<i64> = (lo..=hi).collect();
        let ext = op.extend_to(&sites)?;
        match self.groups.get_mut(&(lo, hi)) {
            Some(acc) => *acc = acc.add(&ext)?,
            None => {
                self.groups.insert((lo, hi), ext);
            }
        }
        Ok(())
    }

    fn finish(self, site_dim: usize) -> Result<LocalOperator> {
        let kept: Vec<LocalOperator> = self
            .groups
            .into_values()
            .filter(|g| g.max_abs() > SUPPORT_TOL)
            .collect();
        if kept.is_empty() {
            return Ok(LocalOperator::zero(site_dim));
        }
        let mut support: Vec<i64> = kept.iter().flat_map(|g| g.support().iter().copied()).collect();
        support.sort_unstable();
        support.dedup();
        let dim = site_dim.pow(support.len() as u32);
        let mut acc = linalg::zeros(dim, dim);
        for g in &kept {
            acc += g.extend_to(&support)?.coeffs();
        }
        LocalOperator::new(support, site_dim, acc)?.reduce_support(SUPPORT_TOL)
    }
}

fn check_model(phi: &Interaction, spec: &ChargeSpec, geom: &CurrentGeometry) -> Result<()> {
    if phi.site_dim() != spec.site_dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.site_dim(),
            found: spec.site_dim(),
        });
    }
    if phi.range() != geom.range() {
        return Err(Error::Geometry(format!(
            "geometry built for range {}, interaction has range {}",
            geom.range(),
            phi.range()
        )));
    }
    Ok(())
}

/// `j_0 = i [N_{[-L,0]}, H_{[-M,M]}]`, evaluated term by term and reduced to
/// its true support.
pub fn current_operator(
    phi: &Interaction,
    spec: &ChargeSpec,
    geom: &CurrentGeometry,
    chain: &ChainConfig,
) -> Result<LocalOperator> {
    geom.check_chain(chain)?;
    current_in_windows(phi, spec, geom)
}

/// The local current `j_0` of the smallest admissible geometry
/// (`M = 2r`, `L = 4r`); it does not depend on the geometry.
pub fn canonical_current(phi: &Interaction, spec: &ChargeSpec) -> Result<LocalOperator> {
    let r = phi.range();
    current_in_windows(phi, spec, &CurrentGeometry::new(4 * r, 2 * r, r)?)
}

fn current_in_windows(phi: &Interaction, spec: &ChargeSpec, geom: &CurrentGeometry) -> Result<LocalOperator> {
    check_model(phi, spec, geom)?;
    let nw = geom.charge_window();
    let hw = geom.hamiltonian_window();
    let mut acc = SpanAccumulator::default();
    for term in phi.terms_within(hw.lo, hw.hi) {
        let inside: Vec<i64> = term.support().iter().copied().filter(|&x| nw.contains(x)).collect();
        if inside.is_empty() {
            continue;
        }
        let mut n_part = LocalOperator::zero(spec.site_dim());
        for x in inside {
            n_part = n_part.add(&spec.at(x))?;
        }
        acc.push(n_part.commutator(&term)?.scale(I))?;
    }
    acc.finish(phi.site_dim())
}

/// Boundary pieces of `i [H_{[-M,M]}, H_{[-M-r, M+r]}] = J_+ - J_-`.
#[derive(Debug, Clone)]
pub struct EnergyCurrents {
    pub j_plus: LocalOperator,
    pub j_minus: LocalOperator,
    pub m: usize,
}

/// Splits `i [H_{[-M,M]}, H_{[-M-r,M+r]}]` by the boundary each commutator
/// term straddles: terms leaving through the right edge form `J_+`, those
/// through the left edge form `-J_-`.
pub fn energy_current_operators(phi: &Interaction, m: usize, chain: &ChainConfig) -> Result<EnergyCurrents> {
    let r = phi.range() as i64;
    let mi = m as i64;
    if mi < 2 * r {
        return Err(Error::Geometry(format!("M = {m} < 2r = {}", 2 * r)));
    }
    let need = 2 * m + 2 * phi.range() + 1;
    if chain.n_sites() < need {
        return Err(Error::Geometry(format!(
            "energy-current window needs {need} sites, chain has {}",
            chain.n_sites()
        )));
    }
    let inner = Interval::new(-mi, mi)?;
    let inner_terms = phi.terms_within(inner.lo, inner.hi);
    let mut right = SpanAccumulator::default();
    let mut left = SpanAccumulator::default();
    for y in phi.terms_within(-mi - r, mi + r) {
        let s = y.support();
        let (lo, hi) = (s[0], s[s.len() - 1]);
        if inner.contains(lo) && inner.contains(hi) {
            continue;
        }
        let target = if hi > mi { &mut right } else { &mut left };
        for x in &inner_terms {
            if x.support().iter().any(|p| s.contains(p)) {
                target.push(x.commutator(&y)?.scale(I))?;
            }
        }
    }
    let j_plus = right.finish(phi.site_dim())?;
    let j_minus = left.finish(phi.site_dim())?.scale(C64::new(-1.0, 0.0));
    let plus_zone = Interval::new(mi - 2 * r + 1, mi + r)?;
    let minus_zone = Interval::new(-mi - r, -mi + 2 * r - 1)?;
    if !j_plus.support().iter().all(|&x| plus_zone.contains(x))
        || !j_minus.support().iter().all(|&x| minus_zone.contains(x))
    {
        return Err(Error::Geometry(format!(
            "energy-current pieces left their boundary zones: J+ on {:?}, J- on {:?}",
            j_plus.support(),
            j_minus.support()
        )));
    }
    Ok(EnergyCurrents { j_plus, j_minus, m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_fermion_model, build_xxz_model, spin_half};

    #[test]
    fn geometry_constraints() {
        assert!(CurrentGeometry::new(7, 3, 1).is_ok());
        assert!(CurrentGeometry::new(4, 2, 1).is_ok());
        assert!(CurrentGeometry::new(4, 1, 1).is_err());
        assert!(CurrentGeometry::new(5, 4, 1).is_err());
        let g = CurrentGeometry::new(7, 3, 1).unwrap();
        assert!(g.check_chain(&ChainConfig::periodic(12, 2).unwrap()).is_ok());
        assert!(g.check_chain(&ChainConfig::periodic(11, 2).unwrap()).is_err());
    }

    #[test]
    fn xx_current_closed_form() {
        let (phi, spec) = build_xxz_model(0.0).unwrap();
        let chain = ChainConfig::periodic(12, 2).unwrap();
        let g = CurrentGeometry::new(7, 3, 1).unwrap();
        let j = current_operator(&phi, &spec, &g, &chain).unwrap();
        let [s1, s2, _] = spin_half();
        let a = LocalOperator::single_site(0, s2.clone()).unwrap().mul(&LocalOperator::single_site(1, s1.clone()).unwrap()).unwrap();
        let b = LocalOperator::single_site(0, s1).unwrap().mul(&LocalOperator::single_site(1, s2).unwrap()).unwrap();
        let expect = b.sub(&a).unwrap();
        assert_eq!(j.support(), &[0, 1]);
        assert!(j.max_abs_diff(&expect).unwrap() < 1e-14);
    }

    #[test]
    fn fermion_current_is_local() {
        let (phi, spec) = build_fermion_model(1.0, &[0.5]).unwrap();
        let chain = ChainConfig::periodic(12, 2).unwrap();
        let g = CurrentGeometry::new(7, 3, 1).unwrap();
        let j = current_operator(&phi, &spec, &g, &chain).unwrap();
        assert_eq!(j.support(), &[0, 1]);
        assert!(j.is_hermitian());
        let c = canonical_current(&phi, &spec).unwrap();
        assert!(c.max_abs_diff(&j).unwrap() < 1e-14);
    }

    #[test]
    fn energy_current_zones() {
        let (phi, _) = build_xxz_model(0.7).unwrap();
        let chain = ChainConfig::periodic(12, 2).unwrap();
        let e = energy_current_operators(&phi, 3, &chain).unwrap();
        assert_eq!(e.j_plus.support(), &[2, 3, 4]);
        assert_eq!(e.j_minus.support(), &[-4, -3, -2]);
    }
}
