use std::collections::{BTreeMap, BTreeSet};

use faer::Mat;

use super::joint::JointBasis;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Operator in the eigenframe of a [`JointBasis`], stored as dense blocks
/// between the sectors it connects. Missing blocks are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenOperator {
    offsets: Vec<usize>,
    dim: usize,
    blocks: BTreeMap<(usize, usize), Mat<C64>>,
}

impl EigenOperator {
    pub(crate) fn new(offsets: Vec<usize>, dim: usize, blocks: BTreeMap<(usize, usize), Mat<C64>>) -> Self {
        Self { offsets, dim, blocks }
    }

    pub fn zeros(basis: &JointBasis) -> Self {
        Self::new(basis.sector_offsets(), basis.dim(), BTreeMap::new())
    }

    pub fn identity(basis: &JointBasis) -> Self {
        let mut out = Self::zeros(basis);
        out.add_diagonal(C64::new(1.0, 0.0));
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn offset(&self, s: usize) -> usize {
        self.offsets[s]
    }

    fn size(&self, s: usize) -> usize {
        self.offsets.get(s + 1).copied().unwrap_or(self.dim) - self.offsets[s]
    }

    fn locate(&self, n: usize) -> (usize, usize) {
        let s = self.offsets.partition_point(|&o| o <= n) - 1;
        (s, n - self.offsets[s])
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&(usize, usize), &Mat<C64>)> {
        self.blocks.iter()
    }

    pub fn block(&self, s: usize, t: usize) -> Option<&Mat<C64>> {
        self.blocks.get(&(s, t))
    }

    pub fn get(&self, n: usize, m: usize) -> C64 {
        let (s, i) = self.locate(n);
        let (t, j) = self.locate(m);
        self.blocks.get(&(s, t)).map_or(C64::new(0.0, 0.0), |b| b[(i, j)])
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.offsets != other.offsets || self.dim != other.dim {
            return Err(Error::Precondition("eigen operators belong to different bases".into()));
        }
        Ok(())
    }

    pub fn scale(&self, c: C64) -> Self {
        let blocks = self.blocks.iter().map(|(k, b)| (*k, b * faer::Scale(c))).collect();
        Self::new(self.offsets.clone(), self.dim, blocks)
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        self.check(other)?;
        let mut blocks = self.blocks.clone();
        for (k, b) in &other.blocks {
            let scaled = b * faer::Scale(C64::new(sign, 0.0));
            match blocks.get_mut(k) {
                Some(acc) => *acc += &scaled,
                None => {
                    blocks.insert(*k, scaled);
                }
            }
        }
        Ok(Self::new(self.offsets.clone(), self.dim, blocks))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    /// Adds `c * 1`.
    pub fn add_diagonal(&mut self, c: C64) {
        for s in 0..self.offsets.len() {
            let size = self.size(s);
            let block = self.blocks.entry((s, s)).or_insert_with(|| linalg::zeros(size, size));
            for i in 0..size {
                block[(i, i)] += c;
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let blocks = self
            .blocks
            .iter()
            .map(|((s, t), b)| ((*t, *s), linalg::adjoint(b.as_ref())))
            .collect();
        Self::new(self.offsets.clone(), self.dim, blocks)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut blocks: BTreeMap<(usize, usize), Mat<C64>> = BTreeMap::new();
        for ((s, t), a) in &self.blocks {
            for ((t2, u), b) in other.blocks.range((*t, 0)..=(*t, usize::MAX)) {
                debug_assert_eq!(t, t2);
                let p = linalg::matmul(a.as_ref(), b.as_ref());
                match blocks.get_mut(&(*s, *u)) {
                    Some(acc) => *acc += &p,
                    None => {
                        blocks.insert((*s, *u), p);
                    }
                }
            }
        }
        Ok(Self::new(self.offsets.clone(), self.dim, blocks))
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Entrywise product with `f(n, m)` over the stored blocks.
    pub fn scale_entries(&self, phase: impl Fn(usize, usize) -> C64) -> Self {
        let mut blocks = self.blocks.clone();
        for ((s, t), b) in blocks.iter_mut() {
            let (os, ot) = (self.offsets[*s], self.offsets[*t]);
            for j in 0..b.ncols() {
                for i in 0..b.nrows() {
                    b[(i, j)] *= phase(os + i, ot + j);
                }
            }
        }
        Self::new(self.offsets.clone(), self.dim, blocks)
    }

    /// Heisenberg evolution `e^{iHt} A e^{-iHt}`:
    /// entries pick up `e^{i (E_n - E_m) t}`.
    pub fn evolve(&self, basis: &JointBasis, t: f64) -> Self {
        let l = basis.labels();
        self.scale_entries(|n, m| C64::from_polar(1.0, (l[n].energy - l[m].energy) * t))
    }

    /// Translation `tau_y(A) = T^y A T^{-y}`: entries pick up
    /// `e^{i (k_m - k_n) y}`.
    pub fn translate(&self, basis: &JointBasis, y: i64) -> Result<Self> {
        if !basis.has_translation() {
            return Err(Error::NotPeriodic);
        }
        let l = basis.labels();
        let n = basis.n_mom() as i64;
        let table: Vec<C64> = (0..n)
            .map(|m| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / n as f64))
            .collect();
        Ok(self.scale_entries(|a, b| {
            let dq = (l[b].q as i64 - l[a].q as i64) * y;
            table[dq.rem_euclid(n) as usize]
        }))
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.values().map(|b| linalg::max_abs(b.as_ref())).fold(0.0, f64::max)
    }

    /// `sum_n p_n <n|A|n>`.
    pub fn weighted_trace(&self, probs: &[f64]) -> Result<C64> {
        if probs.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: probs.len() });
        }
        let mut terms = Vec::with_capacity(self.dim);
        for ((s, t), b) in &self.blocks {
            if s != t {
                continue;
            }
            let o = self.offsets[*s];
            for i in 0..b.nrows() {
                terms.push(b[(i, i)] * probs[o + i]);
            }
        }
        Ok(linalg::pairwise_sum_c(&terms))
    }

    /// Operator norm, computed per connected group of sectors.
    pub fn norm(&self) -> Result<f64> {
        let n_sec = self.offsets.len();
        let mut parent: Vec<usize> = (0..n_sec).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (s, t) in self.blocks.keys() {
            let (a, b) = (find(&mut parent, *s), find(&mut parent, *t));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (s, t) in self.blocks.keys() {
            let root = find(&mut parent, *s);
            let g = groups.entry(root).or_default();
            g.insert(*s);
            g.insert(*t);
        }
        let mut worst: f64 = 0.0;
        for members in groups.values() {
            let members: Vec<usize> = members.iter().copied().collect();
            let mut local = BTreeMap::new();
            let mut total = 0;
            for &s in &members {
                local.insert(s, total);
                total += self.size(s);
            }
            let mut dense = linalg::zeros(total, total);
            for ((s, t), b) in &self.blocks {
                if let (Some(&r), Some(&c)) = (local.get(s), local.get(t)) {
                    dense.as_mut().submatrix_mut(r, c, b.nrows(), b.ncols()).copy_from(b.as_ref());
                }
            }
            worst = worst.max(linalg::operator_norm(dense.as_ref())?);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_xx_model, chain_hamiltonian, spin_half};
    use crate::operator::{embed_sparse, ChainConfig, LocalOperator};

    fn setup(n: usize) -> (ChainConfig, JointBasis) {
        let chain = ChainConfig::periodic(n, 2).unwrap();
        let (phi, _) = build_xx_model().unwrap();
        let h = chain_hamiltonian(&phi, &chain).unwrap();
        let basis = JointBasis::build(&chain, &h, None).unwrap();
        (chain, basis)
    }

    fn site_op(chain: &ChainConfig, basis: &JointBasis, site: i64, which: usize) -> EigenOperator {
        let s = spin_half();
        let op = LocalOperator::single_site(site, s[which].clone()).unwrap();
        basis.transform(&embed_sparse(&op, chain).unwrap()).unwrap()
    }

    #[test]
    fn translation_by_phases() {
        let (chain, basis) = setup(6);
        let a0 = site_op(&chain, &basis, 0, 0);
        for y in [1, 2, -1, 5] {
            let direct = site_op(&chain, &basis, y, 0);
            let phased = a0.translate(&basis, y).unwrap();
            assert!(direct.sub(&phased).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_commutator_norm() {
        let (chain, basis) = setup(5);
        let x = site_op(&chain, &basis, 2, 0);
        let y = site_op(&chain, &basis, 2, 1);
        // [S1, S2] = i S3, norm 1/2
        let c = x.commutator(&y).unwrap();
        assert!((c.norm().unwrap() - 0.5).abs() < 1e-12);
        let z = site_op(&chain, &basis, 3, 2);
        assert!(x.commutator(&z).unwrap().norm().unwrap() < 1e-12);
    }

    #[test]
    fn evolution_group_and_norm() {
        let (chain, basis) = setup(6);
        let a = site_op(&chain, &basis, 0, 0);
        let two = a.evolve(&basis, 0.3).evolve(&basis, 0.7);
        let one = a.evolve(&basis, 1.0);
        assert!(two.sub(&one).unwrap().max_abs() < 1e-12);
        assert!((one.norm().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identity_trace() {
        let (_, basis) = setup(4);
        let id = EigenOperator::identity(&basis);
        let p = vec![1.0 / 16.0; 16];
        assert!((id.weighted_trace(&p).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
