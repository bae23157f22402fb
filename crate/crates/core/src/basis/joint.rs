use std::f64::consts::PI;

use faer::Mat;

use super::partition::SectorPartition;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::operator::{ChainConfig, SparseOperator};

/// Tolerance on `[H, T]` and `[H, B]`, relative to `max(1, max|H|)`.
pub const COMMUTATION_TOL: f64 = 1e-10;

/// Relative gap below which neighbouring energies are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Labels of one joint eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenLabel {
    pub energy: f64,
    /// Momentum index `m` in `0..n_sites`; `k = 2 pi m / n_sites`.
    pub q: usize,
    /// `k` folded into `(-pi, pi]`.
    pub momentum: f64,
    /// Eigenvalue of the bias operator, `0` when none was given.
    pub bias: f64,
    pub sector: usize,
}

#[derive(Debug, Clone)]
struct Orbit {
    /// Sector-local positions `T^j r`, `j = 0..period`.
    members: Vec<usize>,
}

#[derive(Debug, Clone)]
struct MomentumBlock {
    q: usize,
    /// Offset of the block inside the sector's momentum (and eigen) frame.
    offset: usize,
    orbits: Vec<usize>,
    /// Columns are eigenvectors in the block's orbit-state coordinates.
    vectors: Mat<C64>,
}

#[derive(Debug, Clone)]
struct SectorBasis {
    states: Vec<usize>,
    orbits: Vec<Orbit>,
    orbit_of: Vec<usize>,
    shift_of: Vec<usize>,
    /// `coords[o * n_mom + q]`: momentum-frame coordinate of `v_{o,q}`.
    coords: Vec<usize>,
    blocks: Vec<MomentumBlock>,
    offset: usize,
}

impl SectorBasis {
    fn size(&self) -> usize {
        self.states.len()
    }
}

/// Joint eigenbasis of a Hamiltonian, the unit shift (periodic chains) and an
/// optional commuting bias operator.
///
/// Eigenvectors are grouped by sector, then by momentum index, then sorted by
/// energy; inside degenerate energy clusters the bias is diagonalized and the
/// vectors ordered by bias eigenvalue. Each vector's largest-modulus
/// component is made real and positive.
///
/// With translation, `T |n> = e^{-i k_n} |n>`, where `T` moves site `s` to
/// `s + 1`.
#[derive(Debug, Clone)]
pub struct JointBasis {
    chain: ChainConfig,
    n_mom: usize,
    partition: SectorPartition,
    sectors: Vec<SectorBasis>,
    labels: Vec<EigenLabel>,
    phases: Vec<C64>,
    bias_offdiag: f64,
    has_bias: bool,
}

fn tol_scale(op: &SparseOperator) -> f64 {
    op.max_abs().max(1.0)
}

impl JointBasis {
    /// Builds the basis. Translation is used when the chain is periodic.
    pub fn build(chain: &ChainConfig, h: &SparseOperator, bias: Option<&SparseOperator>) -> Result<Self> {
        faer::set_global_parallelism(faer::Par::Seq);
        let dim = chain.dim();
        if h.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: h.dim() });
        }
        let scale = tol_scale(h);
        let herm = h.hermiticity_residual();
        if herm > 1e-12 * scale {
            return Err(Error::NotHermitian { residual: herm });
        }
        let perm = if chain.is_periodic() {
            let perm = chain.shift_permutation();
            let res = h.permutation_residual(&perm);
            if res > COMMUTATION_TOL * scale {
                return Err(Error::NonCommuting { residual: res });
            }
            Some(perm)
        } else {
            None
        };
        if let Some(b) = bias {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: b.dim() });
            }
            let bscale = tol_scale(b);
            let res = h.commutator(b)?.max_abs();
            if res > COMMUTATION_TOL * scale * bscale {
                return Err(Error::NonCommutingBias { residual: res });
            }
            if let Some(p) = &perm {
                let res = b.permutation_residual(p);
                if res > COMMUTATION_TOL * bscale {
                    return Err(Error::NonCommutingBias { residual: res });
                }
            }
        }

        let mut ops = vec![h];
        if let Some(b) = bias {
            ops.push(b);
        }
        let perms: Vec<&[usize]> = perm.iter().map(Vec::as_slice).collect();
        let partition = SectorPartition::from_operators(dim, &ops, &perms);
        let n_mom = if perm.is_some() { chain.n_sites() } else { 1 };
        let phases: Vec<C64> = (0..n_mom)
            .map(|m| C64::from_polar(1.0, 2.0 * PI * m as f64 / n_mom as f64))
            .collect();

        let mut sectors = Vec::with_capacity(partition.len());
        let mut labels = Vec::with_capacity(dim);
        let mut bias_offdiag: f64 = 0.0;
        let mut offset = 0;
        for s in 0..partition.len() {
            let mut sb = orbits_of(&partition, s, perm.as_deref(), n_mom);
            sb.offset = offset;
            let ctx = FrameCtx {
                partition: &partition,
                n_mom,
                phases: &phases,
            };
            let h_mom = ctx.momentum_matrix(h, &sb, &sb);
            let b_mom = bias.map(|b| ctx.momentum_matrix(b, &sb, &sb));
            let mut sector_labels = Vec::with_capacity(sb.size());
            for block in sb.blocks.iter_mut() {
                let len = block.orbits.len();
                let sub = h_mom.as_ref().submatrix(block.offset, block.offset, len, len);
                let herm = Mat::from_fn(len, len, |i, j| (sub[(i, j)] + sub[(j, i)].conj()) * 0.5);
                let (energies, mut vecs) = linalg::eigh(herm.as_ref())?;
                let mut bias_vals = vec![0.0; len];
                if let Some(b_mom) = &b_mom {
                    let bsub = b_mom.as_ref().submatrix(block.offset, block.offset, len, len);
                    let (vals, worst) = resolve_degeneracies(&energies, &mut vecs, bsub.to_owned())?;
                    bias_vals = vals;
                    bias_offdiag = bias_offdiag.max(worst);
                }
                normalize_phases(&mut vecs);
                let momentum = fold_momentum(block.q, n_mom);
                for (e, b) in energies.iter().zip(&bias_vals) {
                    sector_labels.push(EigenLabel {
                        energy: *e,
                        q: block.q,
                        momentum,
                        bias: *b,
                        sector: s,
                    });
                }
                block.vectors = vecs;
            }
            offset += sb.size();
            labels.extend(sector_labels);
            sectors.push(sb);
        }
        Ok(Self {
            chain: *chain,
            n_mom,
            partition,
            sectors,
            labels,
            phases,
            bias_offdiag,
            has_bias: bias.is_some(),
        })
    }

    pub fn chain(&self) -> &ChainConfig {
        &self.chain
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn has_translation(&self) -> bool {
        self.n_mom > 1 || (self.chain.is_periodic() && self.chain.n_sites() == 1)
    }

    pub fn has_bias(&self) -> bool {
        self.has_bias
    }

    pub fn labels(&self) -> &[EigenLabel] {
        &self.labels
    }

    pub fn partition(&self) -> &SectorPartition {
        &self.partition
    }

    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    /// Global eigen indices of sector `s`.
    pub fn sector_range(&self, s: usize) -> std::ops::Range<usize> {
        let sb = &self.sectors[s];
        sb.offset..sb.offset + sb.size()
    }

    /// Largest bias matrix element left off the diagonal after resolving
    /// degeneracies; zero when `[H, B] = 0` exactly.
    pub fn bias_offdiag(&self) -> f64 {
        self.bias_offdiag
    }

    /// Eigenvectors of sector `s` in the computational basis: rows follow
    /// `partition().sector(s)`, columns follow `sector_range(s)`.
    pub fn sector_vectors(&self, s: usize) -> Mat<C64> {
        let sb = &self.sectors[s];
        let size = sb.size();
        let mut out = linalg::zeros(size, size);
        for block in &sb.blocks {
            let len = block.orbits.len();
            // orbit states in computational coordinates
            let mut w = linalg::zeros(size, len);
            for (col, &o) in block.orbits.iter().enumerate() {
                let members = &sb.orbits[o].members;
                let norm = 1.0 / (members.len() as f64).sqrt();
                for (j, &pos) in members.iter().enumerate() {
                    w[(pos, col)] = self.phases[(block.q * j) % self.n_mom] * norm;
                }
            }
            let v = linalg::matmul(w.as_ref(), block.vectors.as_ref());
            out.as_mut().submatrix_mut(0, block.offset, size, len).copy_from(v.as_ref());
        }
        out
    }

    /// Max over sectors of `||H_s V_s - V_s E_s||`, entrywise.
    pub fn eigen_residual(&self, h: &SparseOperator) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for s in 0..self.sectors.len() {
            let states = self.partition.sector(s);
            let size = states.len();
            let v = self.sector_vectors(s);
            let mut hs = linalg::zeros(size, size);
            for (col, &g) in states.iter().enumerate() {
                for (i, val) in h.col(g) {
                    if self.partition.sector_of(i) != s {
                        return Err(Error::Precondition("Hamiltonian leaves its sectors".into()));
                    }
                    hs[(self.partition.position(i), col)] += val;
                }
            }
            let hv = linalg::matmul(hs.as_ref(), v.as_ref());
            let range = self.sector_range(s);
            for (c, n) in range.enumerate() {
                let e = self.labels[n].energy;
                for r in 0..size {
                    worst = worst.max((hv[(r, c)] - v[(r, c)] * e).norm());
                }
            }
        }
        Ok(worst)
    }

    /// Max over sectors of `||V_s^† V_s - 1||`, entrywise.
    pub fn unitarity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.sectors.len() {
            let v = self.sector_vectors(s);
            let g = linalg::matmul(linalg::adjoint(v.as_ref()).as_ref(), v.as_ref());
            worst = worst.max(linalg::max_abs_diff(g.as_ref(), linalg::identity(g.nrows()).as_ref()));
        }
        worst
    }

    /// Matrix elements `<n| A |m>` for every sector pair the operator
    /// connects.
    pub fn transform(&self, op: &SparseOperator) -> Result<super::EigenOperator> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: op.dim() });
        }
        let mut pairs = std::collections::BTreeSet::new();
        for (i, j, _) in op.triplets() {
            pairs.insert((self.partition.sector_of(i), self.partition.sector_of(j)));
        }
        let ctx = FrameCtx {
            partition: &self.partition,
            n_mom: self.n_mom,
            phases: &self.phases,
        };
        let mut blocks = std::collections::BTreeMap::new();
        for (s, t) in pairs {
            let (a, b) = (&self.sectors[s], &self.sectors[t]);
            let mom = ctx.momentum_matrix(op, a, b);
            let mut out = linalg::zeros(a.size(), b.size());
            for ba in &a.blocks {
                for bb in &b.blocks {
                    let (la, lb) = (ba.orbits.len(), bb.orbits.len());
                    let sub = mom.as_ref().submatrix(ba.offset, bb.offset, la, lb);
                    if linalg::max_abs(sub) == 0.0 {
                        continue;
                    }
                    let left = linalg::matmul(linalg::adjoint(ba.vectors.as_ref()).as_ref(), sub);
                    let e = linalg::matmul(left.as_ref(), bb.vectors.as_ref());
                    out.as_mut().submatrix_mut(ba.offset, bb.offset, la, lb).copy_from(e.as_ref());
                }
            }
            blocks.insert((s, t), out);
        }
        Ok(super::EigenOperator::new(self.sector_offsets(), self.dim(), blocks))
    }

    pub(crate) fn sector_offsets(&self) -> Vec<usize> {
        self.sectors.iter().map(|s| s.offset).collect()
    }

    pub(crate) fn n_mom(&self) -> usize {
        self.n_mom
    }
}

struct FrameCtx<'a> {
    partition: &'a SectorPartition,
    n_mom: usize,
    phases: &'a [C64],
}

impl FrameCtx<'_> {
    /// `<v_{o,q}| A |v_{o',q'}>` over all valid momentum states of sectors
    /// `a` (rows) and `b` (columns).
    fn momentum_matrix(&self, op: &SparseOperator, a: &SectorBasis, b: &SectorBasis) -> Mat<C64> {
        let n = self.n_mom;
        let mut out = linalg::zeros(a.size(), b.size());
        let a_id = self.partition.sector_of(a.states[0]);
        for (cpos, &g) in b.states.iter().enumerate() {
            let ob = b.orbit_of[cpos];
            let jb = b.shift_of[cpos];
            let pb = b.orbits[ob].members.len();
            for (i, val) in op.col(g) {
                if self.partition.sector_of(i) != a_id {
                    continue;
                }
                let rpos = self.partition.position(i);
                let oa = a.orbit_of[rpos];
                let ja = a.shift_of[rpos];
                let pa = a.orbits[oa].members.len();
                let w = val / ((pa * pb) as f64).sqrt();
                // valid momenta of an orbit of period p are multiples of n / p
                let (sa, sb) = (n / pa, n / pb);
                for ma in 0..pa {
                    let qa = ma * sa;
                    let row = a.coords[oa * n + qa];
                    let left = self.phases[(n - (qa * ja) % n) % n];
                    for mb in 0..pb {
                        let qb = mb * sb;
                        let col = b.coords[ob * n + qb];
                        out[(row, col)] += w * left * self.phases[(qb * jb) % n];
                    }
                }
            }
        }
        out
    }
}

fn orbits_of(partition: &SectorPartition, s: usize, perm: Option<&[usize]>, n_mom: usize) -> SectorBasis {
    let states = partition.sector(s).to_vec();
    let size = states.len();
    let mut orbit_of = vec![usize::MAX; size];
    let mut shift_of = vec![0; size];
    let mut orbits = Vec::new();
    for start in 0..size {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        let id = orbits.len();
        let mut members = vec![start];
        orbit_of[start] = id;
        if let Some(p) = perm {
            let mut g = p[states[start]];
            while g != states[start] {
                let pos = partition.position(g);
                shift_of[pos] = members.len();
                orbit_of[pos] = id;
                members.push(pos);
                g = p[g];
            }
        }
        orbits.push(Orbit { members });
    }
    let mut coords = vec![usize::MAX; orbits.len() * n_mom];
    let mut blocks = Vec::new();
    let mut offset = 0;
    for q in 0..n_mom {
        let members: Vec<usize> = (0..orbits.len())
            .filter(|&o| (q * orbits[o].members.len()) % n_mom == 0)
            .collect();
        if members.is_empty() {
            continue;
        }
        for (i, &o) in members.iter().enumerate() {
            coords[o * n_mom + q] = offset + i;
        }
        let len = members.len();
        blocks.push(MomentumBlock {
            q,
            offset,
            orbits: members,
            vectors: Mat::zeros(0, 0),
        });
        offset += len;
    }
    debug_assert_eq!(offset, size);
    SectorBasis {
        states,
        orbits,
        orbit_of,
        shift_of,
        coords,
        blocks,
        offset: 0,
    }
}

/// Diagonalizes the bias inside each degenerate energy cluster, rotating the
/// eigenvectors in place. Returns the bias eigenvalues and the largest
/// remaining off-diagonal element.
fn resolve_degeneracies(energies: &[f64], vecs: &mut Mat<C64>, b: Mat<C64>) -> Result<(Vec<f64>, f64)> {
    let len = energies.len();
    let scale = energies.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
    let bt = linalg::matmul(
        linalg::matmul(linalg::adjoint(vecs.as_ref()).as_ref(), b.as_ref()).as_ref(),
        vecs.as_ref(),
    );
    let mut vals = vec![0.0; len];
    let mut rotation = linalg::identity(len);
    let mut start = 0;
    while start < len {
        let mut end = start + 1;
        while end < len && energies[end] - energies[end - 1] <= DEGENERACY_TOL * scale {
            end += 1;
        }
        let w = end - start;
        let sub = bt.as_ref().submatrix(start, start, w, w);
        let herm = Mat::from_fn(w, w, |i, j| (sub[(i, j)] + sub[(j, i)].conj()) * 0.5);
        let (bv, bu) = linalg::eigh(herm.as_ref())?;
        vals[start..end].copy_from_slice(&bv);
        rotation.as_mut().submatrix_mut(start, start, w, w).copy_from(bu.as_ref());
        start = end;
    }
    *vecs = linalg::matmul(vecs.as_ref(), rotation.as_ref());
    let rotated = linalg::matmul(
        linalg::matmul(linalg::adjoint(rotation.as_ref()).as_ref(), bt.as_ref()).as_ref(),
        rotation.as_ref(),
    );
    let mut worst: f64 = 0.0;
    for j in 0..len {
        for i in 0..len {
            if i != j {
                worst = worst.max(rotated[(i, j)].norm());
            }
        }
    }
    Ok((vals, worst))
}

fn normalize_phases(vecs: &mut Mat<C64>) {
    for j in 0..vecs.ncols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..vecs.nrows() {
            let a = vecs[(i, j)].norm();
            if a > best_abs * (1.0 + 1e-12) {
                best = i;
                best_abs = a;
            }
        }
        if best_abs <= 0.0 {
            continue;
        }
        let phase = vecs[(best, j)].conj() / best_abs;
        for i in 0..vecs.nrows() {
            vecs[(i, j)] *= phase;
        }
    }
}

/// `2 pi q / n` folded into `(-pi, pi]`.
pub fn fold_momentum(q: usize, n: usize) -> f64 {
    let q = q % n;
    let signed = if 2 * q > n { q as i64 - n as i64 } else { q as i64 };
    2.0 * PI * signed as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_xx_model, build_xxz_model, chain_hamiltonian, Interaction};

    fn xx(n: usize) -> (ChainConfig, SparseOperator) {
        let chain = ChainConfig::periodic(n, 2).unwrap();
        let (phi, _) = build_xx_model().unwrap();
        let h = chain_hamiltonian(&phi, &chain).unwrap();
        (chain, h)
    }

    #[test]
    fn spectrum_matches_dense() {
        let chain = ChainConfig::periodic(7, 2).unwrap();
        let phi = Interaction::random(2, 2, 5).unwrap();
        let h = chain_hamiltonian(&phi, &chain).unwrap();
        let basis = JointBasis::build(&chain, &h, None).unwrap();
        let mut e: Vec<f64> = basis.labels().iter().map(|l| l.energy).collect();
        e.sort_by(f64::total_cmp);
        let dense = linalg::eigvalsh(h.to_dense().mat().as_ref()).unwrap();
        for (a, b) in e.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(basis.eigen_residual(&h).unwrap() < 1e-10);
        assert!(basis.unitarity_residual() < 1e-12);
    }

    #[test]
    fn shift_eigenvalues() {
        let (chain, h) = xx(6);
        let basis = JointBasis::build(&chain, &h, None).unwrap();
        let perm = chain.shift_permutation();
        for s in 0..basis.n_sectors() {
            let v = basis.sector_vectors(s);
            let states = basis.partition().sector(s);
            for (c, n) in basis.sector_range(s).enumerate() {
                let k = basis.labels()[n].momentum;
                let phase = C64::from_polar(1.0, -k);
                for (r, &g) in states.iter().enumerate() {
                    // (T v)[perm g] = v[g] and T v = e^{-ik} v
                    let target = basis.partition().position(perm[g]);
                    assert!((v[(r, c)] - v[(target, c)] * phase).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn transform_matches_dense() {
        let (chain, h) = xx(6);
        let basis = JointBasis::build(&chain, &h, None).unwrap();
        let (phi, _) = build_xxz_model(0.4).unwrap();
        let a = crate::operator::embed_sparse(&phi.terms()[0].at(1, 2), &chain).unwrap();
        let eo = basis.transform(&a).unwrap();
        let dense = a.to_dense();
        for s in 0..basis.n_sectors() {
            let vs = basis.sector_vectors(s);
            let ss = basis.partition().sector(s);
            for t in 0..basis.n_sectors() {
                let vt = basis.sector_vectors(t);
                let st = basis.partition().sector(t);
                let sub = Mat::from_fn(ss.len(), st.len(), |i, j| dense.get(ss[i], st[j]));
                let expect = linalg::matmul(
                    linalg::matmul(linalg::adjoint(vs.as_ref()).as_ref(), sub.as_ref()).as_ref(),
                    vt.as_ref(),
                );
                for (i, n) in basis.sector_range(s).enumerate() {
                    for (j, m) in basis.sector_range(t).enumerate() {
                        assert!((eo.get(n, m) - expect[(i, j)]).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn open_chain_has_no_momentum() {
        let chain = ChainConfig::open(5, 2).unwrap();
        let (phi, _) = build_xx_model().unwrap();
        let h = chain_hamiltonian(&phi, &chain).unwrap();
        let basis = JointBasis::build(&chain, &h, None).unwrap();
        assert!(basis.labels().iter().all(|l| l.q == 0));
        assert!(basis.eigen_residual(&h).unwrap() < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_is_pure_momentum() {
        let chain = ChainConfig::periodic(4, 2).unwrap();
        let h = SparseOperator::zeros(chain.dim());
        let basis = JointBasis::build(&chain, &h, None).unwrap();
        assert!(basis.labels().iter().all(|l| l.energy == 0.0));
        let mut qs: Vec<usize> = basis.labels().iter().map(|l| l.q).collect();
        qs.sort_unstable();
        qs.dedup();
        assert_eq!(qs, vec![0, 1, 2, 3]);
    }

    #[test]
    fn folding() {
        assert_eq!(fold_momentum(0, 6), 0.0);
        assert!((fold_momentum(3, 6) - PI).abs() < 1e-15);
        assert!((fold_momentum(4, 6) + 2.0 * PI / 3.0).abs() < 1e-15);
    }
}
