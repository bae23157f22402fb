use faer::Mat;

use crate::basis::{EigenOperator, JointBasis};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::models::{chain_hamiltonian, Interaction};
use crate::operator::{ChainConfig, GlobalOperator, SparseOperator};

/// Relative tolerance on `||U D U^† - H||`.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Eigendecomposition of a chain Hamiltonian, resolved by symmetry sectors,
/// used for Heisenberg evolution `A(t) = e^{iHt} A e^{-iHt}`.
#[derive(Debug, Clone)]
pub struct EvolutionContext {
    hamiltonian: SparseOperator,
    basis: JointBasis,
    vectors: Vec<Mat<C64>>,
    eigenvalues: Vec<f64>,
    reconstruction_residual: f64,
}

impl EvolutionContext {
    pub fn new(hamiltonian: SparseOperator, chain: &ChainConfig) -> Result<Self> {
        let basis = JointBasis::build(chain, &hamiltonian, None)?;
        Self::from_basis(hamiltonian, basis)
    }

    pub fn from_interaction(phi: &Interaction, chain: &ChainConfig) -> Result<Self> {
        Self::new(chain_hamiltonian(phi, chain)?, chain)
    }

    /// Wraps an existing basis of `hamiltonian`.
    pub fn from_basis(hamiltonian: SparseOperator, basis: JointBasis) -> Result<Self> {
        if hamiltonian.dim() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: hamiltonian.dim() });
        }
        let scale = hamiltonian.max_abs().max(f64::MIN_POSITIVE);
        let residual = basis.eigen_residual(&hamiltonian)?;
        if residual > RECONSTRUCTION_TOL * scale.max(1.0) {
            return Err(Error::Numerical(format!(
                "eigendecomposition residual {residual:e} exceeds tolerance"
            )));
        }
        let vectors = (0..basis.n_sectors()).map(|s| basis.sector_vectors(s)).collect();
        let mut eigenvalues: Vec<f64> = basis.labels().iter().map(|l| l.energy).collect();
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self {
            hamiltonian,
            basis,
            vectors,
            eigenvalues,
            reconstruction_residual: residual,
        })
    }

    pub fn basis(&self) -> &JointBasis {
        &self.basis
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.hamiltonian
    }

    pub fn chain(&self) -> &ChainConfig {
        self.basis.chain()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Max entrywise residual of `H V = V E` over sectors.
    pub fn reconstruction_residual(&self) -> f64 {
        self.reconstruction_residual
    }

    /// `e^{iHt} A e^{-iHt}` for a dense operator.
    pub fn evolve(&self, a: &GlobalOperator, t: f64) -> Result<GlobalOperator> {
        let dim = self.dim();
        if a.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: a.dim() });
        }
        let part = self.basis.partition();
        let labels = self.basis.labels();
        let mut out = linalg::zeros(dim, dim);
        for s in 0..part.len() {
            let rows = part.sector(s);
            let rs = self.basis.sector_range(s);
            for u in 0..part.len() {
                let cols = part.sector(u);
                let sub = Mat::from_fn(rows.len(), cols.len(), |i, j| a.get(rows[i], cols[j]));
                if linalg::max_abs(sub.as_ref()) == 0.0 {
                    continue;
                }
                let cu = self.basis.sector_range(u);
                let (vs, vu) = (&self.vectors[s], &self.vectors[u]);
                let mut e = linalg::matmul(
                    linalg::matmul(linalg::adjoint(vs.as_ref()).as_ref(), sub.as_ref()).as_ref(),
                    vu.as_ref(),
                );
                for j in 0..e.ncols() {
                    let em = labels[cu.start + j].energy;
                    for i in 0..e.nrows() {
                        let en = labels[rs.start + i].energy;
                        e[(i, j)] *= C64::from_polar(1.0, (en - em) * t);
                    }
                }
                let back = linalg::matmul(
                    linalg::matmul(vs.as_ref(), e.as_ref()).as_ref(),
                    linalg::adjoint(vu.as_ref()).as_ref(),
                );
                for (j, &c) in cols.iter().enumerate() {
                    for (i, &r) in rows.iter().enumerate() {
                        out[(r, c)] = back[(i, j)];
                    }
                }
            }
        }
        GlobalOperator::from_mat(out)
    }

    /// Evolution of an operator already in the eigenframe.
    pub fn evolve_eigen(&self, a: &EigenOperator, t: f64) -> EigenOperator {
        a.evolve(&self.basis, t)
    }

    pub fn to_eigen(&self, a: &SparseOperator) -> Result<EigenOperator> {
        self.basis.transform(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_xx_model;
    use rand::{Rng, SeedableRng};

    fn random_op(dim: usize, seed: u64) -> GlobalOperator {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<C64> = (0..dim * dim)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        GlobalOperator::from_mat(Mat::from_fn(dim, dim, |i, j| vals[i * dim + j])).unwrap()
    }

    fn dense_evolve(h: &GlobalOperator, a: &GlobalOperator, t: f64) -> GlobalOperator {
        let (vals, vecs) = linalg::eigh(h.mat().as_ref()).unwrap();
        let n = vals.len();
        let u = Mat::from_fn(n, n, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += vecs[(i, k)] * C64::from_polar(1.0, vals[k] * t) * vecs[(j, k)].conj();
            }
            acc
        });
        let ua = linalg::matmul(u.as_ref(), a.mat().as_ref());
        GlobalOperator::from_mat(linalg::matmul(ua.as_ref(), linalg::adjoint(u.as_ref()).as_ref())).unwrap()
    }

    #[test]
    fn evolution_properties() {
        let chain = ChainConfig::periodic(6, 2).unwrap();
        let (phi, _) = build_xx_model().unwrap();
        let ctx = EvolutionContext::from_interaction(&phi, &chain).unwrap();
        let w = ctx.eigenvalues();
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        let h = ctx.hamiltonian().to_dense();
        assert!(ctx.evolve(&h, 0.8).unwrap().max_abs_diff(&h).unwrap() < 1e-12);
        let a = random_op(64, 3);
        assert!(ctx.evolve(&a, 0.0).unwrap().max_abs_diff(&a).unwrap() < 1e-12);
        let two = ctx.evolve(&ctx.evolve(&a, 0.3).unwrap(), 0.7).unwrap();
        let one = ctx.evolve(&a, 1.0).unwrap();
        assert!(two.max_abs_diff(&one).unwrap() < 1e-9);
        assert!(one.max_abs_diff(&dense_evolve(&h, &a, 1.0)).unwrap() < 1e-10);
        assert!((one.norm().unwrap() - a.norm().unwrap()).abs() < 1e-10);
        assert!((one.trace() - a.trace()).norm() < 1e-10);
    }
}
