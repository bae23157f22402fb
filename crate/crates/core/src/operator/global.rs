use faer::Mat;

use super::chain::ChainConfig;
use super::local::LocalOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, C64, ZERO};

/// A dense operator on the full chain Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalOperator(Mat<C64>);

impl GlobalOperator {
    pub fn from_mat(m: Mat<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(linalg::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(linalg::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn mat(&self) -> &Mat<C64> {
        &self.0
    }

    pub fn into_mat(self) -> Mat<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(linalg::adjoint(self.0.as_ref()))
    }

    pub fn scale(&self, c: C64) -> Self {
        let n = self.dim();
        Self(Mat::from_fn(n, n, |i, j| c * self.0[(i, j)]))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self, other)?;
        let n = self.dim();
        Ok(Self(Mat::from_fn(n, n, |i, j| self.0[(i, j)] + other.0[(i, j)])))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_dim(self, other)?;
        let n = self.dim();
        Ok(Self(Mat::from_fn(n, n, |i, j| self.0[(i, j)] - other.0[(i, j)])))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        same_dim(self, other)?;
        Ok(Self(linalg::matmul(self.0.as_ref(), other.0.as_ref())))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.0[(i, i)]).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(self.0.as_ref())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        same_dim(self, other)?;
        Ok(linalg::max_abs_diff(self.0.as_ref(), other.0.as_ref()))
    }

    pub fn norm(&self) -> Result<f64> {
        operator_norm(self)
    }
}

fn same_dim(a: &GlobalOperator, b: &GlobalOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Index bookkeeping for placing a local operator onto a chain.
pub(crate) struct Placement {
    /// `offset[l]`: global-index contribution of local basis index `l`.
    pub offset: Vec<usize>,
    strides: Vec<usize>,
    d: usize,
}

impl Placement {
    pub fn new(op: &LocalOperator, chain: &ChainConfig) -> Result<Self> {
        if op.site_dim() != chain.site_dim() {
            return Err(Error::DimensionMismatch {
                expected: chain.site_dim(),
                found: op.site_dim(),
            });
        }
        let sites = chain.place(op.support())?;
        let d = chain.site_dim();
        let strides: Vec<usize> = sites.iter().map(|&s| chain.stride(s)).collect();
        let offset = (0..op.dim())
            .map(|l| {
                let mut rem = l;
                let mut acc = 0;
                for &st in &strides {
                    acc += (rem % d) * st;
                    rem /= d;
                }
                acc
            })
            .collect();
        Ok(Self { offset, strides, d })
    }

    /// Local basis index carried by global basis index `g`.
    pub fn local_of(&self, g: usize) -> usize {
        let mut acc = 0;
        let mut mul = 1;
        for &st in &self.strides {
            acc += ((g / st) % self.d) * mul;
            mul *= self.d;
        }
        acc
    }
}

/// `op ⊗ 1` on the whole chain, tensor factors in ascending site order.
pub fn embed(op: &LocalOperator, chain: &ChainConfig) -> Result<GlobalOperator> {
    let place = Placement::new(op, chain)?;
    let dim = chain.dim();
    let c = op.coeffs();
    let mut out = linalg::zeros(dim, dim);
    for j in 0..dim {
        let lj = place.local_of(j);
        let base = j - place.offset[lj];
        for li in 0..op.dim() {
            let v = c[(li, lj)];
            if v != ZERO {
                out[(base + place.offset[li], j)] = v;
            }
        }
    }
    Ok(GlobalOperator(out))
}

/// Translation `tau_x`. On periodic chains the support is wrapped into
/// `[0, n_sites)` and re-sorted, permuting the tensor factors accordingly.
pub fn translate(op: &LocalOperator, x: i64, chain: &ChainConfig) -> Result<LocalOperator> {
    let shifted: Vec<i64> = op.support().iter().map(|s| s + x).collect();
    let wrapped = chain
        .place(&shifted)?
        .into_iter()
        .map(|s| s as i64)
        .collect::<Vec<_>>();
    LocalOperator::from_unsorted(wrapped, op.site_dim(), op.coeffs().clone())
}

pub fn commutator(a: &GlobalOperator, b: &GlobalOperator) -> Result<GlobalOperator> {
    same_dim(a, b)?;
    Ok(GlobalOperator(linalg::commutator(a.0.as_ref(), b.0.as_ref())))
}

/// Operator norm of `[a, b]`.
pub fn comm_norm(a: &GlobalOperator, b: &GlobalOperator) -> Result<f64> {
    operator_norm(&commutator(a, b)?)
}

/// Largest singular value.
pub fn operator_norm(a: &GlobalOperator) -> Result<f64> {
    linalg::operator_norm(a.0.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, ONE};
    use crate::operator::matrix_units::MatrixUnitBasis;

    #[test]
    fn embed_identity_is_identity() {
        let chain = ChainConfig::periodic(5, 2).unwrap();
        let id = LocalOperator::identity(vec![3], 2).unwrap();
        let g = embed(&id, &chain).unwrap();
        assert_eq!(g, GlobalOperator::identity(32));
    }

    #[test]
    fn embed_matrix_unit_on_site_zero() {
        let chain = ChainConfig::open(2, 2).unwrap();
        let e01 = MatrixUnitBasis::new(2).unit(0, 1);
        let op = LocalOperator::single_site(0, e01.clone()).unwrap();
        let g = embed(&op, &chain).unwrap();
        // site 0 is the fast digit: 1 (slow, site 1) ⊗ E01 (fast, site 0)
        let expect = kron(linalg::identity(2).as_ref(), e01.as_ref());
        assert_eq!(g.mat(), &expect);
    }

    #[test]
    fn translate_wraps_and_composes() {
        let chain = ChainConfig::periodic(8, 2).unwrap();
        let a = Mat::from_fn(4, 4, |i, j| C64::new((i * 4 + j) as f64, (i as f64) - (j as f64)));
        let op = LocalOperator::new(vec![6, 7], 2, a).unwrap();
        let t = translate(&op, 1, &chain).unwrap();
        assert_eq!(t.support(), &[0, 7]);
        let back = translate(&translate(&op, 2, &chain).unwrap(), -2, &chain).unwrap();
        assert_eq!(back, op);
        let e1 = embed(&translate(&op, 3, &chain).unwrap(), &chain).unwrap();
        let e2 = embed(&op.shifted(3), &chain).unwrap();
        assert!(e1.max_abs_diff(&e2).unwrap() < 1e-15);
    }

    #[test]
    fn pauli_commutator_norm() {
        let chain = ChainConfig::open(2, 2).unwrap();
        let sx = Mat::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO });
        let sy = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => ZERO,
        });
        let a = embed(&LocalOperator::single_site(0, sx).unwrap(), &chain).unwrap();
        let b = embed(&LocalOperator::single_site(0, sy).unwrap(), &chain).unwrap();
        assert!((comm_norm(&a, &b).unwrap() - 2.0).abs() < 1e-14);
        assert!(comm_norm(&a, &a).unwrap() < 1e-15);
        assert!(matches!(
            commutator(&a, &GlobalOperator::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
