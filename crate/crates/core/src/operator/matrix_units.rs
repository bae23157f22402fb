use faer::Mat;

use super::local::LocalOperator;
use crate::error::Result;
use crate::linalg::{self, C64, ONE, ZERO};

/// The matrix units `E(i, j)` of a single site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixUnitBasis {
    site_dim: usize,
}

/// One term of a matrix-unit expansion: per-site index pairs `(i_x, j_x)`
/// in support order, and the coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixUnitTerm {
    pub indices: Vec<(usize, usize)>,
    pub coeff: C64,
}

impl MatrixUnitBasis {
    pub fn new(site_dim: usize) -> Self {
        Self { site_dim }
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn unit(&self, i: usize, j: usize) -> Mat<C64> {
        Mat::from_fn(self.site_dim, self.site_dim, |a, b| {
            if (a, b) == (i, j) {
                ONE
            } else {
                ZERO
            }
        })
    }

    /// Expansion of `op` in products of single-site matrix units. Only
    /// nonzero coefficients are returned.
    pub fn decompose(&self, op: &LocalOperator) -> Vec<MatrixUnitTerm> {
        let d = self.site_dim;
        let k = op.support().len();
        let digits = |mut idx: usize| -> Vec<usize> {
            (0..k)
                .map(|_| {
                    let v = idx % d;
                    idx /= d;
                    v
                })
                .collect()
        };
        let c = op.coeffs();
        let mut out = Vec::new();
        for col in 0..op.dim() {
            let dj = digits(col);
            for row in 0..op.dim() {
                let v = c[(row, col)];
                if v != ZERO {
                    let di = digits(row);
                    out.push(MatrixUnitTerm {
                        indices: di.into_iter().zip(dj.iter().copied()).collect(),
                        coeff: v,
                    });
                }
            }
        }
        out
    }

    /// Rebuilds an operator on `support` from its expansion by explicit
    /// Kronecker products of the units.
    pub fn reconstruct(&self, support: Vec<i64>, terms: &[MatrixUnitTerm]) -> Result<LocalOperator> {
        let dim = self.site_dim.pow(support.len() as u32);
        let mut acc = linalg::zeros(dim, dim);
        for t in terms {
            let mut prod = Mat::from_fn(1, 1, |_, _| t.coeff);
            for &(i, j) in &t.indices {
                // later support sites are slower digits
                prod = linalg::kron(self.unit(i, j).as_ref(), prod.as_ref());
            }
            acc += &prod;
        }
        LocalOperator::new(support, self.site_dim, acc)
    }
}
