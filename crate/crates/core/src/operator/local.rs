use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{self, C64, ZERO};

/// Tolerance for Hermiticity checks on stored coefficient matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// An operator acting on finitely many lattice sites.
///
/// `support` holds strictly increasing lattice coordinates. Coordinates may
/// be negative; they are mapped onto a concrete chain only when the operator
/// is embedded. The coefficient matrix acts on the tensor product of the
/// support factors, little-endian in the support order: the factor of
/// `support[0]` is the fastest digit.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    support: Vec<i64>,
    site_dim: usize,
    coeffs: Mat<C64>,
}

impl PartialEq for LocalOperator {
    fn eq(&self, other: &Self) -> bool {
        self.support == other.support
            && self.site_dim == other.site_dim
            && self.coeffs == other.coeffs
    }
}

impl LocalOperator {
    pub fn new(support: Vec<i64>, site_dim: usize, coeffs: Mat<C64>) -> Result<Self> {
        if site_dim < 2 {
            return Err(Error::InvalidSupport(format!("site_dim = {site_dim} < 2")));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSupport(format!(
                "support {support:?} is not strictly increasing"
            )));
        }
        let dim = site_dim.pow(support.len() as u32);
        if coeffs.nrows() != dim || coeffs.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coeffs.nrows().max(coeffs.ncols()),
            });
        }
        Ok(Self {
            support,
            site_dim,
            coeffs,
        })
    }

    /// Like [`LocalOperator::new`], additionally verifying Hermiticity.
    pub fn new_hermitian(support: Vec<i64>, site_dim: usize, coeffs: Mat<C64>) -> Result<Self> {
        let op = Self::new(support, site_dim, coeffs)?;
        let residual = linalg::hermiticity_residual(op.coeffs.as_ref());
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        Ok(op)
    }

    pub fn single_site(site: i64, coeffs: Mat<C64>) -> Result<Self> {
        let d = coeffs.nrows();
        Self::new(vec![site], d, coeffs)
    }

    /// The zero operator on an empty support.
    pub fn zero(site_dim: usize) -> Self {
        Self {
            support: Vec::new(),
            site_dim,
            coeffs: Mat::zeros(1, 1),
        }
    }

    /// A multiple of the identity on an empty support.
    pub fn scalar(site_dim: usize, value: C64) -> Self {
        Self {
            support: Vec::new(),
            site_dim,
            coeffs: Mat::from_fn(1, 1, |_, _| value),
        }
    }

    pub fn identity(support: Vec<i64>, site_dim: usize) -> Result<Self> {
        let dim = site_dim.pow(support.len() as u32);
        Self::new(support, site_dim, linalg::identity(dim))
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn coeffs(&self) -> &Mat<C64> {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Mat<C64> {
        self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    /// Diameter `max - min` of the support; zero for at most one site.
    pub fn diameter(&self) -> i64 {
        match (self.support.first(), self.support.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(self.coeffs.as_ref())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= HERMITIAN_TOL
    }

    pub fn norm(&self) -> Result<f64> {
        linalg::operator_norm(self.coeffs.as_ref())
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(self.coeffs.as_ref())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.coeffs[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            support: self.support.clone(),
            site_dim: self.site_dim,
            coeffs: linalg::adjoint(self.coeffs.as_ref()),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            support: self.support.clone(),
            site_dim: self.site_dim,
            coeffs: Mat::from_fn(self.dim(), self.dim(), |i, j| factor * self.coeffs[(i, j)]),
        }
    }

    /// Lattice translation of the support by `x`, without wrapping.
    pub fn shifted(&self, x: i64) -> Self {
        Self {
            support: self.support.iter().map(|s| s + x).collect(),
            site_dim: self.site_dim,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Re-expresses the operator on a superset of its support by tensoring
    /// with identities.
    pub fn extend_to(&self, support: &[i64]) -> Result<Self> {
        if support == self.support.as_slice() {
            return Ok(self.clone());
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSupport(format!(
                "support {support:?} is not strictly increasing"
            )));
        }
        let positions = self
            .support
            .iter()
            .map(|s| {
                support.binary_search(s).map_err(|_| {
                    Error::InvalidSupport(format!(
                        "{support:?} does not contain the support {:?}",
                        self.support
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let d = self.site_dim;
        let big = d.pow(support.len() as u32);
        let small = self.dim();
        let strides: Vec<usize> = positions.iter().map(|&p| d.pow(p as u32)).collect();
        // offset[io]: contribution of the local digits of `io` to the big index
        let offset: Vec<usize> = (0..small)
            .map(|io| {
                let mut rem = io;
                let mut acc = 0;
                for &st in &strides {
                    acc += (rem % d) * st;
                    rem /= d;
                }
                acc
            })
            .collect();
        let local_of = |big_index: usize| -> usize {
            let mut acc = 0;
            let mut mul = 1;
            for &st in &strides {
                acc += ((big_index / st) % d) * mul;
                mul *= d;
            }
            acc
        };
        let mut out = linalg::zeros(big, big);
        for i in 0..big {
            let li = local_of(i);
            let base = i - offset[li];
            for lj in 0..small {
                let v = self.coeffs[(li, lj)];
                if v != ZERO {
                    out[(i, base + offset[lj])] = v;
                }
            }
        }
        Self::new(support.to_vec(), d, out)
    }

    fn union_support(&self, other: &Self) -> Vec<i64> {
        let mut s: Vec<i64> = self.support.iter().chain(&other.support).copied().collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.site_dim != other.site_dim {
            return Err(Error::DimensionMismatch {
                expected: self.site_dim,
                found: other.site_dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let s = self.union_support(other);
        let a = self.extend_to(&s)?;
        let b = other.extend_to(&s)?;
        let n = a.dim();
        let coeffs = Mat::from_fn(n, n, |i, j| a.coeffs[(i, j)] + b.coeffs[(i, j)]);
        Self::new(s, self.site_dim, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let s = self.union_support(other);
        let a = self.extend_to(&s)?;
        let b = other.extend_to(&s)?;
        let coeffs = linalg::matmul(a.coeffs.as_ref(), b.coeffs.as_ref());
        Self::new(s, self.site_dim, coeffs)
    }

    /// `[self, other]` on the union of the supports.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let s = self.union_support(other);
        let a = self.extend_to(&s)?;
        let b = other.extend_to(&s)?;
        let coeffs = linalg::commutator(a.coeffs.as_ref(), b.coeffs.as_ref());
        Self::new(s, self.site_dim, coeffs)
    }

    /// Maximal entrywise difference after extending both to a common support.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_dims(other)?;
        let s = self.union_support(other);
        let a = self.extend_to(&s)?;
        let b = other.extend_to(&s)?;
        Ok(linalg::max_abs_diff(a.coeffs.as_ref(), b.coeffs.as_ref()))
    }

    /// Partial trace over the factor at `site`, divided by `site_dim`.
    pub fn reduced_over(&self, site: i64) -> Result<Self> {
        let pos = self.support.binary_search(&site).map_err(|_| {
            Error::InvalidSupport(format!("site {site} not in support {:?}", self.support))
        })?;
        let d = self.site_dim;
        let stride = d.pow(pos as u32);
        let small_dim = self.dim() / d;
        let lift = |r: usize, a: usize| -> usize {
            let low = r % stride;
            let high = r / stride;
            low + a * stride + high * stride * d
        };
        let inv = 1.0 / d as f64;
        let coeffs = Mat::from_fn(small_dim, small_dim, |i, j| {
            let mut acc = ZERO;
            for a in 0..d {
                acc += self.coeffs[(lift(i, a), lift(j, a))];
            }
            acc * inv
        });
        let mut support = self.support.clone();
        support.remove(pos);
        Self::new(support, d, coeffs)
    }

    /// Drops every site on which the operator acts as the identity, up to an
    /// entrywise tolerance.
    pub fn reduce_support(&self, tol: f64) -> Result<Self> {
        let mut cur = self.clone();
        for &site in self.support.iter() {
            let reduced = cur.reduced_over(site)?;
            let back = reduced.extend_to(&cur.support)?;
            if linalg::max_abs_diff(back.coeffs.as_ref(), cur.coeffs.as_ref()) <= tol {
                cur = reduced;
            }
        }
        Ok(cur)
    }

    /// Reorders the support into ascending order, permuting tensor factors.
    /// `support` need not be sorted on input.
    pub fn from_unsorted(support: Vec<i64>, site_dim: usize, coeffs: Mat<C64>) -> Result<Self> {
        let k = support.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&p| support[p]);
        let sorted: Vec<i64> = order.iter().map(|&p| support[p]).collect();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSupport(format!("repeated sites in {support:?}")));
        }
        let dim = site_dim.pow(k as u32);
        if coeffs.nrows() != dim || coeffs.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coeffs.nrows(),
            });
        }
        // new position q holds old position order[q]
        let to_old = |idx: usize| -> usize {
            let mut rem = idx;
            let mut acc = 0;
            for &old_pos in &order {
                acc += (rem % site_dim) * site_dim.pow(old_pos as u32);
                rem /= site_dim;
            }
            acc
        };
        let map: Vec<usize> = (0..dim).map(to_old).collect();
        let out = Mat::from_fn(dim, dim, |i, j| coeffs[(map[i], map[j])]);
        Self::new(sorted, site_dim, out)
    }
}
