use std::collections::BTreeMap;

use super::chain::ChainConfig;
use super::global::{GlobalOperator, Placement};
use super::local::LocalOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, C64, ONE, ZERO};

/// Compressed sparse column storage of a chain operator. Row indices within
/// a column are strictly increasing and no stored value is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            col_ptr: vec![0; dim + 1],
            row_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            col_ptr: (0..=dim).collect(),
            row_idx: (0..dim).collect(),
            vals: vec![ONE; dim],
        }
    }

    /// Permutation operator `P |i> = |perm[i]>`.
    pub fn permutation(perm: &[usize]) -> Self {
        let dim = perm.len();
        Self {
            dim,
            col_ptr: (0..=dim).collect(),
            row_idx: perm.to_vec(),
            vals: vec![ONE; dim],
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= dim || t.1 >= dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.max(c) + 1,
            });
        }
        triplets.sort_by_key(|t| (t.1, t.0));
        let mut col_ptr = vec![0usize; dim + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut cols = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let (Some(&lr), Some(&lc)) = (row_idx.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            row_idx.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut out_rows = Vec::with_capacity(row_idx.len());
        let mut out_vals = Vec::with_capacity(row_idx.len());
        for ((r, c), v) in row_idx.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                out_rows.push(r);
                out_vals.push(v);
                col_ptr[c + 1] += 1;
            }
        }
        for c in 0..dim {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(Self {
            dim,
            col_ptr,
            row_idx: out_rows,
            vals: out_vals,
        })
    }

    pub fn from_global(g: &GlobalOperator) -> Self {
        let dim = g.dim();
        let mut trip = Vec::new();
        for j in 0..dim {
            for i in 0..dim {
                let v = g.get(i, j);
                if v != ZERO {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(dim, trip).expect("indices in range")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero entries `(row, value)` of column `j`.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        match self.row_idx[r.clone()].binary_search(&i) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |j| self.col(j).map(move |(i, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> GlobalOperator {
        let mut m = linalg::zeros(self.dim, self.dim);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        GlobalOperator::from_mat(m).expect("square")
    }

    pub fn scale(&self, c: C64) -> Self {
        let trip = self.triplets().map(|(i, j, v)| (i, j, c * v)).collect();
        Self::from_triplets(self.dim, trip).expect("indices in range")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let trip = self.triplets().chain(other.triplets()).collect();
        Self::from_triplets(self.dim, trip)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn adjoint(&self) -> Self {
        let trip = self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.dim, trip).expect("indices in range")
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut acc = vec![ZERO; self.dim];
        let mut touched = vec![false; self.dim];
        let mut rows: Vec<usize> = Vec::new();
        let mut trip = Vec::new();
        for j in 0..self.dim {
            for (k, b) in other.col(j) {
                for (i, a) in self.col(k) {
                    if !touched[i] {
                        touched[i] = true;
                        rows.push(i);
                    }
                    acc[i] += a * b;
                }
            }
            for &i in &rows {
                trip.push((i, j, acc[i]));
                acc[i] = ZERO;
                touched[i] = false;
            }
            rows.clear();
        }
        Self::from_triplets(self.dim, trip)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn frobenius(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m: f64, v| m.max(v.norm()))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.adjoint()).expect("same dim").frobenius()
    }

    /// `max |A[perm i, perm j] - A[i, j]|`: vanishes iff `P A P^† = A` for the
    /// permutation `P |i> = |perm[i]>`.
    pub fn permutation_residual(&self, perm: &[usize]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, j, v) in self.triplets() {
            worst = worst.max((self.get(perm[i], perm[j]) - v).norm());
        }
        // entries mapped onto structural zeros are caught from the other side
        let mut inv = vec![0usize; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        for (i, j, v) in self.triplets() {
            worst = worst.max((self.get(inv[i], inv[j]) - v).norm());
        }
        worst
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

/// Sparse counterpart of [`super::embed`].
pub fn embed_sparse(op: &LocalOperator, chain: &ChainConfig) -> Result<SparseOperator> {
    let place = Placement::new(op, chain)?;
    let dim = chain.dim();
    let c = op.coeffs();
    // column-local pattern: nonzero rows of each local column
    let pattern: Vec<Vec<(usize, C64)>> = (0..op.dim())
        .map(|lj| {
            (0..op.dim())
                .filter_map(|li| {
                    let v = c[(li, lj)];
                    (v != ZERO).then_some((li, v))
                })
                .collect()
        })
        .collect();
    let mut trip = Vec::new();
    for j in 0..dim {
        let lj = place.local_of(j);
        let base = j - place.offset[lj];
        for &(li, v) in &pattern[lj] {
            trip.push((base + place.offset[li], j, v));
        }
    }
    SparseOperator::from_triplets(dim, trip)
}

/// Sum of several local operators embedded sparsely.
pub fn embed_sum(ops: &[LocalOperator], chain: &ChainConfig) -> Result<SparseOperator> {
    let mut trip: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    for op in ops {
        let s = embed_sparse(op, chain)?;
        for (i, j, v) in s.triplets() {
            *trip.entry((j, i)).or_insert(ZERO) += v;
        }
    }
    SparseOperator::from_triplets(
        chain.dim(),
        trip.into_iter().map(|((j, i), v)| (i, j, v)).collect(),
    )
}
