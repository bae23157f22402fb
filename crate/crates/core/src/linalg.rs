//! Dense complex linear-algebra helpers on top of `faer`.

use faer::{Accum, Mat, MatRef, Par, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn zeros(n: usize, m: usize) -> Mat<C64> {
    Mat::zeros(n, m)
}

pub fn identity(n: usize) -> Mat<C64> {
    Mat::identity(n, n)
}

/// `a * b`, single-threaded so that results are bitwise reproducible.
pub fn matmul(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    faer::linalg::matmul::matmul(out.as_mut(), Accum::Replace, a, b, ONE, Par::Seq);
    out
}

/// `a * b - b * a`.
pub fn commutator(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let mut out = matmul(a, b);
    faer::linalg::matmul::matmul(out.as_mut(), Accum::Add, b, a, -ONE, Par::Seq);
    out
}

/// Kronecker product with `b` as the fast (little-endian) factor:
/// `(a ⊗ b)[(ia*nb + ib), (ja*mb + jb)] = a[ia, ja] b[ib, jb]`.
pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let (na, ma, nb, mb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(na * nb, ma * mb, |i, j| {
        a[(i / nb, j / mb)] * b[(i % nb, j % mb)]
    })
}

pub fn adjoint(a: MatRef<'_, C64>) -> Mat<C64> {
    a.adjoint().to_owned()
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn max_abs(a: MatRef<'_, C64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Largest entrywise deviation `max |a - b|`.
pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// Frobenius norm of `a - a^†`.
pub fn hermiticity_residual(a: MatRef<'_, C64>) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub fn eigh(a: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    if a.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    let vals = evd.S().column_vector().iter().map(|v| v.re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let vals = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    Ok(vals)
}

/// Operator (spectral) norm: the largest singular value. Hermitian inputs
/// take the cheaper eigenvalue route, `max |lambda|`.
pub fn operator_norm(a: MatRef<'_, C64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    let scale = max_abs(a);
    if scale == 0.0 {
        return Ok(0.0);
    }
    if a.nrows() == a.ncols() && hermiticity_residual(a) <= 1e-13 * scale {
        let vals = eigvalsh(a)?;
        return Ok(vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    // i*A is Hermitian for anti-Hermitian A (e.g. commutators of Hermitians)
    if a.nrows() == a.ncols() && antihermiticity_residual(a) <= 1e-13 * scale {
        let ia = Mat::from_fn(a.nrows(), a.ncols(), |i, j| I * a[(i, j)]);
        let vals = eigvalsh(ia.as_ref())?;
        return Ok(vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    let sv = a
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    Ok(sv.iter().fold(0.0_f64, |m, v| m.max(*v)))
}

fn antihermiticity_residual(a: MatRef<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += (a[(i, j)] + a[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Deterministic pairwise (tree) summation with fan-in 2.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Complex variant of [`pairwise_sum`].
pub fn pairwise_sum_c(values: &[C64]) -> C64 {
    match values.len() {
        0 => ZERO,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum_c(a) + pairwise_sum_c(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli() -> [Mat<C64>; 3] {
        let x = Mat::from_fn(2, 2, |i, j| if i != j { ONE } else { ZERO });
        let y = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => -I,
            (1, 0) => I,
            _ => ZERO,
        });
        let z = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => ONE,
            (1, 1) => -ONE,
            _ => ZERO,
        });
        [x, y, z]
    }

    #[test]
    fn kron_is_little_endian() {
        let [x, _, z] = pauli();
        // x ⊗ z with z fast: entry ((0,0),(1,0)) -> row 0, col 2
        let k = kron(x.as_ref(), z.as_ref());
        assert_eq!(k[(0, 2)], ONE);
        assert_eq!(k[(1, 3)], -ONE);
    }

    #[test]
    fn norms_of_paulis() {
        let [x, y, z] = pauli();
        for p in [&x, &y, &z] {
            assert!((operator_norm(p.as_ref()).unwrap() - 1.0).abs() < 1e-14);
        }
        let c = commutator(x.as_ref(), y.as_ref());
        assert!((operator_norm(c.as_ref()).unwrap() - 2.0).abs() < 1e-14);
        // non-normal: [[0, 1], [0, 0]]
        let e01 = Mat::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { ONE } else { ZERO });
        assert!((operator_norm(e01.as_ref()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
    }
}
