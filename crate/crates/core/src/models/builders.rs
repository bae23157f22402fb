use faer::Mat;

use super::interaction::{ChargeSpec, Interaction};
use crate::error::{Error, Result};
use crate::linalg::{self, C64, ONE, ZERO};
use crate::operator::{embed, ChainConfig, GlobalOperator, LocalOperator};

/// Spin-1/2 operators `S^(i) = sigma^(i) / 2` in the basis `{|up>, |down>}`.
pub fn spin_half() -> [Mat<C64>; 3] {
    let h = C64::new(0.5, 0.0);
    let s1 = Mat::from_fn(2, 2, |i, j| if i != j { h } else { ZERO });
    let s2 = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => C64::new(0.0, -0.5),
        (1, 0) => C64::new(0.0, 0.5),
        _ => ZERO,
    });
    let s3 = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => h,
        (1, 1) => -h,
        _ => ZERO,
    });
    [s1, s2, s3]
}

/// Single-mode fermion operators `(a, n)` with `|0>` empty and `|1>` occupied.
pub fn fermion_mode() -> (Mat<C64>, Mat<C64>) {
    let a = Mat::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { ONE } else { ZERO });
    let n = Mat::from_fn(2, 2, |i, j| if (i, j) == (1, 1) { ONE } else { ZERO });
    (a, n)
}

fn k2(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    // a on the first (fast) site, b on the second
    linalg::kron(b.as_ref(), a.as_ref())
}

/// `Phi({x, x+1}) = S1 S1 + S2 S2 + lambda S3 S3`, charge `n_0 = S3`, range 1.
pub fn build_xxz_model(lambda_aniso: f64) -> Result<(Interaction, ChargeSpec)> {
    if !lambda_aniso.is_finite() {
        return Err(Error::InvalidInteraction("anisotropy must be finite".into()));
    }
    let [s1, s2, s3] = spin_half();
    let mut bond = k2(&s1, &s1);
    bond += &k2(&s2, &s2);
    bond += &(k2(&s3, &s3) * faer::Scale(C64::new(lambda_aniso, 0.0)));
    let phi = Interaction::new(1, 2, vec![(vec![0, 1], bond)])?;
    Ok((phi, ChargeSpec::new(s3)?))
}

pub fn build_xx_model() -> Result<(Interaction, ChargeSpec)> {
    build_xxz_model(0.0)
}

/// Jordan-Wigner image of `-t (c+_{x+1} c_x + h.c.) + sum_s v(s) n_x n_{x+s}`
/// with range `r = v.len()` and charge `n_x = c+_x c_x`.
pub fn build_fermion_model(t_hop: f64, v: &[f64]) -> Result<(Interaction, ChargeSpec)> {
    if v.is_empty() {
        return Err(Error::InvalidInteraction(
            "fermion model needs v(1..r) with r >= 1".into(),
        ));
    }
    if !t_hop.is_finite() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInteraction("couplings must be finite".into()));
    }
    let (a, n) = fermion_mode();
    let ad = linalg::adjoint(a.as_ref());
    let scale = |m: Mat<C64>, c: f64| m * faer::Scale(C64::new(c, 0.0));
    // a+_{x+1} a_x + a+_x a_{x+1}
    let mut hop = k2(&a, &ad);
    hop += &k2(&ad, &a);
    let mut nn = scale(hop, -t_hop);
    nn += &scale(k2(&n, &n), v[0]);
    let mut terms = vec![(vec![0, 1], nn)];
    for (s, &vs) in v.iter().enumerate().skip(1) {
        if vs != 0.0 {
            let dist = s as i64 + 1;
            terms.push((vec![0, dist], scale(k2(&n, &n), vs)));
        }
    }
    let phi = Interaction::new(v.len(), 2, terms)?;
    let spec = ChargeSpec::new(n)?;
    let residual = jordan_wigner_residual(&phi, t_hop, v[0])?;
    if residual > 1e-14 {
        return Err(Error::InvalidInteraction(format!(
            "Jordan-Wigner image carries a string (residual {residual:e})"
        )));
    }
    Ok((phi, spec))
}

/// Compares the nearest-neighbour term, built with explicit Jordan-Wigner
/// strings `c_x = prod_{y<x} (1 - 2 n_y) a_x` on three sites, against the
/// stored local term placed on sites `{1, 2}`.
fn jordan_wigner_residual(phi: &Interaction, t_hop: f64, v1: f64) -> Result<f64> {
    let chain = ChainConfig::open(3, 2)?;
    let (a, n) = fermion_mode();
    let parity = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => ONE,
        (1, 1) => -ONE,
        _ => ZERO,
    });
    let c = |x: i64| -> Result<GlobalOperator> {
        let mut op = LocalOperator::single_site(x, a.clone())?;
        for y in 0..x {
            op = op.mul(&LocalOperator::single_site(y, parity.clone())?)?;
        }
        embed(&op, &chain)
    };
    let num = |x: i64| embed(&LocalOperator::single_site(x, n.clone()).unwrap(), &chain);
    let (c1, c2) = (c(1)?, c(2)?);
    let hop = c2.adjoint().mul(&c1)?.add(&c1.adjoint().mul(&c2)?)?;
    let expect = hop
        .scale(C64::new(-t_hop, 0.0))
        .add(&num(1)?.mul(&num(2)?)?.scale(C64::new(v1, 0.0)))?;
    let term = phi
        .terms()
        .iter()
        .find(|t| t.offsets() == [0, 1])
        .ok_or_else(|| Error::InvalidInteraction("missing nearest-neighbour term".into()))?;
    let stored = embed(&term.at(1, 2), &chain)?;
    stored.max_abs_diff(&expect)
}
