use super::interaction::Interaction;
use super::windows::{window_hamiltonian, Interval};
use crate::error::{Error, Result};
use crate::linalg;
use crate::operator::{ChainConfig, LocalOperator};

/// Telescoping window `I_s`: `[-m, m]` for `s = 2m + 1`, `[-m + 1, m]` for
/// `s = 2m`.
pub fn telescoping_window(s: usize) -> Interval {
    let m = (s / 2) as i64;
    if s % 2 == 1 {
        Interval { lo: -m, hi: m }
    } else {
        Interval { lo: -m + 1, hi: m }
    }
}

fn h_or_zero(phi: &Interaction, lo: i64, hi: i64) -> Result<LocalOperator> {
    if hi < lo {
        Ok(LocalOperator::zero(phi.site_dim()))
    } else {
        window_hamiltonian(phi, Interval { lo, hi })
    }
}

/// `Phi_s = H_{I_s} - H_{I_s minus right end} - H_{I_s minus left end}
/// + H_{I_s minus both ends}`: the terms whose span is exactly `I_s`.
pub fn telescoping_term(phi: &Interaction, s: usize) -> Result<LocalOperator> {
    if s == 0 {
        return Err(Error::Precondition("telescoping index starts at 1".into()));
    }
    let w = telescoping_window(s);
    let full = window_hamiltonian(phi, w)?;
    if s == 1 {
        return Ok(full);
    }
    let no_right = h_or_zero(phi, w.lo, w.hi - 1)?;
    let no_left = h_or_zero(phi, w.lo + 1, w.hi)?;
    let interior = h_or_zero(phi, w.lo + 1, w.hi - 1)?;
    full.sub(&no_right)?.sub(&no_left)?.add(&interior)
}

/// `h = sum_{s=1}^{2r+1} Phi_s`, reduced to its true support.
pub fn energy_density(phi: &Interaction) -> Result<LocalOperator> {
    let r = phi.range();
    let support = telescoping_window(2 * r + 1).sites();
    let dim = phi.site_dim().pow(support.len() as u32);
    let mut acc = linalg::zeros(dim, dim);
    for s in 1..=2 * r + 1 {
        acc += telescoping_term(phi, s)?.extend_to(&support)?.coeffs();
    }
    LocalOperator::new(support, phi.site_dim(), acc)?.reduce_support(super::current::SUPPORT_TOL)
}

/// Boundary complements `(C_{-M}, C_M)` in
/// `H_{[-M,M]} = sum_{y=-M+r}^{M-r} tau_y(h) + C_{-M} + C_M`, on
/// `[-M, -M+2r]` and `[M-2r, M]`.
pub fn boundary_complements(
    phi: &Interaction,
    m: usize,
    chain: &ChainConfig,
) -> Result<(LocalOperator, LocalOperator)> {
    let r = phi.range() as i64;
    let mi = m as i64;
    if mi < r {
        return Err(Error::Geometry(format!("M = {m} < r = {r}")));
    }
    if chain.n_sites() < 2 * m + 1 {
        return Err(Error::Geometry(format!(
            "window [-{m}, {m}] does not fit on {} sites",
            chain.n_sites()
        )));
    }
    let d = phi.site_dim();
    let left = Interval::new(-mi, (-mi + 2 * r).min(mi))?;
    let right = Interval::new((mi - 2 * r).max(-mi), mi)?;
    let mut c_minus = LocalOperator::zero(d).extend_to(&left.sites())?;
    let mut c_plus = LocalOperator::zero(d).extend_to(&right.sites())?;
    for t in phi.terms() {
        let delta = t.diameter();
        // shift placing the term's span on the telescoping window I_{delta+1}
        let anchor = -(delta / 2);
        for z in -mi..=mi - delta {
            let y = z - anchor;
            if y < -mi + r {
                c_minus = c_minus.add(&t.at(z, d))?;
            } else if y > mi - r {
                c_plus = c_plus.add(&t.at(z, d))?;
            }
        }
    }
    Ok((c_minus, c_plus))
}

/// Entrywise residual of the reconstruction identity on `[-M, M]`.
pub fn reconstruction_residual(phi: &Interaction, m: usize, chain: &ChainConfig) -> Result<f64> {
    let r = phi.range() as i64;
    let mi = m as i64;
    let h = energy_density(phi)?;
    let (cm, cp) = boundary_complements(phi, m, chain)?;
    let window = Interval::new(-mi, mi)?;
    let sites = window.sites();
    let mut rebuilt = cm.add(&cp)?.extend_to(&sites)?;
    for y in -mi + r..=mi - r {
        rebuilt = rebuilt.add(&h.shifted(y))?;
    }
    let full = window_hamiltonian(phi, window)?;
    full.max_abs_diff(&rebuilt)
}
