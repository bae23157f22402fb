use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::correlation::{
    relative_error, window_charge_sparse, window_hamiltonian_sparse, Correlation, CorrelationPairs,
};
use super::function::SpectralFunction;
use super::window::WindowFunction;
use super::ReportConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::models::{chain_charge, energy_density, ChargeSpec, CurrentGeometry, Interaction};
use crate::operator::embed_sum;
use crate::steady_state::{StationaryState, RESIDUAL_TOL};

/// `int f(t) <i[n_x, h_y(t)]> dt` at `z = x - y`, from the spectral atoms:
/// `2 Re sum w e^{i dk z} F(de)`.
pub fn pair_integral(sf: &SpectralFunction, window: &WindowFunction, z: i64) -> f64 {
    let terms: Vec<C64> = sf
        .entries
        .iter()
        .map(|e| e.weight * C64::from_polar(window.transform(e.de), e.dk_value * z as f64))
        .collect();
    2.0 * linalg::pairwise_sum_c(&terms).re
}

/// Number of pairs `x in [-L, 0]`, `y in [-M, M]` with `x - y = z`.
fn pair_count(l: i64, m: i64, z: i64) -> i64 {
    // y ranges over [-M, M] intersected with [-L - z, -z]
    let lo = (-m).max(-l - z);
    let hi = m.min(-z);
    (hi - lo + 1).max(0)
}

/// Decomposition of the windowed sum rule into pair sums over `z = x - y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub config: ReportConfig,
    /// `-(2 pi)^{-1/2} sum_{|z| <= M} z I(z)`.
    pub lhs: f64,
    /// `omega(j_0) f~_T(0)`.
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: Option<f64>,
    pub horizon: f64,
    /// Pair sum left over after `e9` and `e10` at the given `L`.
    pub e8: f64,
    /// `(2M + 1) sum_{-n/2 <= z < -M} I(z)`, the tail over far pairs with
    /// `z` taken in minimal-image form on the ring.
    pub e8_literal: f64,
    /// `(M + 1) sum_{|z| <= M} I(z)`.
    pub e9: f64,
    /// `-sum_{|z| <= M} z I(z)`.
    pub e10: f64,
    /// Contribution of `H_{[-M,M]} - sum_y tau_y h`.
    pub bnd: f64,
    /// `int f_T C dt` in closed form.
    pub sum_rule_lhs: f64,
    /// `|sum_rule_lhs - (e8 + e9 + e10 + bnd)|`.
    pub identity_residual: f64,
    /// `|bnd| / |omega(j_0) F(0)|`.
    pub consistency: Option<f64>,
    pub current: f64,
}

/// Checks `-(2 pi)^{-1/2} sum_z z I(z) = omega(j_0) f~_T(0)` where `I(z)` is
/// the windowed charge-energy pair correlation taken from `sf`, which must
/// be built from `spec.at(0)` and the energy density of `phi`.
///
/// Refuses states that do not commute with the total charge.
pub fn momentum_derivative_check(
    state: &StationaryState,
    sf: &SpectralFunction,
    window: &WindowFunction,
    phi: &Interaction,
    spec: &ChargeSpec,
    geom: &CurrentGeometry,
) -> Result<DerivativeReport> {
    let chain = state.chain();
    if sf.n_sites != chain.n_sites() {
        return Err(Error::DimensionMismatch { expected: chain.n_sites(), found: sf.n_sites });
    }
    let sym = state.commutator_residual(&chain_charge(spec, chain)?)?;
    if sym > RESIDUAL_TOL {
        return Err(Error::Precondition(format!(
            "state does not commute with the total charge (residual {sym:e})"
        )));
    }
    let corr = Correlation::new(state, phi, spec, geom)?;
    if window.half_width > corr.horizon() {
        return Err(Error::HorizonExceeded { t: window.half_width, horizon: corr.horizon() });
    }
    let (l, m) = (geom.l() as i64, geom.m() as i64);
    let inner: Vec<(i64, f64)> = (-m..=m).map(|z| (z, pair_integral(sf, window, z))).collect();
    let sum_of = |f: &dyn Fn(i64, f64) -> f64, zs: &[(i64, f64)]| -> f64 {
        let v: Vec<f64> = zs.iter().map(|&(z, i)| f(z, i)).collect();
        linalg::pairwise_sum(&v)
    };
    let e9 = (m + 1) as f64 * sum_of(&|_, i| i, &inner);
    let e10 = -sum_of(&|z, i| z as f64 * i, &inner);
    let all: Vec<(i64, f64)> = (-l - m..=m).map(|z| (z, pair_integral(sf, window, z))).collect();
    let paired = sum_of(&|z, i| pair_count(l, m, z) as f64 * i, &all);
    let e8 = paired - e9 - e10;
    // tail z < -M in minimal-image coordinates of the ring
    let half = (sf.n_sites / 2) as i64;
    let outer: Vec<(i64, f64)> = (-half..-m).map(|z| (z, pair_integral(sf, window, z))).collect();
    let e8_literal = (2 * m + 1) as f64 * sum_of(&|_, i| i, &outer);

    let basis = state.basis();
    let h = energy_density(phi)?;
    let translates: Vec<_> = (-m..=m).map(|y| h.shifted(y)).collect();
    let c_bnd = window_hamiltonian_sparse(phi, geom, chain)?.sub(&embed_sum(&translates, chain)?)?;
    let n_l = basis.transform(&window_charge_sparse(spec, geom, chain)?)?;
    let bnd = CorrelationPairs::build(state, &n_l, &basis.transform(&c_bnd)?)?
        .window_integral(window)
        .re;

    let sum_rule_lhs = corr.pairs().window_integral(window).re;
    let current = corr.current();
    let full = current * window.transform(0.0);
    let lhs = e10 / (2.0 * PI).sqrt();
    let rhs = current * window.fourier(0.0);
    Ok(DerivativeReport {
        config: ReportConfig::new(state, geom, window),
        lhs,
        rhs,
        abs_err: (lhs - rhs).abs(),
        rel_err: relative_error(lhs, rhs),
        horizon: corr.horizon(),
        e8,
        e8_literal,
        e9,
        e10,
        bnd,
        sum_rule_lhs,
        identity_residual: (sum_rule_lhs - (e8 + e9 + e10 + bnd)).abs(),
        consistency: (full.abs() >= 1e-14).then(|| bnd.abs() / full.abs()),
        current,
    })
}

/// Below this total first moment the state carries no current and the
/// diagnostic makes no claim.
pub const MOMENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityFraction {
    pub eps: f64,
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub n_sites: usize,
    /// `sum mu`, the unwindowed first moment `-sum_z z 2 Re G(z, 0)`.
    pub total: f64,
    pub fractions: Vec<SingularityFraction>,
    pub status: String,
}

/// Fraction of the first moment `mu(dk, de) = -sum_{|z| <= R} z 2 Re(w e^{i dk z})`,
/// `R = floor((n - 1) / 2)`, carried by atoms with `|de| < eps`. Signed: atoms
/// may contribute with either sign.
pub fn singularity_diagnostic(sf: &SpectralFunction, eps: &[f64]) -> SingularityReport {
    let r = ((sf.n_sites.max(1) - 1) / 2) as i64;
    let mu: Vec<(f64, f64)> = sf
        .entries
        .iter()
        .map(|e| {
            let terms: Vec<f64> = (-r..=r)
                .map(|z| -(z as f64) * 2.0 * (e.weight * C64::from_polar(1.0, e.dk_value * z as f64)).re)
                .collect();
            (e.de, linalg::pairwise_sum(&terms))
        })
        .collect();
    let all: Vec<f64> = mu.iter().map(|m| m.1).collect();
    let total = linalg::pairwise_sum(&all);
    let claim = total.abs() > MOMENT_FLOOR;
    let fractions = eps
        .iter()
        .map(|&e0| {
            let part: Vec<f64> = mu.iter().filter(|m| m.0.abs() < e0).map(|m| m.1).collect();
            SingularityFraction { eps: e0, fraction: claim.then(|| linalg::pairwise_sum(&part) / total) }
        })
        .collect();
    SingularityReport {
        n_sites: sf.n_sites,
        total,
        fractions,
        status: if claim { "ok".into() } else { "no current, no singularity claim".into() },
    }
}
