use serde::{Deserialize, Serialize};

use super::window::WindowFunction;
use super::{for_each_pair, quadrature, ReportConfig};
use crate::basis::EigenOperator;
use crate::dynamics::empirical_velocity;
use crate::error::{Error, Result};
use crate::linalg::{self, C64, I};
use crate::models::{current_operator, ChargeSpec, CurrentGeometry, Interaction};
use crate::operator::{embed_sparse, embed_sum, ChainConfig, SparseOperator};
use crate::steady_state::StationaryState;

/// Frequencies closer than this are merged.
pub const FREQUENCY_MERGE_TOL: f64 = 1e-10;

/// `<i[A, B(t)]> = sum_g c_g e^{i w_g t}` with the coefficients of equal
/// frequencies `w = E_m - E_n` merged.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPairs {
    freqs: Vec<f64>,
    coeffs: Vec<C64>,
}

impl CorrelationPairs {
    /// Requires a state diagonal in the joint basis.
    pub fn build(state: &StationaryState, a: &EigenOperator, b: &EigenOperator) -> Result<Self> {
        let p = state.require_diagonal()?;
        let labels = state.basis().labels();
        let mut raw: Vec<(f64, C64)> = Vec::new();
        for_each_pair(a, b, |n, m, anm, bmn| {
            let c = I * (p[n] - p[m]) * anm * bmn;
            if c != C64::new(0.0, 0.0) {
                raw.push((labels[m].energy - labels[n].energy, c));
            }
        });
        Ok(Self::merge(raw))
    }

    fn merge(mut raw: Vec<(f64, C64)>) -> Self {
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut freqs = Vec::new();
        let mut coeffs = Vec::new();
        let mut start = 0;
        while start < raw.len() {
            let mut end = start + 1;
            while end < raw.len() && raw[end].0 - raw[start].0 <= FREQUENCY_MERGE_TOL {
                end += 1;
            }
            let ws: Vec<f64> = raw[start..end].iter().map(|r| r.0).collect();
            let cs: Vec<C64> = raw[start..end].iter().map(|r| r.1).collect();
            freqs.push(linalg::pairwise_sum(&ws) / ws.len() as f64);
            coeffs.push(linalg::pairwise_sum_c(&cs));
            start = end;
        }
        Self { freqs, coeffs }
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn eval(&self, t: f64) -> C64 {
        let terms: Vec<C64> = self
            .freqs
            .iter()
            .zip(&self.coeffs)
            .map(|(w, c)| c * C64::from_polar(1.0, w * t))
            .collect();
        linalg::pairwise_sum_c(&terms)
    }

    /// `int f(t) <i[A, B(t)]> dt = sum_g c_g F(w_g)`.
    pub fn window_integral(&self, window: &WindowFunction) -> C64 {
        let terms: Vec<C64> = self
            .freqs
            .iter()
            .zip(&self.coeffs)
            .map(|(w, c)| c * window.transform(*w))
            .collect();
        linalg::pairwise_sum_c(&terms)
    }
}

/// Largest `|t|` at which the windows' light cones stay clear of the wrap:
/// `n_sites / (2 v_emp)`.
pub fn correlation_horizon(phi: &Interaction, chain: &ChainConfig) -> Result<f64> {
    let v = empirical_velocity(phi)?;
    if v == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(chain.n_sites() as f64 / (2.0 * v))
}

/// `C_{M,L}(t) = <i[N_{[-L,0]}, H_{[-M,M]}(t)]>` prepared for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct Correlation {
    pairs: CorrelationPairs,
    current: f64,
    horizon: f64,
    geom: CurrentGeometry,
}

impl Correlation {
    pub fn new(state: &StationaryState, phi: &Interaction, spec: &ChargeSpec, geom: &CurrentGeometry) -> Result<Self> {
        let chain = state.chain();
        if !chain.is_periodic() {
            return Err(Error::NotPeriodic);
        }
        geom.check_chain(chain)?;
        let basis = state.basis();
        let n_op = window_charge_sparse(spec, geom, chain)?;
        let h_op = window_hamiltonian_sparse(phi, geom, chain)?;
        let pairs = CorrelationPairs::build(state, &basis.transform(&n_op)?, &basis.transform(&h_op)?)?;
        let j0 = current_operator(phi, spec, geom, chain)?;
        let current = state.expectation_sparse(&embed_sparse(&j0, chain)?)?.re;
        Ok(Self { pairs, current, horizon: correlation_horizon(phi, chain)?, geom: *geom })
    }

    pub fn pairs(&self) -> &CorrelationPairs {
        &self.pairs
    }

    /// `omega(j_0)`.
    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn geometry(&self) -> &CurrentGeometry {
        &self.geom
    }

    /// `C(t)` as a complex number; the imaginary part measures rounding.
    pub fn eval_complex(&self, t: f64) -> Result<C64> {
        if t.abs() > self.horizon {
            return Err(Error::HorizonExceeded { t, horizon: self.horizon });
        }
        Ok(self.pairs.eval(t))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.eval_complex(t)?.re)
    }
}

pub(crate) fn window_charge_sparse(spec: &ChargeSpec, geom: &CurrentGeometry, chain: &ChainConfig) -> Result<SparseOperator> {
    let w = geom.charge_window();
    let ops: Vec<_> = w.sites().into_iter().map(|x| spec.at(x)).collect();
    embed_sum(&ops, chain)
}

pub(crate) fn window_hamiltonian_sparse(phi: &Interaction, geom: &CurrentGeometry, chain: &ChainConfig) -> Result<SparseOperator> {
    let w = geom.hamiltonian_window();
    embed_sum(&phi.terms_within(w.lo, w.hi), chain)
}

/// Which operator carries the time dependence in [`correlation_direct`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvolvedSide {
    /// `<i[N, alpha_t(H)]>`.
    Hamiltonian,
    /// `<i[alpha_{-t}(N), H]>`.
    Charge,
}

/// `C_{M,L}(t)` by explicit conjugation of the window operators, without the
/// frequency decomposition of [`Correlation`].
pub fn correlation_direct(
    state: &StationaryState,
    phi: &Interaction,
    spec: &ChargeSpec,
    geom: &CurrentGeometry,
    t: f64,
    side: EvolvedSide,
) -> Result<C64> {
    let chain = state.chain();
    geom.check_chain(chain)?;
    let horizon = correlation_horizon(phi, chain)?;
    if t.abs() > horizon {
        return Err(Error::HorizonExceeded { t, horizon });
    }
    let basis = state.basis();
    let n = basis.transform(&window_charge_sparse(spec, geom, chain)?)?;
    let h = basis.transform(&window_hamiltonian_sparse(phi, geom, chain)?)?;
    let c = match side {
        EvolvedSide::Hamiltonian => n.commutator(&h.evolve(basis, t))?,
        EvolvedSide::Charge => n.evolve(basis, -t).commutator(&h)?,
    };
    Ok(I * state.expectation_eigen(&c)?)
}

/// `C_{M,L}(t)`, refusing times beyond the wrap horizon.
pub fn correlation_c(
    state: &StationaryState,
    phi: &Interaction,
    spec: &ChargeSpec,
    geom: &CurrentGeometry,
    t: f64,
) -> Result<f64> {
    Correlation::new(state, phi, spec, geom)?.eval(t)
}

/// Sum-rule report. `rel_err` is absent when the right side vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRuleReport {
    pub config: ReportConfig,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub rel_err: Option<f64>,
    pub horizon: f64,
    /// `sum_g c_g F(w_g)`, the exact window integral of the trigonometric
    /// sum.
    pub lhs_closed_form: f64,
    pub quadrature_error: f64,
    pub current: f64,
}

/// Relative error, absent when the reference is below `1e-14`.
pub fn relative_error(value: f64, reference: f64) -> Option<f64> {
    if reference.abs() < 1e-14 {
        None
    } else {
        Some((value - reference).abs() / reference.abs())
    }
}

/// `int C(t) f_T(t) dt` against `sqrt(2 pi) omega(j_0) f~_T(0)`.
pub fn sum_rule_check(
    state: &StationaryState,
    phi: &Interaction,
    spec: &ChargeSpec,
    geom: &CurrentGeometry,
    window: &WindowFunction,
) -> Result<SumRuleReport> {
    let corr = Correlation::new(state, phi, spec, geom)?;
    sum_rule_from(&corr, state, window)
}

pub fn sum_rule_from(corr: &Correlation, state: &StationaryState, window: &WindowFunction) -> Result<SumRuleReport> {
    let tt = window.half_width;
    if tt > corr.horizon() {
        return Err(Error::HorizonExceeded { t: tt, horizon: corr.horizon() });
    }
    let integral = quadrature::integrate(|t| corr.pairs.eval(t).re * window.eval(t), -tt, tt, 1e-8)?;
    let lhs = integral.value;
    let rhs = (2.0 * std::f64::consts::PI).sqrt() * corr.current() * window.fourier(0.0);
    Ok(SumRuleReport {
        config: ReportConfig::new(state, corr.geometry(), window),
        lhs,
        rhs,
        abs_err: (lhs - rhs).abs(),
        rel_err: relative_error(lhs, rhs),
        horizon: corr.horizon(),
        lhs_closed_form: corr.pairs.window_integral(window).re,
        quadrature_error: integral.error,
        current: corr.current(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_xx_model;
    use crate::steady_state::{build_biased_gibbs, BiasOperator, BiasSpec};

    fn setup(lambda: f64) -> (StationaryState, Interaction, ChargeSpec, CurrentGeometry) {
        let (phi, spec) = build_xx_model().unwrap();
        let chain = ChainConfig::periodic(8, 2).unwrap();
        let bias = BiasSpec::new(1.0, lambda, BiasOperator::TotalCurrent).unwrap();
        let state = build_biased_gibbs(&phi, &spec, &bias, &chain).unwrap();
        (state, phi, spec, CurrentGeometry::new(4, 2, 1).unwrap())
    }

    #[test]
    fn matches_direct_evolution() {
        let (state, phi, spec, geom) = setup(0.7);
        let corr = Correlation::new(&state, &phi, &spec, &geom).unwrap();
        let chain = state.chain();
        let basis = state.basis();
        let n = basis.transform(&window_charge_sparse(&spec, &geom, chain).unwrap()).unwrap();
        let h = basis.transform(&window_hamiltonian_sparse(&phi, &geom, chain).unwrap()).unwrap();
        for t in [0.0, 0.35, -1.1, 1.9] {
            let c = n.commutator(&h.evolve(basis, t)).unwrap();
            let direct = I * state.expectation_eigen(&c).unwrap();
            let fast = corr.eval_complex(t).unwrap();
            assert!((direct - fast).norm() < 1e-12, "t = {t}");
            assert!(fast.im.abs() < 1e-12);
        }
        assert!(matches!(corr.eval(2.5), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn backward_charge_evolution_agrees() {
        let (state, phi, spec, geom) = setup(0.4);
        for t in [0.2, 1.0, -1.7] {
            let fwd = correlation_direct(&state, &phi, &spec, &geom, t, EvolvedSide::Hamiltonian).unwrap();
            let bwd = correlation_direct(&state, &phi, &spec, &geom, t, EvolvedSide::Charge).unwrap();
            assert!((fwd - bwd).norm() < 1e-9);
        }
    }

    #[test]
    fn starts_at_current() {
        let (state, phi, spec, geom) = setup(0.4);
        let corr = Correlation::new(&state, &phi, &spec, &geom).unwrap();
        assert!((corr.eval(0.0).unwrap() - corr.current()).abs() < 1e-10);
    }

    #[test]
    fn quadrature_agrees_with_closed_form() {
        let (state, phi, spec, geom) = setup(0.7);
        let win = WindowFunction::hann(1.5).unwrap();
        let rep = sum_rule_check(&state, &phi, &spec, &geom, &win).unwrap();
        assert!((rep.lhs - rep.lhs_closed_form).abs() < 1e-9);
        assert!(rep.current.abs() > 1e-3);
        assert!(rep.rel_err.is_some());
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"lhs\"") && json.contains("\"horizon\""));
    }

    #[test]
    fn zero_bias_has_no_relative_error() {
        let (state, phi, spec, geom) = setup(0.0);
        let win = WindowFunction::hann(1.5).unwrap();
        let rep = sum_rule_check(&state, &phi, &spec, &geom, &win).unwrap();
        assert!(rep.lhs.abs() < 1e-12 && rep.rhs.abs() < 1e-12);
        assert_eq!(rep.rel_err, None);
    }
}
