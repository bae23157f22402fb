//! Biased Gibbs ensembles carrying a stationary current, and checks of the
//! stationarity, translation-invariance and nonzero-current conditions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{EigenOperator, JointBasis};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::models::{
    canonical_current, chain_charge, chain_hamiltonian, current_operator, ChargeSpec, CurrentGeometry,
    Interaction,
};
use crate::operator::{embed_sparse, embed_sum, translate, ChainConfig, GlobalOperator, LocalOperator, SparseOperator};

/// Default threshold on `|omega(j_0)|` for classifying a state as carrying a
/// current.
pub const CURRENT_THRESHOLD: f64 = 1e-6;

/// Residual tolerance for the stationarity and translation checks.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasOperator {
    /// `J_tot = sum_x tau_x(j_0)`.
    #[default]
    TotalCurrent,
    /// `N_chain = sum_x tau_x(n)`.
    TotalCharge,
}

/// `rho ∝ exp(-beta (H - lambda B))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBias")]
pub struct BiasSpec {
    pub beta: f64,
    pub lambda: f64,
    #[serde(default)]
    pub conserved_op: BiasOperator,
}

#[derive(Deserialize)]
struct RawBias {
    beta: f64,
    lambda: f64,
    #[serde(default)]
    conserved_op: BiasOperator,
}

impl TryFrom<RawBias> for BiasSpec {
    type Error = Error;

    fn try_from(r: RawBias) -> Result<Self> {
        BiasSpec::new(r.beta, r.lambda, r.conserved_op)
    }
}

impl BiasSpec {
    pub fn new(beta: f64, lambda: f64, conserved_op: BiasOperator) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInteraction(format!("beta = {beta} must be positive and finite")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidInteraction(format!("lambda = {lambda} must be finite")));
        }
        Ok(Self { beta, lambda, conserved_op })
    }
}

/// Total current `sum_x tau_x(j_0)` on a periodic chain.
pub fn total_current(phi: &Interaction, spec: &ChargeSpec, chain: &ChainConfig) -> Result<SparseOperator> {
    if !chain.is_periodic() {
        return Err(Error::NotPeriodic);
    }
    let j0 = canonical_current(phi, spec)?;
    if j0.support().is_empty() {
        return Ok(SparseOperator::zeros(chain.dim()));
    }
    let ops = (0..chain.n_sites() as i64)
        .map(|x| translate(&j0, x, chain))
        .collect::<Result<Vec<_>>>()?;
    embed_sum(&ops, chain)
}

/// Density operator given in a joint eigenbasis of `H` and `T`. Gibbs-type
/// states are diagonal there; general states keep their full eigenframe
/// matrix.
#[derive(Debug, Clone)]
pub struct StationaryState {
    basis: Arc<JointBasis>,
    hamiltonian: SparseOperator,
    probs: Vec<f64>,
    coherent: Option<EigenOperator>,
    log_partition: f64,
    bias: Option<BiasSpec>,
}

/// Builds `rho ∝ exp(-beta (H - lambda B))` on a periodic chain, refusing
/// bias operators that do not commute with `H`.
pub fn build_biased_gibbs(
    phi: &Interaction,
    spec: &ChargeSpec,
    bias: &BiasSpec,
    chain: &ChainConfig,
) -> Result<StationaryState> {
    if !chain.is_periodic() {
        return Err(Error::NotPeriodic);
    }
    let h = chain_hamiltonian(phi, chain)?;
    let b = match bias.conserved_op {
        BiasOperator::TotalCurrent => total_current(phi, spec, chain)?,
        BiasOperator::TotalCharge => chain_charge(spec, chain)?,
    };
    let basis = JointBasis::build(chain, &h, Some(&b))?;
    StationaryState::gibbs(Arc::new(basis), h, bias)
}

impl StationaryState {
    /// Gibbs weights from the energy and bias labels of `basis`.
    pub fn gibbs(basis: Arc<JointBasis>, hamiltonian: SparseOperator, bias: &BiasSpec) -> Result<Self> {
        if bias.lambda != 0.0 && !basis.has_bias() {
            return Err(Error::Precondition("basis carries no bias labels".into()));
        }
        let w: Vec<f64> = basis
            .labels()
            .iter()
            .map(|l| -bias.beta * (l.energy - bias.lambda * l.bias))
            .collect();
        let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = w.iter().map(|v| (v - top).exp()).collect();
        let z = linalg::pairwise_sum(&e);
        let probs = e.iter().map(|v| v / z).collect();
        Ok(Self {
            basis,
            hamiltonian,
            probs,
            coherent: None,
            log_partition: top + z.ln(),
            bias: Some(*bias),
        })
    }

    /// State with explicit eigenframe probabilities.
    pub fn from_probabilities(basis: Arc<JointBasis>, hamiltonian: SparseOperator, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: probs.len() });
        }
        check_probs(&probs)?;
        Ok(Self { basis, hamiltonian, probs, coherent: None, log_partition: f64::NAN, bias: None })
    }

    /// General density matrix given in the eigenframe. It must be Hermitian,
    /// with unit trace and nonnegative diagonal.
    pub fn from_eigen_density(basis: Arc<JointBasis>, hamiltonian: SparseOperator, rho: EigenOperator) -> Result<Self> {
        if rho.dim() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: rho.dim() });
        }
        let herm = rho.sub(&rho.adjoint())?.max_abs();
        if herm > 1e-12 {
            return Err(Error::NotHermitian { residual: herm });
        }
        let probs: Vec<f64> = (0..rho.dim()).map(|n| rho.get(n, n).re).collect();
        check_probs(&probs)?;
        Ok(Self { basis, hamiltonian, probs, coherent: Some(rho), log_partition: f64::NAN, bias: None })
    }

    pub fn basis(&self) -> &JointBasis {
        &self.basis
    }

    pub fn shared_basis(&self) -> Arc<JointBasis> {
        Arc::clone(&self.basis)
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.hamiltonian
    }

    pub fn chain(&self) -> &ChainConfig {
        self.basis.chain()
    }

    /// Diagonal of the density matrix in the eigenframe.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn bias(&self) -> Option<&BiasSpec> {
        self.bias.as_ref()
    }

    pub fn is_diagonal(&self) -> bool {
        self.coherent.is_none()
    }

    /// Errors unless the state is diagonal in the joint basis.
    pub fn require_diagonal(&self) -> Result<&[f64]> {
        if self.coherent.is_some() {
            return Err(Error::Precondition("state is not diagonal in the joint eigenbasis".into()));
        }
        Ok(&self.probs)
    }

    /// `log tr exp(-beta (H - lambda B))` for Gibbs states, `NaN` otherwise.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    /// `tr(rho A)` for an operator in the eigenframe.
    pub fn expectation_eigen(&self, a: &EigenOperator) -> Result<C64> {
        match &self.coherent {
            None => a.weighted_trace(&self.probs),
            Some(rho) => {
                let p = rho.mul(a)?;
                let ones = vec![1.0; p.dim()];
                p.weighted_trace(&ones)
            }
        }
    }

    pub fn expectation_sparse(&self, a: &SparseOperator) -> Result<C64> {
        self.expectation_eigen(&self.basis.transform(a)?)
    }

    /// `tr(rho A)`.
    pub fn expectation(&self, a: &GlobalOperator) -> Result<C64> {
        if a.dim() != self.basis.dim() {
            return Err(Error::DimensionMismatch { expected: self.basis.dim(), found: a.dim() });
        }
        self.expectation_sparse(&SparseOperator::from_global(a))
    }

    pub fn expectation_local(&self, a: &LocalOperator) -> Result<C64> {
        self.expectation_sparse(&embed_sparse(a, self.chain())?)
    }

    /// `||[rho, X]||` for `X` given in the computational basis.
    pub fn commutator_residual(&self, x: &SparseOperator) -> Result<f64> {
        let xe = self.basis.transform(x)?;
        match &self.coherent {
            Some(rho) => rho.commutator(&xe)?.norm(),
            None => {
                let p = &self.probs;
                xe.scale_entries(|n, m| C64::new(p[n] - p[m], 0.0)).norm()
            }
        }
    }

    /// JSON summary `{n_sites, site_dim, beta, lambda, current, residuals,
    /// spectrum: [[E, k, p], ...]}`.
    pub fn summary(&self, report: &VerificationReport) -> StateSummary {
        let chain = self.chain();
        StateSummary {
            n_sites: chain.n_sites(),
            site_dim: chain.site_dim(),
            beta: self.bias.map(|b| b.beta),
            lambda: self.bias.map(|b| b.lambda),
            current: report.current_value,
            residuals: Residuals {
                stationarity: report.stationarity_residual,
                translation: report.translation_residual,
                symmetry: report.symmetry_residual,
                current_profile: report.current_profile_deviation,
            },
            is_ness: report.is_ness,
            spectrum: self
                .basis
                .labels()
                .iter()
                .zip(&self.probs)
                .map(|(l, p)| [l.energy, l.momentum, *p])
                .collect(),
        }
    }
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|p| !(p.is_finite() && *p >= -1e-15)) {
        return Err(Error::Precondition("probabilities must be nonnegative".into()));
    }
    let total = linalg::pairwise_sum(probs);
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub stationarity: f64,
    pub translation: f64,
    pub symmetry: f64,
    pub current_profile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub n_sites: usize,
    pub site_dim: usize,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub current: f64,
    pub residuals: Residuals,
    pub is_ness: bool,
    pub spectrum: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// `||[rho, H]||`.
    pub stationarity_residual: f64,
    /// `||[rho, T]||`; infinite when the chain has no translation.
    pub translation_residual: f64,
    /// `omega(j_0)`.
    pub current_value: f64,
    /// `||[rho, N_chain]||`.
    pub symmetry_residual: f64,
    /// `max_x |omega(tau_x j_0) - omega(j_0)|`.
    pub current_profile_deviation: f64,
    pub threshold: f64,
    pub is_stationary: bool,
    pub is_translation_invariant: bool,
    pub carries_current: bool,
    pub is_ness: bool,
    pub preserves_symmetry: bool,
}

/// Measures the three defining conditions and the charge-symmetry residual.
pub fn verify_ness(
    state: &StationaryState,
    phi: &Interaction,
    spec: &ChargeSpec,
    geom: &CurrentGeometry,
    threshold: Option<f64>,
) -> Result<VerificationReport> {
    let chain = *state.chain();
    let threshold = threshold.unwrap_or(CURRENT_THRESHOLD);
    let stationarity = state.commutator_residual(state.hamiltonian())?;
    let translation = if chain.is_periodic() {
        state.commutator_residual(&SparseOperator::permutation(&chain.shift_permutation()))?
    } else {
        f64::INFINITY
    };
    let symmetry = state.commutator_residual(&chain_charge(spec, &chain)?)?;
    let j0 = current_operator(phi, spec, geom, &chain)?;
    let current = state.expectation_local(&j0)?;
    let mut profile: f64 = 0.0;
    if chain.is_periodic() {
        let j0e = state.basis.transform(&embed_sparse(&j0, &chain)?)?;
        for x in 1..chain.n_sites() as i64 {
            let v = state.expectation_eigen(&j0e.translate(&state.basis, x)?)?;
            profile = profile.max((v - current).norm());
        }
    }
    let is_stationary = stationarity <= RESIDUAL_TOL;
    let is_translation_invariant = translation <= RESIDUAL_TOL;
    let carries_current = current.re.abs() > threshold;
    Ok(VerificationReport {
        stationarity_residual: stationarity,
        translation_residual: translation,
        current_value: current.re,
        symmetry_residual: symmetry,
        current_profile_deviation: profile,
        threshold,
        is_stationary,
        is_translation_invariant,
        carries_current,
        is_ness: is_stationary && is_translation_invariant && carries_current,
        preserves_symmetry: symmetry <= RESIDUAL_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_xx_model, build_xxz_model};

    fn xx_state(n: usize, beta: f64, lambda: f64) -> (StationaryState, Interaction, ChargeSpec, ChainConfig) {
        let chain = ChainConfig::periodic(n, 2).unwrap();
        let (phi, spec) = build_xx_model().unwrap();
        let bias = BiasSpec::new(beta, lambda, BiasOperator::TotalCurrent).unwrap();
        let state = build_biased_gibbs(&phi, &spec, &bias, &chain).unwrap();
        (state, phi, spec, chain)
    }

    #[test]
    fn biased_state_carries_current() {
        let (state, phi, spec, _) = xx_state(8, 1.0, 0.5);
        let geom = CurrentGeometry::new(4, 2, 1).unwrap();
        let rep = verify_ness(&state, &phi, &spec, &geom, None).unwrap();
        assert!(rep.is_ness, "{rep:?}");
        assert!(rep.preserves_symmetry);
        assert!(rep.current_value.abs() > 1e-3);
        assert!(rep.current_profile_deviation < 1e-10);
        let (flipped, ..) = xx_state(8, 1.0, -0.5);
        let back = verify_ness(&flipped, &phi, &spec, &geom, None).unwrap();
        assert!((back.current_value + rep.current_value).abs() < 1e-10);
    }

    #[test]
    fn unbiased_state_has_no_current() {
        let (state, phi, spec, _) = xx_state(8, 1.0, 0.0);
        let geom = CurrentGeometry::new(4, 2, 1).unwrap();
        let rep = verify_ness(&state, &phi, &spec, &geom, None).unwrap();
        assert!(rep.current_value.abs() < 1e-12);
        assert!(rep.is_stationary && !rep.is_ness);
    }

    #[test]
    fn expectation_basics() {
        let (state, ..) = xx_state(6, 0.7, 0.3);
        let id = GlobalOperator::identity(64);
        assert!((state.expectation(&id).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
        let probs_sum: f64 = state.probs().iter().sum();
        assert!((probs_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn anisotropic_bias_is_refused() {
        let chain = ChainConfig::periodic(6, 2).unwrap();
        let (phi, spec) = build_xxz_model(0.5).unwrap();
        let bias = BiasSpec::new(1.0, 0.5, BiasOperator::TotalCurrent).unwrap();
        let err = build_biased_gibbs(&phi, &spec, &bias, &chain).unwrap_err();
        assert!(matches!(err, Error::NonCommutingBias { .. }));
        let open = ChainConfig::open(6, 2).unwrap();
        let (phi, spec) = build_xx_model().unwrap();
        assert_eq!(build_biased_gibbs(&phi, &spec, &bias, &open).unwrap_err(), Error::NotPeriodic);
    }

    #[test]
    fn bias_spec_rejects_bad_beta() {
        assert!(BiasSpec::new(0.0, 0.1, BiasOperator::TotalCurrent).is_err());
        assert!(BiasSpec::new(f64::INFINITY, 0.1, BiasOperator::TotalCurrent).is_err());
        let s: BiasSpec = serde_json::from_str(r#"{"beta": 1.0, "lambda": 0.5}"#).unwrap();
        assert_eq!(s.conserved_op, BiasOperator::TotalCurrent);
        assert!(serde_json::from_str::<BiasSpec>(r#"{"beta": -1.0, "lambda": 0.5}"#).is_err());
    }
}
