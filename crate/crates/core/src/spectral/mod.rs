//! Current-correlation sum rules and the spectral measure of charge-energy
//! correlations.

mod correlation;
mod function;
pub mod quadrature;
mod derivative;
mod window;

use serde::{Deserialize, Serialize};

pub use correlation::{
    correlation_c, correlation_direct, correlation_horizon, relative_error, sum_rule_check, sum_rule_from, Correlation,
    CorrelationPairs, EvolvedSide, SumRuleReport, FREQUENCY_MERGE_TOL,
};
pub use function::{SpectralEntry, SpectralFunction};
pub use derivative::{
    momentum_derivative_check, pair_integral, singularity_diagnostic, DerivativeReport, SingularityFraction,
    SingularityReport, MOMENT_FLOOR,
};
pub use window::{WindowFunction, WindowKind};

use crate::basis::EigenOperator;
use crate::linalg::C64;
use crate::models::CurrentGeometry;
use crate::steady_state::StationaryState;

/// Run parameters echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub n_sites: usize,
    pub site_dim: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub window: WindowFunction,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
}

impl ReportConfig {
    pub fn new(state: &StationaryState, geom: &CurrentGeometry, window: &WindowFunction) -> Self {
        let chain = state.chain();
        Self {
            n_sites: chain.n_sites(),
            site_dim: chain.site_dim(),
            l: geom.l(),
            m: geom.m(),
            window: *window,
            beta: state.bias().map(|b| b.beta),
            lambda: state.bias().map(|b| b.lambda),
        }
    }
}

/// Calls `f(n, m, a_nm, b_mn)` for every stored entry `a_nm` whose partner
/// block of `b` exists.
pub(crate) fn for_each_pair(a: &EigenOperator, b: &EigenOperator, mut f: impl FnMut(usize, usize, C64, C64)) {
    for ((s, t), ab) in a.blocks() {
        let Some(bb) = b.block(*t, *s) else { continue };
        let (os, ot) = (a.offset(*s), a.offset(*t));
        for j in 0..ab.ncols() {
            for i in 0..ab.nrows() {
                f(os + i, ot + j, ab[(i, j)], bb[(j, i)]);
            }
        }
    }
}
