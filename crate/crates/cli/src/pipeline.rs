//! Subcommand pipelines. Each stage writes its artifacts atomically and
//! returns the names of any numerical checks that failed.

use nesslab_core::dynamics::{
    deviation_bound_z, empirical_velocity, lr_scan, DeviationNorms, EvolutionContext,
};
use nesslab_core::linalg::C64;
use nesslab_core::models::{
    canonical_current, check_conservation, energy_density, lr_velocity, symmetry_residual, ChargeSpec,
    Interaction,
};
use nesslab_core::operator::{ChainConfig, LocalOperator};
use nesslab_core::spectral::{
    momentum_derivative_check, singularity_diagnostic, sum_rule_from, Correlation, SpectralFunction,
};
use nesslab_core::steady_state::{build_biased_gibbs, verify_ness, StationaryState};
use serde::Serialize;

use crate::config::{ExperimentConfig, Validated};
use crate::output::{fmt_f64, Artifacts};

/// Sum-rule relative error accepted by `sumrule`.
pub const SUM_RULE_TOL: f64 = 0.05;

/// Relative error accepted by the momentum-derivative check.
pub const DERIVATIVE_TOL: f64 = 0.1;

#[derive(Debug)]
pub enum RunError {
    Core(nesslab_core::Error),
    Io(std::io::Error),
}

impl From<nesslab_core::Error> for RunError {
    fn from(e: nesslab_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;

/// Shared state of one invocation.
pub struct Run<'a> {
    pub cfg: &'a ExperimentConfig,
    pub v: Validated,
    pub out: Artifacts,
    pub failed: Vec<String>,
    state: Option<StationaryState>,
}

#[derive(Serialize)]
struct OperatorJson {
    support: Vec<i64>,
    site_dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<&LocalOperator> for OperatorJson {
    fn from(op: &LocalOperator) -> Self {
        let c = op.coeffs();
        let rows = |f: fn(&C64) -> f64| (0..c.nrows()).map(|i| (0..c.ncols()).map(|j| f(&c[(i, j)])).collect()).collect();
        Self { support: op.support().to_vec(), site_dim: op.site_dim(), re: rows(|z| z.re), im: rows(|z| z.im) }
    }
}

#[derive(Serialize)]
struct BuildReport<'a> {
    model: &'a crate::config::ModelSpec,
    n_sites: usize,
    site_dim: usize,
    range: usize,
    lr_velocity: f64,
    empirical_velocity: f64,
    conservation_residual: f64,
    symmetry_residual: f64,
    j0: OperatorJson,
    h: OperatorJson,
}

#[derive(Serialize)]
struct LrSummary {
    velocity: f64,
    empirical_velocity: f64,
    points: usize,
    excluded: usize,
    violations: usize,
}

#[derive(Serialize)]
struct ScanPoint {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "L")]
    l: usize,
    lhs: f64,
    rhs: f64,
    rel_err: Option<f64>,
}

#[derive(Serialize)]
struct SumRuleScan {
    points: Vec<ScanPoint>,
    strictly_improving: bool,
}

#[derive(Serialize)]
struct FlatnessSummary {
    samples: usize,
    violations: usize,
    max_ratio: f64,
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a ExperimentConfig, v: Validated, out: Artifacts) -> Self {
        Self { cfg, v, out, failed: Vec::new(), state: None }
    }

    fn phi(&self) -> &Interaction {
        &self.v.phi
    }

    fn spec(&self) -> &ChargeSpec {
        &self.v.spec
    }

    fn chain(&self) -> &ChainConfig {
        &self.v.chain
    }

    fn fail(&mut self, check: impl Into<String>) {
        let check = check.into();
        log::warn!("check failed: {check}");
        self.failed.push(check);
    }

    pub fn build(&mut self) -> RunResult<()> {
        let (phi, spec, chain) = (self.phi(), self.spec(), self.chain());
        let report = BuildReport {
            model: &self.cfg.model,
            n_sites: chain.n_sites(),
            site_dim: chain.site_dim(),
            range: phi.range(),
            lr_velocity: lr_velocity(phi)?,
            empirical_velocity: empirical_velocity(phi)?,
            conservation_residual: check_conservation(phi, spec, chain)?,
            symmetry_residual: symmetry_residual(phi, spec, 1.0)?,
            j0: (&canonical_current(phi, spec)?).into(),
            h: (&energy_density(phi)?).into(),
        };
        log::info!("conservation residual {:e}", report.conservation_residual);
        let bad = report.conservation_residual > 1e-12;
        self.out.json("build.json", &report)?;
        if bad {
            self.fail("conservation");
        }
        Ok(())
    }

    pub fn verify_lr(&mut self) -> RunResult<()> {
        let ctx = EvolutionContext::from_interaction(self.phi(), self.chain())?;
        let a = self.spec().at(0);
        let scan = lr_scan(&ctx, self.phi(), &a, &a, &self.cfg.scan.x_values, &self.cfg.scan.t_values, None)?;
        let mut csv = String::from("x,t,empirical,bound,excluded\n");
        for r in &scan.rows {
            csv.push_str(&format!("{},{},{},{},{}\n", r.x, fmt_f64(r.t), fmt_f64(r.empirical), fmt_f64(r.bound), r.excluded));
        }
        self.out.text("lr_scan.csv", &csv)?;
        let summary = LrSummary {
            velocity: scan.velocity,
            empirical_velocity: scan.empirical_velocity,
            points: scan.rows.len(),
            excluded: scan.excluded(),
            violations: scan.violations(),
        };
        self.out.json("lr_summary.json", &summary)?;
        if summary.violations > 0 {
            self.fail("lieb_robinson");
        }
        Ok(())
    }

    fn ensure_state(&mut self) -> RunResult<()> {
        if self.state.is_none() {
            let st = build_biased_gibbs(self.phi(), self.spec(), &self.cfg.bias, self.chain())?;
            self.state = Some(st);
        }
        Ok(())
    }

    pub fn ness(&mut self) -> RunResult<()> {
        self.ensure_state()?;
        let state = self.state.as_ref().expect("state built");
        let report = verify_ness(state, &self.v.phi, &self.v.spec, &self.v.geom, None)?;
        self.out.json("state.json", &state.summary(&report))?;
        self.out.json("ness_report.json", &report)?;
        log::info!("omega(j0) = {}, NESS: {}", report.current_value, report.is_ness);
        Ok(())
    }

    pub fn sumrule(&mut self) -> RunResult<()> {
        self.ensure_state()?;
        let state = self.state.as_ref().expect("state built");
        let (phi, spec, chain, geom) = (&self.v.phi, &self.v.spec, &self.v.chain, &self.v.geom);
        let window = &self.cfg.window;
        let corr = Correlation::new(state, phi, spec, geom)?;
        let norms = DeviationNorms::compute(phi, spec, geom, chain)?;
        let c0 = corr.eval(0.0)?;
        let samples = self.cfg.scan.corr_samples;
        let mut csv = String::from("t,C,deviation,Z\n");
        let mut violations = 0;
        let mut max_ratio: f64 = 0.0;
        for i in 0..=samples {
            let t = window.half_width * i as f64 / samples as f64;
            let c = corr.eval(t)?;
            let z = deviation_bound_z(phi, geom, t, &norms)?;
            let dev = (c - c0).abs();
            if dev > z {
                violations += 1;
            }
            if z > 0.0 {
                max_ratio = max_ratio.max(dev / z);
            }
            csv.push_str(&format!("{},{},{},{}\n", fmt_f64(t), fmt_f64(c), fmt_f64(dev), fmt_f64(z)));
        }
        let report = sum_rule_from(&corr, state, window)?;
        let mut points = Vec::new();
        for g in self.cfg.scan_geometries(phi.range())? {
            let rep = sum_rule_from(&Correlation::new(state, phi, spec, &g)?, state, window)?;
            points.push(ScanPoint { m: g.m(), l: g.l(), lhs: rep.lhs, rhs: rep.rhs, rel_err: rep.rel_err });
        }
        let strictly_improving = points.windows(2).all(|w| match (w[0].rel_err, w[1].rel_err) {
            (Some(a), Some(b)) => b < a,
            _ => false,
        });
        let rel_ok = report.rel_err.is_none_or(|r| r <= SUM_RULE_TOL);
        self.out.text("correlation.csv", &csv)?;
        self.out.json("flatness.json", &FlatnessSummary { samples: samples + 1, violations, max_ratio })?;
        self.out.json("sumrule.json", &report)?;
        self.out.json("sumrule_scan.json", &SumRuleScan { points, strictly_improving })?;
        if violations > 0 {
            self.fail("flatness");
        }
        if !rel_ok {
            self.fail("sum_rule");
        }
        Ok(())
    }

    pub fn spectral(&mut self) -> RunResult<()> {
        self.ensure_state()?;
        let state = self.state.as_ref().expect("state built");
        let (phi, spec, geom) = (&self.v.phi, &self.v.spec, &self.v.geom);
        let sf = SpectralFunction::build(state, &spec.at(0), &energy_density(phi)?)?;
        let mut csv = Vec::new();
        sf.write_csv(&mut csv)?;
        let derivative = momentum_derivative_check(state, &sf, &self.cfg.window, phi, spec, geom)?;
        let profile = singularity_diagnostic(&sf, &self.cfg.scan.eps_values);
        self.out.bytes("spectral.csv", &csv)?;
        self.out.json("derivative.json", &derivative)?;
        self.out.json("singularity.json", &profile)?;
        if derivative.rel_err.is_some_and(|r| r > DERIVATIVE_TOL) {
            self.fail("momentum_derivative");
        }
        Ok(())
    }

    pub fn all(&mut self) -> RunResult<()> {
        self.out.text("config.toml", &self.cfg.to_toml())?;
        self.build()?;
        self.verify_lr()?;
        self.ness()?;
        self.sumrule()?;
        self.spectral()
    }
}
