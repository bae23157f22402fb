use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evolution::EvolutionContext;
use crate::error::{Error, Result};
use crate::models::{lr_velocity, Interaction};
use crate::operator::{embed_sparse, ChainConfig, LocalOperator};

/// Inputs of the Lieb-Robinson bound. `d1`, `d2` count the sites of the two
/// supports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LRBoundParams {
    pub d1: usize,
    pub d2: usize,
    pub x: i64,
    pub norm_a: f64,
    pub norm_b: f64,
    pub velocity: f64,
    pub site_dim: usize,
}

impl LRBoundParams {
    pub fn validate(&self) -> Result<()> {
        if self.x.unsigned_abs() as usize <= self.d1 + self.d2 {
            return Err(Error::Geometry(format!(
                "separation |x| = {} must exceed d1 + d2 = {}",
                self.x.abs(),
                self.d1 + self.d2
            )));
        }
        if !(self.velocity > 0.0 && self.velocity.is_finite()) {
            return Err(Error::Precondition(format!("velocity {} must be positive", self.velocity)));
        }
        if self.norm_a < 0.0 || self.norm_b < 0.0 {
            return Err(Error::Precondition("norms must be nonnegative".into()));
        }
        Ok(())
    }
}

/// `2 (N+1)^{d1+d2} ||A|| ||B|| d1 d2 exp(-(|x| - d1 - d2) + 2 V |t|)` with
/// `N + 1` the site dimension.
pub fn lr_bound(p: &LRBoundParams, t: f64) -> Result<f64> {
    p.validate()?;
    if p.norm_a == 0.0 || p.norm_b == 0.0 {
        return Ok(0.0);
    }
    let dd = (p.d1 + p.d2) as f64;
    let prefactor = 2.0 * (p.site_dim as f64).powf(dd) * p.norm_a * p.norm_b * (p.d1 * p.d2) as f64;
    Ok(prefactor * (-(p.x.abs() as f64 - dd) + 2.0 * p.velocity * t.abs()).exp())
}

/// Default empirical light-cone velocity: `4 * max ||Phi(X)|| * r`.
pub fn empirical_velocity(phi: &Interaction) -> Result<f64> {
    Ok(4.0 * phi.max_term_norm()? * phi.range() as f64)
}

/// One grid point of a scan. Excluded points carry `NaN` norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LRRow {
    pub x: i64,
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LRScan {
    pub rows: Vec<LRRow>,
    pub velocity: f64,
    pub empirical_velocity: f64,
}

impl LRScan {
    pub fn included(&self) -> impl Iterator<Item = &LRRow> {
        self.rows.iter().filter(|r| !r.excluded)
    }

    pub fn violations(&self) -> usize {
        self.included().filter(|r| r.empirical > r.bound).count()
    }

    pub fn excluded(&self) -> usize {
        self.rows.iter().filter(|r| r.excluded).count()
    }
}

/// `||[tau_x alpha_t(A), B]||` against [`lr_bound`] over a grid.
///
/// A point is excluded when `|x| <= d1 + d2` or when the light cone wraps,
/// `|x| + 2 v_emp |t| >= n_sites` (periodic chains only).
pub fn lr_scan(
    ctx: &EvolutionContext,
    phi: &Interaction,
    a: &LocalOperator,
    b: &LocalOperator,
    x_values: &[i64],
    t_values: &[f64],
    v_emp: Option<f64>,
) -> Result<LRScan> {
    let chain = ctx.chain();
    let velocity = lr_velocity(phi)?;
    let v_emp = match v_emp {
        Some(v) => v,
        None => empirical_velocity(phi)?,
    };
    let (d1, d2) = (a.support().len(), b.support().len());
    let (norm_a, norm_b) = (a.norm()?, b.norm()?);
    let params = |x| LRBoundParams {
        d1,
        d2,
        x,
        norm_a,
        norm_b,
        velocity,
        site_dim: chain.site_dim(),
    };
    let n = chain.n_sites() as f64;
    let admissible = |x: i64, t: f64| {
        let far = x.unsigned_abs() as usize > d1 + d2;
        let unwrapped = !chain.is_periodic() || (x.abs() as f64 + 2.0 * v_emp * t.abs()) < n;
        far && unwrapped
    };
    let b_eig = ctx.to_eigen(&embed_sparse(b, chain)?)?;
    let periodic = chain.is_periodic();
    let a_eig = if periodic { Some(ctx.to_eigen(&embed_sparse(a, chain)?)?) } else { None };

    let grid: Vec<(i64, f64)> = x_values
        .iter()
        .flat_map(|&x| t_values.iter().map(move |&t| (x, t)))
        .collect();
    let rows: Vec<Result<LRRow>> = grid
        .par_iter()
        .map(|&(x, t)| {
            if !admissible(x, t) {
                let bound = lr_bound(&params(x), t).unwrap_or(f64::NAN);
                return Ok(LRRow { x, t, empirical: f64::NAN, bound, excluded: true });
            }
            let moved = match &a_eig {
                Some(a0) => ctx.evolve_eigen(a0, t).translate(ctx.basis(), x)?,
                None => {
                    let shifted = a.shifted(x);
                    ctx.evolve_eigen(&ctx.to_eigen(&embed_sparse(&shifted, chain)?)?, t)
                }
            };
            let empirical = moved.commutator(&b_eig)?.norm()?;
            Ok(LRRow { x, t, empirical, bound: lr_bound(&params(x), t)?, excluded: false })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    if rows.iter().all(|r| r.excluded) {
        return Err(Error::AllPointsExcluded);
    }
    Ok(LRScan { rows, velocity, empirical_velocity: v_emp })
}

/// Largest admissible `|t|` at separation `x` before the light cone wraps.
pub fn wrap_horizon(chain: &ChainConfig, x: i64, v_emp: f64) -> f64 {
    if !chain.is_periodic() {
        return f64::INFINITY;
    }
    ((chain.n_sites() as f64 - x.abs() as f64) / (2.0 * v_emp)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_xx_model, spin_half};

    #[test]
    fn closed_form_example() {
        let p = LRBoundParams { d1: 1, d2: 1, x: 10, norm_a: 1.0, norm_b: 1.0, velocity: 1.0, site_dim: 2 };
        let v = lr_bound(&p, 0.0).unwrap();
        assert!((v - 8.0 * (-8.0_f64).exp()).abs() < 1e-15);
        assert!((v - 2.684e-3).abs() < 1e-6);
        assert!(lr_bound(&p, 1.0).unwrap() > v);
        let zero = LRBoundParams { norm_a: 0.0, ..p };
        assert_eq!(lr_bound(&zero, 3.0).unwrap(), 0.0);
        let near = LRBoundParams { x: 2, ..p };
        assert!(lr_bound(&near, 0.0).is_err());
    }

    #[test]
    fn small_scan() {
        let chain = ChainConfig::periodic(8, 2).unwrap();
        let (phi, _) = build_xx_model().unwrap();
        let ctx = EvolutionContext::from_interaction(&phi, &chain).unwrap();
        let z = spin_half()[2].clone() * faer::Scale(crate::linalg::C64::new(2.0, 0.0));
        let a = LocalOperator::single_site(0, z.clone()).unwrap();
        let scan = lr_scan(&ctx, &phi, &a, &a, &[1, 3, 4], &[0.0, 0.2, 0.4, 2.0], None).unwrap();
        assert_eq!(scan.violations(), 0);
        for r in scan.included() {
            assert!(r.empirical <= 2.0 + 1e-12);
        }
        let at = |x, t| scan.rows.iter().find(|r| r.x == x && r.t == t).unwrap();
        assert!(at(3, 0.0).empirical < 1e-12);
        assert!(at(3, 0.2).empirical > 0.0);
        assert!(at(1, 0.0).excluded);
        assert!(at(4, 2.0).excluded);
    }
}
