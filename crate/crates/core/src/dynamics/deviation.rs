use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{canonical_current, energy_current_operators, lr_velocity, ChargeSpec, CurrentGeometry, Interaction};
use crate::operator::ChainConfig;

/// Operator norms entering `Z_{M,L}(t)`: the charge density `n`, the right
/// energy current `J`, the charge current `j` and the left energy current
/// `J_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationNorms {
    pub n: f64,
    pub big_j: f64,
    pub j: f64,
    pub big_j0: f64,
}

impl DeviationNorms {
    /// Norms of `n_0`, `J_+`, the canonical `j_0` and `J_-` at the geometry's
    /// `M`.
    pub fn compute(phi: &Interaction, spec: &ChargeSpec, geom: &CurrentGeometry, chain: &ChainConfig) -> Result<Self> {
        let currents = energy_current_operators(phi, geom.m(), chain)?;
        Ok(Self {
            n: spec.norm()?,
            big_j: currents.j_plus.norm()?,
            j: canonical_current(phi, spec)?.norm()?,
            big_j0: currents.j_minus.norm()?,
        })
    }
}

/// `(e^{2V|t|} - 1) / (2V)`, equal to `|t|` at `V = 0`.
fn growth(v: f64, t: f64) -> f64 {
    let x = 2.0 * v * t;
    if x == 0.0 {
        t
    } else {
        x.exp_m1() / (2.0 * v)
    }
}

/// `((e^{2V|t|} - 1) / (2V) - |t|) / (2V)`, equal to `t^2 / 2` at `V = 0`.
fn second_growth(v: f64, t: f64) -> f64 {
    let x = 2.0 * v * t;
    if x < 1e-3 {
        // t^2 * sum_k x^k / (k + 2)!
        let mut term = 0.5;
        let mut acc = 0.0;
        for k in 0..12 {
            acc += term;
            term *= x / (k as f64 + 3.0);
        }
        t * t * acc
    } else {
        (x.exp_m1() - x) / (4.0 * v * v)
    }
}

/// Deviation bound `Z_{M,L}(t)` on `|C_{M,L}(t) - C_{M,L}(0)|`.
///
/// ```text
/// Z = 2 (N+1)^{2r-1} ||n|| ||J|| (2r-1) e^{-M} / (1 - e^{-1}) e^{2r-1} g1
///   + 2 ||j|| ||J_0|| (N+1)^{4r-4} (2r-2)^2 e^{4r-4} (e^{-M} + e^{-(L-M)}) g2
/// ```
/// with `g1 = (e^{2V|t|} - 1)/(2V)`, `g2 = (g1 - |t|)/(2V)` and their
/// `V -> 0` limits.
pub fn deviation_bound_z(phi: &Interaction, geom: &CurrentGeometry, t: f64, norms: &DeviationNorms) -> Result<f64> {
    if geom.range() != phi.range() {
        return Err(Error::Geometry(format!(
            "geometry range {} differs from interaction range {}",
            geom.range(),
            phi.range()
        )));
    }
    for v in [norms.n, norms.big_j, norms.j, norms.big_j0] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Precondition("norms must be finite and nonnegative".into()));
        }
    }
    let v = lr_velocity(phi)?;
    let t = t.abs();
    let r = phi.range() as f64;
    let big_n = phi.site_dim() as f64;
    let (m, l) = (geom.m() as f64, geom.l() as f64);
    let first = 2.0 * big_n.powf(2.0 * r - 1.0) * norms.n * norms.big_j * (2.0 * r - 1.0) * (-m).exp()
        / (1.0 - (-1.0_f64).exp())
        * (2.0 * r - 1.0).exp()
        * growth(v, t);
    let prefactor = 2.0
        * norms.j
        * norms.big_j0
        * big_n.powf(4.0 * r - 4.0)
        * (2.0 * r - 2.0).powi(2)
        * (4.0 * r - 4.0).exp()
        * ((-m).exp() + (-(l - m)).exp());
    // 0 * inf once the growth factor overflows
    let second = if prefactor == 0.0 { 0.0 } else { prefactor * second_growth(v, t) };
    Ok(first + second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_xx_model;

    fn oracle(v: f64, r: f64, n: f64, m: f64, l: f64, t: f64, nn: &DeviationNorms) -> f64 {
        let e = std::f64::consts::E;
        let a = 2.0 * n.powf(2.0 * r - 1.0) * nn.n * nn.big_j * (2.0 * r - 1.0);
        let a = a * e.powf(-m) / (1.0 - 1.0 / e) * e.powf(2.0 * r - 1.0);
        let g1 = (e.powf(2.0 * v * t) - 1.0) / (2.0 * v);
        let b = 2.0 * nn.j * nn.big_j0 * n.powf(4.0 * r - 4.0) * (2.0 * r - 2.0) * (2.0 * r - 2.0);
        let b = b * e.powf(4.0 * r - 4.0) * (e.powf(-m) + e.powf(m - l));
        a * g1 + b * (g1 - t) / (2.0 * v)
    }

    #[test]
    fn xx_against_oracle() {
        let (phi, _) = build_xx_model().unwrap();
        let geom = CurrentGeometry::new(9, 4, 1).unwrap();
        let norms = DeviationNorms { n: 0.5, big_j: 0.7, j: 0.5, big_j0: 0.7 };
        let z = deviation_bound_z(&phi, &geom, 0.5, &norms).unwrap();
        let v = lr_velocity(&phi).unwrap();
        let o = oracle(v, 1.0, 2.0, 4.0, 9.0, 0.5, &norms);
        assert!((z - o).abs() <= 1e-12 * o);
        assert_eq!(deviation_bound_z(&phi, &geom, 0.0, &norms).unwrap(), 0.0);
    }

    #[test]
    fn range_two_second_term() {
        let phi = Interaction::random(2, 2, 4).unwrap();
        let geom = CurrentGeometry::new(9, 4, 2).unwrap();
        let norms = DeviationNorms { n: 0.5, big_j: 1.3, j: 0.9, big_j0: 1.1 };
        let v = lr_velocity(&phi).unwrap();
        for t in [1e-4, 1e-3, 4e-3] {
            let z = deviation_bound_z(&phi, &geom, t, &norms).unwrap();
            let o = oracle(v, 2.0, 2.0, 4.0, 9.0, t, &norms);
            assert!((z - o).abs() <= 1e-9 * o, "{z} {o}");
        }
    }

    #[test]
    fn monotone() {
        let phi = Interaction::random(2, 2, 4).unwrap();
        let norms = DeviationNorms { n: 0.5, big_j: 1.0, j: 1.0, big_j0: 1.0 };
        let g4 = CurrentGeometry::new(10, 4, 2).unwrap();
        let g5 = CurrentGeometry::new(11, 5, 2).unwrap();
        let mut last = 0.0;
        for i in 0..20 {
            let t = 1e-4 * i as f64;
            let z = deviation_bound_z(&phi, &g4, t, &norms).unwrap();
            assert!(z >= last);
            last = z;
            if i > 0 {
                assert!(deviation_bound_z(&phi, &g5, t, &norms).unwrap() < z);
            }
        }
    }

    #[test]
    fn zero_velocity_limits() {
        assert_eq!(growth(0.0, 0.3), 0.3);
        assert!((second_growth(0.0, 0.3) - 0.045).abs() < 1e-15);
        let v = 1e-6;
        let direct = ((2.0 * v * 0.3_f64).exp_m1() / (2.0 * v) - 0.3) / (2.0 * v);
        assert!((second_growth(v, 0.3) - direct).abs() < 1e-6);
    }
}
