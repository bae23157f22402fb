use crate::error::{Error, Result};

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes from Newton iteration on `P_n`, started at the Chebyshev-like
    /// guesses `cos(pi (i + 3/4) / (n + 1/2))`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Composite rule over `panels` equal panels of `[a, b]`.
    pub fn composite<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut parts = Vec::with_capacity(panels);
        for p in 0..panels {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            let mut acc = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                acc += w * f(mid + 0.5 * h * x);
            }
            parts.push(0.5 * h * acc);
        }
        crate::linalg::pairwise_sum(&parts)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Order of the panel rule used by [`integrate`].
pub const PANEL_ORDER: usize = 16;

/// Minimum number of nodes per unit length.
pub const NODES_PER_UNIT: usize = 64;

/// Result of an adaptive composite integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Difference between the last two refinements.
    pub error: f64,
    pub panels: usize,
}

/// Composite Gauss-Legendre integration of `f` over `[a, b]` with at least
/// [`NODES_PER_UNIT`] nodes per unit length, doubling the panel count until
/// successive values agree to `tol * max(1, |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::Precondition(format!("invalid interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, panels: 0 });
    }
    let rule = GaussLegendre::new(PANEL_ORDER);
    let min_panels = (((b - a) * NODES_PER_UNIT as f64) / PANEL_ORDER as f64).ceil().max(1.0) as usize;
    let mut panels = min_panels;
    let mut prev = rule.composite(&f, a, b, panels);
    for _ in 0..16 {
        panels *= 2;
        let next = rule.composite(&f, a, b, panels);
        let err = (next - prev).abs();
        if err <= tol * next.abs().max(1.0) {
            return Ok(Integral { value: next, error: err, panels });
        }
        prev = next;
    }
    Err(Error::Numerical(format!("quadrature did not reach tolerance {tol:e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let g = GaussLegendre::new(8);
        let s: f64 = g.weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // degree 15 is integrated exactly
        let v = g.composite(&|x: f64| x.powi(14) + x.powi(15), -1.0, 1.0, 1);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let odd = GaussLegendre::new(7);
        assert_eq!(odd.nodes()[3], 0.0);
        assert!((odd.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_oscillatory() {
        let r = integrate(|t| (7.3 * t).cos(), -2.0, 2.0, 1e-12).unwrap();
        assert!((r.value - 2.0 * (7.3_f64 * 2.0).sin() / 7.3).abs() < 1e-12);
        assert!(r.panels * PANEL_ORDER >= 4 * NODES_PER_UNIT);
    }
}
