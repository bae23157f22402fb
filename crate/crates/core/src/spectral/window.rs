use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quadrature::{integrate, GaussLegendre};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// `cos^2(pi t / (2T))`.
    Hann,
    /// `exp(-t^2 / (2 (T/3)^2))`, cut off at `|t| = T`.
    TruncatedGaussian,
}

/// Time window supported on `[-T, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow")]
pub struct WindowFunction {
    pub kind: WindowKind,
    #[serde(rename = "T")]
    pub half_width: f64,
}

#[derive(Deserialize)]
struct RawWindow {
    kind: WindowKind,
    #[serde(rename = "T")]
    half_width: f64,
}

impl TryFrom<RawWindow> for WindowFunction {
    type Error = Error;

    fn try_from(r: RawWindow) -> Result<Self> {
        WindowFunction::new(r.kind, r.half_width)
    }
}

impl WindowFunction {
    pub fn new(kind: WindowKind, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidInteraction(format!("window half-width {half_width} must be positive")));
        }
        Ok(Self { kind, half_width })
    }

    pub fn hann(half_width: f64) -> Result<Self> {
        Self::new(WindowKind::Hann, half_width)
    }

    /// `f_T(t)`, exactly zero outside `[-T, T]`.
    pub fn eval(&self, t: f64) -> f64 {
        let tt = self.half_width;
        if t.abs() > tt {
            return 0.0;
        }
        match self.kind {
            WindowKind::Hann => {
                let c = (PI * t / (2.0 * tt)).cos();
                c * c
            }
            WindowKind::TruncatedGaussian => {
                let s = tt / 3.0;
                (-t * t / (2.0 * s * s)).exp()
            }
        }
    }

    /// `F(w) = int f_T(t) e^{iwt} dt`, real because `f_T` is even. Closed
    /// form for Hann, Gauss-Legendre otherwise.
    pub fn transform(&self, w: f64) -> f64 {
        match self.kind {
            WindowKind::Hann => hann_transform(w, self.half_width),
            WindowKind::TruncatedGaussian => {
                let tt = self.half_width;
                // enough panels for the oscillation at frequency w
                let rule = GaussLegendre::new(16);
                let panels = ((tt * (w.abs() + 8.0)) as usize).max(8);
                let f = |t: f64| self.eval(t) * (w * t).cos();
                2.0 * rule.composite(&f, 0.0, tt, panels)
            }
        }
    }

    /// `f~_T(e) = (2 pi)^{-1/2} int f_T(t) e^{iet} dt`.
    pub fn fourier(&self, e: f64) -> f64 {
        self.transform(e) / (2.0 * PI).sqrt()
    }

    /// `int f_T(t) dt = F(0)`.
    pub fn integral(&self) -> f64 {
        self.transform(0.0)
    }

    /// `int |f_T|^2 dt`.
    pub fn l2_norm_sq(&self) -> Result<f64> {
        let tt = self.half_width;
        Ok(integrate(|t| self.eval(t).powi(2), -tt, tt, 1e-12)?.value)
    }
}

fn hann_transform(w: f64, tt: f64) -> f64 {
    let a = PI / tt;
    if w.abs() * tt < 1e-4 {
        // T - (w^2 / 2) int t^2 f dt
        return tt - 0.5 * w * w * tt.powi(3) * (1.0 / 3.0 - 2.0 / (PI * PI));
    }
    if (w.abs() - a).abs() * tt < 1e-8 {
        return 0.5 * tt;
    }
    a * a * (w * tt).sin() / (w * (a - w) * (a + w))
}
