use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::quadrature::adaptive_integrate;
use crate::time::Source;

pub type SpaceFn = dyn Fn(f64) -> f64 + Send + Sync;
pub type SpaceTimeFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Polynomial bump `scale (x − lo)² (x − hi)²` on `(lo, hi)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoiWeight {
    pub x_lo: f64,
    pub x_hi: f64,
    pub scale: f64,
}

impl Default for QoiWeight {
    fn default() -> Self {
        Self {
            x_lo: 0.2,
            x_hi: 0.6,
            scale: 10000.0,
        }
    }
}

impl QoiWeight {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.x_lo || x >= self.x_hi {
            0.0
        } else {
            let (a, b) = (x - self.x_lo, x - self.x_hi);
            self.scale * a * a * b * b
        }
    }
}

/// Everything the solvers and the estimator need to know about a problem
/// on `[a, b] x [0, T]` with homogeneous Dirichlet data.
#[derive(Clone)]
pub struct ProblemBundle {
    pub a: f64,
    pub b: f64,
    pub t_final: f64,
    pub source: Arc<Source>,
    pub u0: Arc<SpaceFn>,
    pub psi: Arc<SpaceFn>,
    pub exact: Option<Arc<SpaceTimeFn>>,
    /// Support of `psi`, used to split adaptive quadrature at its kinks.
    pub psi_support: (f64, f64),
}

impl std::fmt::Debug for ProblemBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemBundle")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("t_final", &self.t_final)
            .field("psi_support", &self.psi_support)
            .finish_non_exhaustive()
    }
}

/// The heat equation on `(0, 1)` with exact solution
/// `u = cos(νπt) sin(μπx)`.
pub fn build_manufactured(nu: f64, mu: f64, t_final: f64, qoi: QoiWeight) -> Result<ProblemBundle> {
    if nu == 0.0 || mu == 0.0 || !nu.is_finite() || !mu.is_finite() {
        return Err(Error::Config(format!("nu and mu must be nonzero, got {nu}, {mu}")));
    }
    if !(t_final > 0.0) {
        return Err(Error::Config(format!("T must be positive, got {t_final}")));
    }
    if !(qoi.x_lo < qoi.x_hi) {
        return Err(Error::Config("qoi support must satisfy x_lo < x_hi".into()));
    }
    let source = move |x: f64, t: f64| {
        (mu * PI * x).sin()
            * (mu * mu * PI * PI * (nu * PI * t).cos() - nu * PI * (nu * PI * t).sin())
    };
    let exact = move |x: f64, t: f64| (nu * PI * t).cos() * (mu * PI * x).sin();
    let u0 = move |x: f64| (mu * PI * x).sin();
    Ok(ProblemBundle {
        a: 0.0,
        b: 1.0,
        t_final,
        source: Arc::new(source),
        u0: Arc::new(u0),
        psi: Arc::new(move |x| qoi.eval(x)),
        exact: Some(Arc::new(exact)),
        psi_support: (qoi.x_lo.max(0.0), qoi.x_hi.min(1.0)),
    })
}

/// `(ψ, u(T))` from the exact solution by adaptive quadrature, `None` when
/// the bundle has no exact solution.
pub fn true_qoi(bundle: &ProblemBundle) -> Option<f64> {
    let exact = bundle.exact.as_ref()?;
    let t = bundle.t_final;
    let (lo, hi) = bundle.psi_support;
    if hi <= lo {
        return Some(0.0);
    }
    let g = |x: f64| (bundle.psi)(x) * exact(x, t);
    Some(adaptive_integrate(&g, lo, hi, 1e-14))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_values() {
        let w = QoiWeight::default();
        assert_eq!(w.eval(0.2), 0.0);
        assert_eq!(w.eval(0.6), 0.0);
        assert!((w.eval(0.4) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn zero_when_cosine_vanishes() {
        let b = build_manufactured(0.25, 1.0, 2.0, QoiWeight::default()).unwrap();
        assert!(true_qoi(&b).unwrap().abs() < 1e-15);
    }
}
