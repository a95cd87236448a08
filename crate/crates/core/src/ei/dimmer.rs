use std::f64::consts::{E, PI};

use super::report::{EIReport, Method, Sampling};
use crate::channels::Domain;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_gk, AdaptiveOptions};

/// A scalar profile `θ ↦ f(θ)` with derivative.
pub trait Profile: Send + Sync {
    fn value(&self, theta: f64) -> f64;
    fn derivative(&self, theta: f64) -> f64;
}

/// `EI ≈ −(1/2L) ∫_Θ ln[2πe((ε(f)/f′)² + δ²)/L²] dθ`.
pub fn ei_dimmer_approx(
    profile: &dyn Profile,
    epsilon: &dyn Fn(f64) -> f64,
    delta: f64,
    theta: &Domain,
) -> Result<EIReport> {
    if theta.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: theta.dim(),
        });
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidNoise(format!("delta must be positive, got {delta}")));
    }
    let (lo, hi) = theta.axes()[0];
    let l = hi - lo;
    let mut bad: Option<f64> = None;
    let mut evals = 0usize;
    let mut f = |t: f64| {
        evals += 1;
        let d = profile.derivative(t);
        if !(d > 0.0) {
            bad.get_or_insert(t);
            return vec![0.0];
        }
        let r = epsilon(profile.value(t)) / d;
        vec![(2.0 * PI * E * (r * r + delta * delta) / (l * l)).ln()]
    };
    let opts = AdaptiveOptions {
        initial_panels: 64,
        rel_tol: 1e-12,
        abs_tol: 1e-13,
        max_panels: 20_000,
    };
    let v = adaptive_gk(&mut f, lo, hi, 1, &opts)?[0];
    if let Some(t) = bad {
        return Err(Error::DegenerateProfile(t));
    }
    Ok(EIReport::new(
        -v / (2.0 * l),
        Method::DimmerApprox,
        Sampling::Adaptive { panels: evals / 15 },
    ))
}
