//! Dimmer-switch models: a scalar knob `x`, a switch setting `θ`, and a light level `y = f(θ)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::{Domain, GaussianChannel, InterventionSet, NoiseSpec};
use crate::ei::{
    ei_dimmer_approx, ei_exact_mc, ei_exact_quadrature, ei_geometric, EIReport, MonteCarloSpec, Profile,
    QuadratureSpec,
};
use crate::error::{Error, Result};
use crate::geometry::{effect_metric, ConstantMetric, EffectMetric};
use crate::map::{AffineMap, SmoothMap};

/// Floor on `y` in the Weber–Fechner error `ε₀·max(y, floor)`.
pub const WEBER_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Linear,
    /// `(e^{aθ} − 1)/(e^a − 1)`.
    Exponential { a: f64 },
    Quadratic,
}

/// A monotone profile `f: [0,1] → [0,1]` with `f(0) = 0`, `f(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimmerProfile {
    pub kind: ProfileKind,
}

impl DimmerProfile {
    pub fn linear() -> Self {
        Self {
            kind: ProfileKind::Linear,
        }
    }

    /// Exponential profile; `a = 0` is the linear one.
    pub fn exponential(a: f64) -> Self {
        let kind = if a == 0.0 {
            ProfileKind::Linear
        } else {
            ProfileKind::Exponential { a }
        };
        Self { kind }
    }

    pub fn quadratic() -> Self {
        Self {
            kind: ProfileKind::Quadratic,
        }
    }

    pub fn family_param(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::Linear => Some(0.0),
            ProfileKind::Exponential { a } => Some(a),
            ProfileKind::Quadratic => None,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.kind {
            ProfileKind::Linear => t,
            ProfileKind::Quadratic => t * t,
            ProfileKind::Exponential { a } if a > 1.0 => ((a * (t - 1.0)).exp() - (-a).exp()) / -(-a).exp_m1(),
            ProfileKind::Exponential { a } => (a * t).exp_m1() / a.exp_m1(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self.kind {
            ProfileKind::Linear => 1.0,
            ProfileKind::Quadratic => 2.0 * t,
            ProfileKind::Exponential { a } if a > 1.0 => a * (a * (t - 1.0)).exp() / -(-a).exp_m1(),
            ProfileKind::Exponential { a } => a * (a * t).exp() / a.exp_m1(),
        }
    }
}

impl Profile for DimmerProfile {
    fn value(&self, theta: f64) -> f64 {
        DimmerProfile::value(self, theta)
    }
    fn derivative(&self, theta: f64) -> f64 {
        DimmerProfile::derivative(self, theta)
    }
}

impl SmoothMap for DimmerProfile {
    fn input_dim(&self) -> usize {
        1
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        vec![self.value(x[0])]
    }
    fn jacobian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, self.derivative(x[0])))
    }
}

/// Member `a ∈ [−5, 5]` of the exponential profile family.
pub fn dimmer_family(a: f64) -> Result<DimmerProfile> {
    if !(-5.0..=5.0).contains(&a) {
        return Err(Error::InvalidConfig(format!("family parameter a must lie in [-5, 5], got {a}")));
    }
    Ok(DimmerProfile::exponential(a))
}

/// Profile with constant `f/f′`, optimal under proportional effect error.
pub fn weber_optimal(r: f64) -> Result<DimmerProfile> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidConfig(format!("r must be positive, got {r}")));
    }
    Ok(DimmerProfile::exponential(1.0 / r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EffectError {
    Constant { epsilon: f64 },
    /// `ε₀·max(y, 1e-3)`.
    Weber { eps0: f64 },
}

impl EffectError {
    pub fn sigma(&self, y: f64) -> f64 {
        match *self {
            Self::Constant { epsilon } => epsilon,
            Self::Weber { eps0 } => eps0 * y.max(WEBER_FLOOR),
        }
    }

    fn noise(&self) -> Result<NoiseSpec> {
        match *self {
            Self::Constant { epsilon } => NoiseSpec::isotropic(epsilon),
            Self::Weber { eps0 } => {
                if !(eps0 > 0.0 && eps0.is_finite()) {
                    return Err(Error::InvalidNoise(format!("eps0 must be positive, got {eps0}")));
                }
                let e = *self;
                Ok(NoiseSpec::state_dependent(move |y| vec![e.sigma(y[0])]))
            }
        }
    }
}

/// Intervention set plus the two channels of a dimmer.
#[derive(Debug, Clone)]
pub struct DimmerModel {
    pub profile: DimmerProfile,
    pub error: EffectError,
    pub delta: f64,
    pub x_set: InterventionSet,
    pub intervention: GaussianChannel,
    pub effect: GaussianChannel,
}

pub fn dimmer_model(profile: DimmerProfile, error: EffectError, delta: f64) -> Result<DimmerModel> {
    let unit = Domain::unit(1);
    let intervention = GaussianChannel::new(
        Arc::new(AffineMap::identity(1)),
        NoiseSpec::isotropic(delta)?,
        unit.clone(),
        unit.clone(),
    )?;
    let effect = GaussianChannel::new(Arc::new(profile), error.noise()?, unit.clone(), unit.clone())?;
    Ok(DimmerModel {
        profile,
        error,
        delta,
        x_set: InterventionSet::UniformBox(unit),
        intervention,
        effect,
    })
}

/// The linear dimmer restricted to its two end settings.
pub fn binary_switch_model(epsilon: f64, delta: f64) -> Result<DimmerModel> {
    let mut m = dimmer_model(DimmerProfile::linear(), EffectError::Constant { epsilon }, delta)?;
    m.x_set = InterventionSet::discrete(vec![vec![0.0], vec![1.0]])?;
    Ok(m)
}

impl DimmerModel {
    pub fn is_binary(&self) -> bool {
        matches!(self.x_set, InterventionSet::Discrete(_))
    }

    pub fn effect_metric(&self) -> EffectMetric {
        effect_metric(&self.effect)
    }

    /// `h = 1/δ²` for the identity intervention map.
    pub fn intervention_metric(&self) -> ConstantMetric {
        ConstantMetric(DMatrix::from_element(1, 1, self.delta.powi(-2)))
    }

    pub fn ei_exact(&self, spec: &QuadratureSpec) -> Result<EIReport> {
        ei_exact_quadrature(&self.x_set, &self.intervention, &self.effect, spec)
    }

    pub fn ei_exact_mc(&self, spec: &MonteCarloSpec) -> Result<EIReport> {
        ei_exact_mc(&self.x_set, &self.intervention, &self.effect, spec)
    }

    pub fn ei_approx(&self) -> Result<EIReport> {
        let e = self.error;
        ei_dimmer_approx(&self.profile, &move |y| e.sigma(y), self.delta, &Domain::unit(1))
    }

    pub fn ei_geometric(&self, grid: &QuadratureSpec) -> Result<EIReport> {
        ei_geometric(&self.effect_metric(), &self.intervention_metric(), &Domain::unit(1), grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricField;

    #[test]
    fn family_anchor_and_values() {
        assert_eq!(dimmer_family(0.0).unwrap(), DimmerProfile::linear());
        let f = dimmer_family(1.0).unwrap();
        let want = (0.5f64.exp() - 1.0) / (1f64.exp() - 1.0);
        assert!((f.value(0.5) - want).abs() < 1e-14);
        assert!((want - 0.3775).abs() < 1e-4);
        assert!(dimmer_family(5.5).is_err());
    }

    #[test]
    fn family_endpoints_and_derivatives() {
        for a in [-5.0, -1.0, -1e-6, 1e-6, 2.0, 5.0, 10.0] {
            let f = DimmerProfile::exponential(a);
            assert!(f.value(0.0).abs() < 1e-14, "a={a}");
            assert!((f.value(1.0) - 1.0).abs() < 1e-14, "a={a}");
            for t in [0.1, 0.5, 0.9] {
                let h = 1e-6;
                let fd = (f.value(t + h) - f.value(t - h)) / (2.0 * h);
                assert!((fd / f.derivative(t) - 1.0).abs() < 1e-6, "a={a} t={t}");
            }
        }
    }

    #[test]
    fn push_forward_quadratic() {
        let m = dimmer_model(DimmerProfile::quadratic(), EffectError::Constant { epsilon: 0.03 }, 0.03).unwrap();
        let d = m.effect.push_forward(&[0.5]).unwrap();
        assert!((d.mean[0] - 0.25).abs() < 1e-15);
        assert!((d.cov[(0, 0)] - 9e-4).abs() < 1e-15);
    }

    #[test]
    fn effect_metric_is_squared_slope_over_error() {
        let m = dimmer_model(DimmerProfile::exponential(2.0), EffectError::Constant { epsilon: 0.05 }, 0.03).unwrap();
        let g = m.effect_metric().eval(&[0.4]).unwrap()[(0, 0)];
        let want = (m.profile.derivative(0.4) / 0.05).powi(2);
        assert!((g / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weber_error_is_floored() {
        let e = EffectError::Weber { eps0: 0.03 };
        assert_eq!(e.sigma(0.0), 0.03 * WEBER_FLOOR);
        assert_eq!(e.sigma(0.5), 0.015);
    }

    #[test]
    fn weber_profile_has_constant_ratio() {
        let f = weber_optimal(0.1).unwrap();
        let r0 = f.value(0.3) / f.derivative(0.3);
        let r1 = f.value(0.9) / f.derivative(0.9);
        assert!(r0 < 0.1 && r1 < 0.1 && (r0 - r1).abs() < 0.01);
    }
}
