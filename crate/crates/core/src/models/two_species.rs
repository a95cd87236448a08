//! Two decaying species observed only through their total population
//! `y_n = e^{−nΔtθ₁} + e^{−nΔtθ₂}`, `n = 1..N`.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::channels::{Domain, GaussianChannel, InterventionSet, NoiseSpec};
use crate::ei::{ei_exact_mc, ei_exact_quadrature, ei_geometric, EIReport, MonteCarloSpec, QuadratureSpec};
use crate::error::{Error, Result};
use crate::geometry::{causal_eigenvalues, effect_metric, ConstantMetric, EffectMetric, EigenReport, MetricField};
use crate::manifold::{coarse_grained_ei, Submanifold};
use crate::map::{AffineMap, FnMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoSpeciesConfig {
    /// Row-major `θ = A x`.
    pub a: [[f64; 2]; 2],
    pub delta_t: f64,
    pub n_points: usize,
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for TwoSpeciesConfig {
    fn default() -> Self {
        Self {
            a: [[1.0, 0.0], [0.0, 1.0]],
            delta_t: 1.0,
            n_points: 3,
            epsilon: 1e-2,
            delta: 1e-2,
        }
    }
}

impl TwoSpeciesConfig {
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1])
    }

    pub fn validate(&self) -> Result<()> {
        let det = self.matrix().determinant();
        if !(det.abs() > 1e-12 * self.matrix().amax().powi(2)) || !det.is_finite() {
            return Err(Error::InvalidConfig(format!("A must be invertible, det = {det}")));
        }
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return Err(Error::InvalidConfig(format!("delta_t must be positive, got {}", self.delta_t)));
        }
        if self.n_points < 2 {
            return Err(Error::InvalidConfig(format!("n_points must be at least 2, got {}", self.n_points)));
        }
        for (name, v) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Mean map `θ ↦ (y_1, …, y_N)` with analytic Jacobian.
pub fn total_population_map(delta_t: f64, n_points: usize) -> FnMap {
    let rates: Vec<f64> = (1..=n_points).map(|n| n as f64 * delta_t).collect();
    let r2 = rates.clone();
    FnMap::new(2, n_points, move |t| {
        rates.iter().map(|r| (-r * t[0]).exp() + (-r * t[1]).exp()).collect()
    })
    .with_jacobian(move |t| {
        DMatrix::from_fn(r2.len(), 2, |n, i| -r2[n] * (-r2[n] * t[i]).exp())
    })
}

#[derive(Debug, Clone)]
pub struct TwoSpeciesModel {
    pub config: TwoSpeciesConfig,
    /// Uniform over `u = A x ∈ [0,1]²`.
    pub x_set: InterventionSet,
    /// `u ↦ N(u, AAᵀδ²)`.
    pub intervention: GaussianChannel,
    pub effect: GaussianChannel,
    pub g: EffectMetric,
    pub h: ConstantMetric,
}

pub fn two_species_model(cfg: &TwoSpeciesConfig) -> Result<TwoSpeciesModel> {
    cfg.validate()?;
    let a = cfg.matrix();
    let unit = Domain::unit(2);
    let d2 = cfg.delta * cfg.delta;
    let cov = DMatrix::from_fn(2, 2, |i, j| (a * a.transpose())[(i, j)] * d2);
    let intervention = GaussianChannel::new(
        Arc::new(AffineMap::identity(2)),
        NoiseSpec::full(cov)?,
        unit.clone(),
        unit.clone(),
    )?;
    let effect = GaussianChannel::new(
        Arc::new(total_population_map(cfg.delta_t, cfg.n_points)),
        NoiseSpec::isotropic(cfg.epsilon)?,
        unit.clone(),
        Domain::new(vec![(0.0, 2.0); cfg.n_points])?,
    )?;
    let ainv = a.try_inverse().ok_or_else(|| Error::InvalidConfig("A must be invertible".into()))?;
    let hm = ainv.transpose() * ainv / d2;
    let h = ConstantMetric(DMatrix::from_fn(2, 2, |i, j| 0.5 * (hm[(i, j)] + hm[(j, i)])));
    Ok(TwoSpeciesModel {
        config: cfg.clone(),
        x_set: InterventionSet::UniformBox(unit),
        g: effect_metric(&effect),
        intervention,
        effect,
        h,
    })
}

impl TwoSpeciesModel {
    pub fn theta_domain(&self) -> Domain {
        Domain::unit(2)
    }

    /// `x ↦ N(Ax, AAᵀδ²)` over the bounding box of `A⁻¹[0,1]²`.
    pub fn x_parameterized_channel(&self) -> Result<GaussianChannel> {
        let a = self.config.matrix();
        let ainv = a.try_inverse().ok_or_else(|| Error::InvalidConfig("A must be invertible".into()))?;
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let mut axes = vec![(f64::INFINITY, f64::NEG_INFINITY); 2];
        for c in corners {
            for (i, ax) in axes.iter_mut().enumerate() {
                let v = ainv[(i, 0)] * c[0] + ainv[(i, 1)] * c[1];
                ax.0 = ax.0.min(v);
                ax.1 = ax.1.max(v);
            }
        }
        GaussianChannel::new(
            Arc::new(AffineMap::linear(DMatrix::from_fn(2, 2, |i, j| a[(i, j)]))),
            self.intervention.noise().clone(),
            Domain::new(axes)?,
            self.theta_domain(),
        )
    }

    pub fn ei_geometric(&self, grid: &QuadratureSpec) -> Result<EIReport> {
        ei_geometric(&self.g, &self.h, &self.theta_domain(), grid)
    }

    pub fn coarse_ei(&self, sub: &Submanifold, grid: &QuadratureSpec) -> Result<EIReport> {
        coarse_grained_ei(Arc::new(self.g.clone()), Arc::new(self.h.clone()), sub, grid)
    }

    pub fn ei_exact(&self, spec: &QuadratureSpec) -> Result<EIReport> {
        ei_exact_quadrature(&self.x_set, &self.intervention, &self.effect, spec)
    }

    pub fn ei_exact_mc(&self, spec: &MonteCarloSpec) -> Result<EIReport> {
        ei_exact_mc(&self.x_set, &self.intervention, &self.effect, spec)
    }

    pub fn eigen(&self, theta: &[f64]) -> Result<EigenReport> {
        self.theta_domain().check(theta)?;
        causal_eigenvalues(&self.g.eval(theta)?, &self.h.eval(theta)?)
    }
}

/// `σ ↦ (σ, σ)`: the two species are indistinguishable.
pub fn submanifold_a() -> Submanifold {
    let m = FnMap::new(1, 2, |s| vec![s[0], s[0]]).with_jacobian(|_| DMatrix::from_column_slice(2, 1, &[1.0, 1.0]));
    Submanifold::new(Arc::new(m), Domain::unit(1), "A").expect("static embedding")
}

/// `σ ↦ (σ, 1 − σ)`: the two species compete.
pub fn submanifold_b() -> Submanifold {
    let m = FnMap::new(1, 2, |s| vec![s[0], 1.0 - s[0]])
        .with_jacobian(|_| DMatrix::from_column_slice(2, 1, &[1.0, -1.0]));
    Submanifold::new(Arc::new(m), Domain::unit(1), "B").expect("static embedding")
}

pub fn submanifold(name: &str) -> Result<Submanifold> {
    match name {
        "A" | "a" | "subA" => Ok(submanifold_a()),
        "B" | "b" | "subB" => Ok(submanifold_b()),
        other => Err(Error::InvalidConfig(format!("unknown submanifold '{other}', expected A or B"))),
    }
}
