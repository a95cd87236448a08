//! Decay model with a temperature confounder: causal vs statistical intervention metrics.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::{ConditionalGaussian, Domain, InvertedChannel};
use crate::error::{Error, Result};
use crate::geometry::{intervention_metric, ConstantMetric, InterventionMetric, MetricField};

/// Largest `σ_T/σ_x` for which the series is evaluated.
pub const SERIES_MAX_RATIO: f64 = 0.1;
/// Half-width of the `x` integration window, in units of `ασ_T`.
const WINDOW_WIDTHS: f64 = 30.0;
const REGION_HALF_WIDTH: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfounderConfig {
    pub alpha: f64,
    pub sigma_t: f64,
    pub sigma_x: f64,
    pub x_hat: f64,
}

impl Default for DecayConfounderConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            sigma_t: 0.05,
            sigma_x: 1.0,
            x_hat: 1.0,
        }
    }
}

impl DecayConfounderConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("sigma_t", self.sigma_t), ("sigma_x", self.sigma_x)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.x_hat.is_finite() {
            return Err(Error::InvalidConfig("x_hat must be finite".into()));
        }
        Ok(())
    }

    pub fn ratio(&self) -> f64 {
        self.sigma_t / self.sigma_x
    }

    /// `σ_net²(x) = α² / (1/σ_T² + x²/σ_x²)`.
    pub fn sigma_net2(&self, x: f64) -> f64 {
        self.alpha * self.alpha / (self.sigma_t.powi(-2) + x * x / (self.sigma_x * self.sigma_x))
    }
}

/// Observational `q(θ | x)`, with `x` and `θ` both confounded by temperature.
#[derive(Debug, Clone)]
pub struct StatisticalConditional {
    cfg: DecayConfounderConfig,
}

impl ConditionalGaussian for StatisticalConditional {
    fn input_dim(&self) -> usize {
        1
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn mean_cov(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let c = &self.cfg;
        let s2 = c.sigma_net2(x[0]);
        let m = x[0] * (1.0 + c.x_hat * s2 / (c.alpha * c.sigma_x * c.sigma_x));
        Ok((vec![m], DMatrix::from_element(1, 1, s2)))
    }
}

/// Series for `h_stat`, valid while `σ_T ≪ σ_x`.
#[derive(Debug, Clone)]
pub struct StatSeries {
    cfg: DecayConfounderConfig,
    inverted: InvertedChannel,
}

impl StatSeries {
    pub fn eval(&self, theta: f64) -> Result<f64> {
        let c = &self.cfg;
        let r = c.ratio();
        if r > SERIES_MAX_RATIO {
            return Err(Error::Regime(format!(
                "series needs sigma_t/sigma_x <= {SERIES_MAX_RATIO}, got {r}"
            )));
        }
        let mean_precision = self.inverted.expectation(&[theta], |x| 1.0 / c.sigma_net2(x[0]))?;
        Ok(mean_precision - 3.0 * (c.alpha * c.x_hat + theta * theta) * r.powi(4))
    }
}

#[derive(Debug, Clone)]
pub struct DecayMetrics {
    pub h_caus: ConstantMetric,
    pub h_stat: InterventionMetric,
    pub h_stat_series: StatSeries,
    pub inverted_stat: InvertedChannel,
}

impl DecayMetrics {
    pub fn h_stat_at(&self, theta: f64) -> Result<f64> {
        Ok(self.h_stat.eval(&[theta])?[(0, 0)])
    }

    pub fn h_caus_at(&self, theta: f64) -> Result<f64> {
        Ok(self.h_caus.eval(&[theta])?[(0, 0)])
    }
}

pub fn decay_confounder_metrics(cfg: &DecayConfounderConfig) -> Result<DecayMetrics> {
    cfg.validate()?;
    let w = WINDOW_WIDTHS * cfg.alpha * cfg.sigma_t;
    let inverted = InvertedChannel::new(
        Arc::new(StatisticalConditional { cfg: cfg.clone() }),
        Domain::new(vec![(-REGION_HALF_WIDTH, REGION_HALF_WIDTH)])?,
    )?
    .with_window(move |t| vec![(t[0] - w, t[0] + w)]);
    let h_caus = ConstantMetric(DMatrix::from_element(1, 1, (cfg.alpha * cfg.sigma_t).powi(-2)));
    Ok(DecayMetrics {
        h_caus,
        h_stat: intervention_metric(&inverted),
        h_stat_series: StatSeries {
            cfg: cfg.clone(),
            inverted: inverted.clone(),
        },
        inverted_stat: inverted,
    })
}
