use std::f64::consts::LN_2;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Quadrature,
    MonteCarlo,
    Geometric,
    DimmerApprox,
}

/// How the estimate was discretized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Sampling {
    Grid {
        nodes_per_axis: usize,
        x_nodes: usize,
        theta_nodes: usize,
        max_y_nodes: usize,
    },
    Midpoint { nodes_per_axis: usize, cells: usize },
    Samples { outer: usize, inner: usize, batches: usize },
    Adaptive { panels: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Warning {
    /// Doubling the grid moved the estimate by more than the tolerance.
    NotConverged { change: f64 },
    /// MC standard error above 20% of the estimate.
    Unreliable { relative_stderr: f64 },
    /// EI_g < 0, where it no longer approximates EI.
    NegativeGeometric,
    /// Cells whose midpoint hit a singular effect metric and were sub-sampled.
    SingularCells { count: usize },
    /// Exact estimate below the nonnegativity slack.
    NegativeExact { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EIReport {
    pub nats: f64,
    pub bits: f64,
    pub method: Method,
    pub volume_term: Option<f64>,
    pub mean_mismatch: Option<f64>,
    pub stderr: Option<f64>,
    pub grid_or_samples: Sampling,
    pub seed: Option<u64>,
    pub warnings: Vec<Warning>,
}

impl EIReport {
    pub fn new(nats: f64, method: Method, grid_or_samples: Sampling) -> Self {
        Self {
            nats,
            bits: nats / LN_2,
            method,
            volume_term: None,
            mean_mismatch: None,
            stderr: None,
            grid_or_samples,
            seed: None,
            warnings: Vec::new(),
        }
    }

    /// `nats = volume_term − mean_mismatch`.
    pub fn geometric(volume_term: f64, mean_mismatch: f64, grid_or_samples: Sampling) -> Self {
        let mut r = Self::new(volume_term - mean_mismatch, Method::Geometric, grid_or_samples);
        r.volume_term = Some(volume_term);
        r.mean_mismatch = Some(mean_mismatch);
        if r.nats < 0.0 {
            r.warnings.push(Warning::NegativeGeometric);
        }
        r
    }

    pub fn value(&self, bits: bool) -> f64 {
        if bits {
            self.bits
        } else {
            self.nats
        }
    }

    pub fn is_unreliable(&self) -> bool {
        self.warnings.iter().any(|w| matches!(w, Warning::Unreliable { .. }))
    }

    pub fn is_converged(&self) -> bool {
        !self.warnings.iter().any(|w| matches!(w, Warning::NotConverged { .. }))
    }
}
