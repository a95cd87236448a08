use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ei::{MonteCarloSpec, QuadratureSpec};
use crate::manifold::SweepSpec;
use crate::models::ModelSpec;

use super::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Computation {
    EiExact,
    EiGeom,
    EiBoth,
    Eigen,
    CrossoverScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Bits,
    Nats,
}

impl Units {
    pub fn suffix(self) -> &'static str {
        match self {
            Self::Bits => "bits",
            Self::Nats => "nats",
        }
    }
}

/// How crossover curves are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveMethod {
    Exact,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub computation: Computation,
    pub model: ModelSpec,
    /// Further models drawn as separate curves.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compare: Vec<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub submanifolds: Vec<String>,
    /// Include the full model next to its submanifolds.
    #[serde(default = "yes")]
    pub include_full: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<CurveMethod>,
    /// Parameter point for `eigen`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    pub output: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub units: Units,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub plot: bool,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub geometric_grid: GeometricGrid,
    #[serde(default)]
    pub monte_carlo: MonteCarloSpec,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometricGrid {
    pub nodes_per_axis: usize,
}

impl Default for GeometricGrid {
    fn default() -> Self {
        Self {
            nodes_per_axis: QuadratureSpec::geometric().nodes_per_axis,
        }
    }
}

impl GeometricGrid {
    pub fn spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            nodes_per_axis: self.nodes_per_axis,
            ..QuadratureSpec::geometric()
        }
    }
}

/// What `run` writes next to `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

impl ExperimentConfig {
    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(self.monte_carlo.seed)
    }

    pub fn mc_spec(&self) -> MonteCarloSpec {
        MonteCarloSpec {
            seed: self.effective_seed(),
            ..self.monte_carlo.clone()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "unsupported schema_version {}; this tool reads version {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if let Some(s) = &self.sweep {
            s.grid().map_err(CliError::from)?;
        }
        if self.threads == Some(0) {
            return Err(CliError::config("threads must be at least 1"));
        }
        if self.geometric_grid.nodes_per_axis == 0 {
            return Err(CliError::config("geometric_grid.nodes_per_axis must be positive"));
        }
        self.quadrature.validate()?;
        self.monte_carlo.validate()?;
        Ok(())
    }

    /// Fill in defaults so the written manifest reproduces the run on its own.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.seed = Some(self.effective_seed());
        c.monte_carlo.seed = self.effective_seed();
        c
    }
}

/// Reads a TOML config, or the `manifest.json` of an earlier run.
pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = if path.extension().is_some_and(|e| e == "json") {
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        m.config
    } else {
        parse_toml(&text).map_err(|e| e.context(path))?
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_toml(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let msg = e.to_string();
        if msg.contains("unknown variant") && msg.contains("two-species") {
            let known: Vec<&str> = crate::models::registry().iter().map(|m| m.name).collect();
            CliError::config(format!("{msg}\nknown models: {}", known.join(", ")))
        } else {
            CliError::config(msg)
        }
    })
}
