//! Built-in models and their by-name registry.

mod decay;
mod dimmer;
mod two_species;

pub use decay::{
    decay_confounder_metrics, DecayConfounderConfig, DecayMetrics, StatSeries, StatisticalConditional,
    SERIES_MAX_RATIO,
};
pub use dimmer::{
    binary_switch_model, dimmer_family, dimmer_model, weber_optimal, DimmerModel, DimmerProfile, EffectError,
    ProfileKind, WEBER_FLOOR,
};
pub use two_species::{
    submanifold, submanifold_a, submanifold_b, total_population_map, two_species_model, TwoSpeciesConfig,
    TwoSpeciesModel,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::SweepVariable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileChoice {
    Linear,
    Quadratic,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimmerParams {
    pub profile: ProfileChoice,
    /// Exponent for the exponential profile.
    pub a: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for DimmerParams {
    fn default() -> Self {
        Self {
            profile: ProfileChoice::Linear,
            a: 0.0,
            epsilon: 0.03,
            delta: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyParams {
    pub a: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self {
            a: 0.0,
            epsilon: 0.03,
            delta: 0.03,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeberProfile {
    /// `(e^{θ/r} − 1)/(e^{1/r} − 1)`.
    Optimal,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeberParams {
    pub profile: WeberProfile,
    pub r: f64,
    pub eps0: f64,
    pub delta: f64,
}

impl Default for WeberParams {
    fn default() -> Self {
        Self {
            profile: WeberProfile::Optimal,
            r: 0.1,
            eps0: 0.03,
            delta: 0.003,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for SwitchParams {
    fn default() -> Self {
        Self {
            epsilon: 0.03,
            delta: 0.03,
        }
    }
}

/// A model name plus its parameters, as written in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ModelSpec {
    Dimmer(DimmerParams),
    DimmerFamily(FamilyParams),
    DimmerWeber(WeberParams),
    BinarySwitch(SwitchParams),
    TwoSpecies(TwoSpeciesConfig),
    DecayConfounder(DecayConfounderConfig),
}

/// A constructed model.
#[derive(Debug, Clone)]
pub enum Model {
    Dimmer(DimmerModel),
    TwoSpecies(TwoSpeciesModel),
    DecayConfounder(DecayConfounderConfig, DecayMetrics),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dimmer(_) => "dimmer",
            Self::DimmerFamily(_) => "dimmer-family",
            Self::DimmerWeber(_) => "dimmer-weber",
            Self::BinarySwitch(_) => "binary-switch",
            Self::TwoSpecies(_) => "two-species",
            Self::DecayConfounder(_) => "decay-confounder",
        }
    }

    /// Default parameters for a model name.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "dimmer" => Self::Dimmer(DimmerParams::default()),
            "dimmer-family" => Self::DimmerFamily(FamilyParams::default()),
            "dimmer-weber" => Self::DimmerWeber(WeberParams::default()),
            "binary-switch" => Self::BinarySwitch(SwitchParams::default()),
            "two-species" => Self::TwoSpecies(TwoSpeciesConfig::default()),
            "decay-confounder" => Self::DecayConfounder(DecayConfounderConfig::default()),
            other => return Err(unknown_model(other)),
        })
    }

    pub fn build(&self) -> Result<Model> {
        Ok(match self {
            Self::Dimmer(p) => {
                let profile = match p.profile {
                    ProfileChoice::Linear => DimmerProfile::linear(),
                    ProfileChoice::Quadratic => DimmerProfile::quadratic(),
                    ProfileChoice::Exponential => DimmerProfile::exponential(p.a),
                };
                Model::Dimmer(dimmer_model(profile, EffectError::Constant { epsilon: p.epsilon }, p.delta)?)
            }
            Self::DimmerFamily(p) => Model::Dimmer(dimmer_model(
                dimmer_family(p.a)?,
                EffectError::Constant { epsilon: p.epsilon },
                p.delta,
            )?),
            Self::DimmerWeber(p) => {
                let profile = match p.profile {
                    WeberProfile::Optimal => weber_optimal(p.r)?,
                    WeberProfile::Linear => DimmerProfile::linear(),
                };
                Model::Dimmer(dimmer_model(profile, EffectError::Weber { eps0: p.eps0 }, p.delta)?)
            }
            Self::BinarySwitch(p) => Model::Dimmer(binary_switch_model(p.epsilon, p.delta)?),
            Self::TwoSpecies(c) => Model::TwoSpecies(two_species_model(c)?),
            Self::DecayConfounder(c) => Model::DecayConfounder(c.clone(), decay_confounder_metrics(c)?),
        })
    }

    /// Copy with the sweep variable set to `v`.
    pub fn with(&self, var: SweepVariable, v: f64) -> Result<Self> {
        let mut s = self.clone();
        let unsupported = || {
            Error::InvalidConfig(format!("model '{}' cannot sweep {:?}", self.name(), var))
        };
        match (&mut s, var) {
            (Self::Dimmer(p), SweepVariable::Epsilon) => p.epsilon = v,
            (Self::Dimmer(p), SweepVariable::Delta) => p.delta = v,
            (Self::Dimmer(p), SweepVariable::Both) => (p.epsilon, p.delta) = (v, v),
            (Self::Dimmer(p), SweepVariable::Parameter) => p.a = v,
            (Self::DimmerFamily(p), SweepVariable::Epsilon) => p.epsilon = v,
            (Self::DimmerFamily(p), SweepVariable::Delta) => p.delta = v,
            (Self::DimmerFamily(p), SweepVariable::Both) => (p.epsilon, p.delta) = (v, v),
            (Self::DimmerFamily(p), SweepVariable::Parameter) => p.a = v,
            (Self::DimmerWeber(p), SweepVariable::Epsilon) => p.eps0 = v,
            (Self::DimmerWeber(p), SweepVariable::Delta) => p.delta = v,
            (Self::DimmerWeber(p), SweepVariable::Both) => (p.eps0, p.delta) = (v, v),
            (Self::DimmerWeber(p), SweepVariable::Parameter) => p.r = v,
            (Self::BinarySwitch(p), SweepVariable::Epsilon) => p.epsilon = v,
            (Self::BinarySwitch(p), SweepVariable::Delta) => p.delta = v,
            (Self::BinarySwitch(p), SweepVariable::Both) => (p.epsilon, p.delta) = (v, v),
            (Self::TwoSpecies(c), SweepVariable::Epsilon) => c.epsilon = v,
            (Self::TwoSpecies(c), SweepVariable::Delta) => c.delta = v,
            (Self::TwoSpecies(c), SweepVariable::Both) => (c.epsilon, c.delta) = (v, v),
            (Self::TwoSpecies(c), SweepVariable::DeltaT) => c.delta_t = v,
            (Self::DecayConfounder(c), SweepVariable::Parameter) => c.sigma_t = v,
            _ => return Err(unsupported()),
        }
        Ok(s)
    }
}

fn unknown_model(name: &str) -> Error {
    let known: Vec<&str> = registry().iter().map(|m| m.name).collect();
    Error::InvalidConfig(format!("unknown model '{name}'; known models: {}", known.join(", ")))
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: serde_json::Value,
    pub about: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub name: &'static str,
    pub about: &'static str,
    pub params: Vec<ParamInfo>,
}

fn params_of(spec: &ModelSpec, about: &[(&'static str, &'static str)]) -> Vec<ParamInfo> {
    let v = serde_json::to_value(spec).expect("model specs serialize");
    about
        .iter()
        .map(|(name, text)| ParamInfo {
            name,
            default: v.get(*name).cloned().unwrap_or(serde_json::Value::Null),
            about: text,
        })
        .collect()
}

/// The six built-in models with their parameters and defaults.
pub fn registry() -> Vec<ModelInfo> {
    let eps = ("epsilon", "effect error");
    let del = ("delta", "intervention error");
    vec![
        ModelInfo {
            name: "dimmer",
            about: "scalar dimmer x -> theta -> y = f(theta) on [0,1]",
            params: params_of(
                &ModelSpec::Dimmer(DimmerParams::default()),
                &[("profile", "linear, quadratic or exponential"), ("a", "exponent of the exponential profile"), eps, del],
            ),
        },
        ModelInfo {
            name: "dimmer-family",
            about: "dimmer with profile (e^(a theta) - 1)/(e^a - 1), a in [-5, 5]",
            params: params_of(
                &ModelSpec::DimmerFamily(FamilyParams::default()),
                &[("a", "family parameter"), eps, del],
            ),
        },
        ModelInfo {
            name: "dimmer-weber",
            about: "dimmer with effect error eps0 * max(y, 1e-3)",
            params: params_of(
                &ModelSpec::DimmerWeber(WeberParams::default()),
                &[("profile", "optimal or linear"), ("r", "scale of the optimal profile"), ("eps0", "relative effect error"), del],
            ),
        },
        ModelInfo {
            name: "binary-switch",
            about: "linear dimmer restricted to the interventions {0, 1}",
            params: params_of(&ModelSpec::BinarySwitch(SwitchParams::default()), &[eps, del]),
        },
        ModelInfo {
            name: "two-species",
            about: "two decaying species observed through their total at N time points",
            params: params_of(
                &ModelSpec::TwoSpecies(TwoSpeciesConfig::default()),
                &[
                    ("a", "2x2 intervention matrix, theta = A x"),
                    ("delta_t", "time step"),
                    ("n_points", "number of time points N"),
                    eps,
                    del,
                ],
            ),
        },
        ModelInfo {
            name: "decay-confounder",
            about: "decay rate confounded by temperature: causal vs statistical intervention metric",
            params: params_of(
                &ModelSpec::DecayConfounder(DecayConfounderConfig::default()),
                &[
                    ("alpha", "temperature coupling"),
                    ("sigma_t", "temperature spread"),
                    ("sigma_x", "reference concentration spread"),
                    ("x_hat", "mean reference concentration"),
                ],
            ),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_models_all_constructible() {
        let r = registry();
        assert_eq!(r.len(), 6);
        for m in &r {
            let spec = ModelSpec::by_name(m.name).unwrap();
            assert_eq!(spec.name(), m.name);
            spec.build().unwrap();
            assert!(m.params.iter().all(|p| !p.default.is_null()), "{}", m.name);
        }
    }

    #[test]
    fn unknown_model_lists_known_ones() {
        let e = ModelSpec::by_name("lamp").unwrap_err().to_string();
        assert!(e.contains("two-species") && e.contains("decay-confounder"));
    }

    #[test]
    fn specs_round_trip_through_toml() {
        let s = ModelSpec::TwoSpecies(TwoSpeciesConfig::default());
        let t = toml::to_string(&s).unwrap();
        let back: ModelSpec = toml::from_str(&t).unwrap();
        assert_eq!(s, back);
        let partial: ModelSpec = toml::from_str("name = \"dimmer-family\"\na = 2.0\n").unwrap();
        assert_eq!(partial, ModelSpec::DimmerFamily(FamilyParams { a: 2.0, ..Default::default() }));
    }

    #[test]
    fn sweep_setters() {
        let s = ModelSpec::by_name("two-species").unwrap().with(SweepVariable::Both, 0.1).unwrap();
        let ModelSpec::TwoSpecies(c) = s else { panic!() };
        assert_eq!((c.epsilon, c.delta), (0.1, 0.1));
        assert!(ModelSpec::by_name("binary-switch").unwrap().with(SweepVariable::DeltaT, 1.0).is_err());
    }
}
