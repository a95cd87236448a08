use thiserror::Error;

/// Errors produced by the numerical routines and the experiment runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the domain {domain:?}")]
    DomainViolation {
        point: Vec<f64>,
        domain: Vec<(f64, f64)>,
    },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate distribution: covariance is not positive definite")]
    DegenerateDistribution,

    #[error("parameter point {theta:?} is unreachable from the intervention set (normalization {normalization:e})")]
    UnreachableParameter { theta: Vec<f64>, normalization: f64 },

    #[error("degenerate model at {node:?}: {reason}")]
    DegenerateModel { node: Vec<f64>, reason: String },

    #[error("interventions are ill-posed: intervention metric is singular")]
    IllPosedInterventions,

    #[error("reparameterization Jacobian is singular at {0:?}")]
    SingularJacobian(Vec<f64>),

    #[error("embedding Jacobian is rank deficient at sigma = {0:?}")]
    DegenerateEmbedding(Vec<f64>),

    #[error("dimmer profile has non-positive slope at theta = {0}")]
    DegenerateProfile(f64),

    #[error("total dimension {dims} exceeds the tensor-grid limit of 4; use the Monte Carlo estimator")]
    UseMonteCarlo { dims: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("series expansion requested outside its validity regime: {0}")]
    Regime(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
