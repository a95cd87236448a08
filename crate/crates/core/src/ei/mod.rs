//! Effective information: exact (quadrature, Monte Carlo), geometric, and the
//! one-dimensional dimmer approximation.

mod dimmer;
mod exact;
mod geometric;
mod mc;
mod report;

pub use dimmer::{ei_dimmer_approx, Profile};
pub use exact::{compose, effect_distribution, ei_exact_quadrature, ComposedChannel, DensityEstimate, QuadratureSpec, Rule};
pub use geometric::{ei_geometric, intervention_volume, GeometricTerms};
pub use mc::{ei_exact_mc, MonteCarloSpec};
pub use report::{EIReport, Method, Sampling, Warning};
