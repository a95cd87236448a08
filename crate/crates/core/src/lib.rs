//! Exact and geometric effective information for Gaussian causal models.

pub mod channels;
pub mod cli;
pub mod ei;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod manifold;
pub mod map;
pub mod models;
pub mod quadrature;

pub use error::{Error, Result};
