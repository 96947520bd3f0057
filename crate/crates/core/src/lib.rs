//! Pseudospectral machinery for a space-time fractional chemotaxis
//! system in mild form: Mittag-Leffler operator families, the fractional
//! Laplacian and chemotactic kernel on a periodic torus, Littlewood-Paley
//! blocks and homogeneous Besov norms, singular Duhamel quadrature, Picard
//! iteration, and a harness that measures the decay, integral, product and
//! bilinear estimates numerically.

pub mod besov;
pub mod cli;
pub mod duhamel;
pub mod error;
pub mod estimates;
pub mod model;
pub mod quad;
pub mod spectral;
pub mod wellposed;
pub mod specfun;

pub use error::{Error, Result};
