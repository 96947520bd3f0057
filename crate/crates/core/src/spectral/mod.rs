//! Periodic-torus discretization, the DFT contract and the Fourier
//! multipliers of the model: fractional Laplacian, the chemotactic kernel
//! G, the fractional heat semigroup and the Mittag-Leffler families.

mod field;
mod ops;
mod snapshot;

pub use field::{lp_norm, lp_norm_vector, Grid, SpectralField};
pub use ops::{
    diffusion_symbol, divergence, flux, frac_laplacian, g_kernel, gradient, heat_semigroup, ml_multiplier,
    ml_operator, pointwise_product, radial_values, FourierMultiplier, MlFamily,
};
pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot, SnapshotHeader};
