//! Weakly singular time quadrature: the Duhamel operators B and T of the
//! mild formulation, the Riemann-Liouville integral, a Caputo residual
//! diagnostic and the time-integrated smoothing check.

mod kernel;
mod mesh;
mod operators;
mod yamazaki;

pub use kernel::{caputo_residual, rl_integral, KernelPlan, MlKernel};
pub use mesh::{History, TimeMesh};
pub use operators::{duhamel_b, duhamel_t, DuhamelKind, DuhamelOperator};
pub use yamazaki::{loglog_slope, yamazaki_integral_check, YamazakiParams, YamazakiReport};
