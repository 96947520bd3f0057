//! Scalar special functions: gamma helpers, the two-parameter
//! Mittag-Leffler function on the negative real axis, and the Mainardi
//! function with its moments.

pub mod gamma;
pub mod mainardi;
pub mod mittag_leffler;

pub use gamma::{gamma_fn, ln_gamma, rgamma};
pub use mainardi::{mainardi_eval, mainardi_eval_series, mainardi_laplace, mainardi_moment};
pub use mittag_leffler::{ml, ml_eval, ml_eval_series, ml_signed, Branch, EvalReport, MlParams};
