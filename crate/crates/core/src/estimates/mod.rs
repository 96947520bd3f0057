//! Numerical checks of the decay, integral, product and bilinear estimates:
//! log-log decay fits on self-similar data, empirical constants over seeded
//! ensembles, and CSV/SVG report emission.

mod decay;
mod ensemble;
mod report;
mod studies;

pub use decay::{
    decay_curve, decay_fit_heat, decay_fit_ml, decay_fit_shifted, self_similar_data, DecayFamily, DecaySample,
    DecaySpec,
};
pub use ensemble::{band_limited_ensemble, band_limited_field, EnsembleSpec};
pub use report::{csv_header, write_csv, write_svg_loglog, RatioReport, Verdict};
pub use studies::{
    bilinear_constant_study, bilinear_ratio, empirical_constants, evolution_constant, linear_operator_study, linear_ratio, operator_b, operator_b_study,
    product_ratio_study, ConstantStudy, OperatorBSpec,
};
