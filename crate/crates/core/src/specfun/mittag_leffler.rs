//! Two-parameter Mittag-Leffler function E_{a,b}(-x) on the negative real
//! axis.
//!
//! Three branches cover x in [0, inf):
//!
//! * power series for small x, as long as the terms stay small enough that
//!   cancellation costs fewer than ~4 digits;
//! * trapezoidal inversion of the Laplace transform
//!   `s^(a-b) / (s^a + x)` along the parabola `s(u) = mu (1 + iu)^2`;
//! * the algebraic expansion `-sum_{k>=1} (-x)^(-k) / Gamma(b - a k)`,
//!   truncated at its smallest term, for large x.
//!
//! For 0 < a < 1 the Laplace transform has no poles on the principal sheet,
//! so the contour only has to avoid the branch cut on the negative axis; the
//! trapezoidal sum then converges like exp(-2 pi N / 3).

use std::f64::consts::PI;

use num_complex::Complex64;

use super::gamma::{ln_gamma_signed, ln_rgamma_envelope, rgamma};
use crate::error::{Error, Result};

/// Default radius for the plain series evaluator.
pub const SERIES_RADIUS: f64 = 5.0;

/// Half-count of trapezoidal nodes on the parabolic contour.
const CONTOUR_NODES: usize = 24;

/// Arguments at or above this use the asymptotic expansion when its
/// truncation error is below `ASYMPTOTIC_TOL`.
const ASYMPTOTIC_MIN_X: f64 = 50.0;
const ASYMPTOTIC_TOL: f64 = 1e-15;

/// The index pair (alpha, beta) of E_{alpha,beta}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MlParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::ParameterDomain(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::ParameterDomain(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { alpha, beta })
    }

    /// E_alpha = E_{alpha,1}.
    pub fn classical(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }
}

/// Which evaluation route produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Series,
    Asymptotic,
    Contour,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalReport {
    pub value: f64,
    pub est_abs_error: f64,
    pub branch: Branch,
}

/// E_{alpha,beta}(-x) for x >= 0.
pub fn ml_eval(params: MlParams, x: f64) -> Result<EvalReport> {
    let MlParams { alpha, beta } = MlParams::new(params.alpha, params.beta)?;
    if !(x >= 0.0) || x.is_infinite() {
        return Err(Error::ParameterDomain(format!("ml_eval needs finite x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(EvalReport { value: rgamma(beta), est_abs_error: 0.0, branch: Branch::Series });
    }
    if alpha == 1.0 && beta == 1.0 {
        let v = (-x).exp();
        return Ok(EvalReport { value: v, est_abs_error: 2.0 * f64::EPSILON * v, branch: Branch::Series });
    }
    if series_is_safe(alpha, x) {
        let (value, err) = series_sum(alpha, beta, -x, None);
        return Ok(EvalReport { value, est_abs_error: err, branch: Branch::Series });
    }
    if x >= ASYMPTOTIC_MIN_X {
        if let Some((value, err)) = asymptotic_sum(alpha, beta, x) {
            if err <= ASYMPTOTIC_TOL {
                let err = err + 4.0 * f64::EPSILON * value.abs();
                return Ok(EvalReport { value, est_abs_error: err, branch: Branch::Asymptotic });
            }
        }
    }
    let (value, err) = contour_sum(alpha, beta, x);
    Ok(EvalReport { value, est_abs_error: err, branch: Branch::Contour })
}

/// Convenience wrapper returning only the value.
pub fn ml(alpha: f64, beta: f64, x: f64) -> Result<f64> {
    Ok(ml_eval(MlParams::new(alpha, beta)?, x)?.value)
}

/// E_{alpha,beta}(z) for real z of either sign. Positive arguments use the
/// (cancellation-free) power series; they overflow once z^(1/alpha) nears 700.
pub fn ml_signed(params: MlParams, z: f64) -> Result<f64> {
    if z <= 0.0 {
        return Ok(ml_eval(params, -z)?.value);
    }
    let MlParams { alpha, beta } = params;
    if alpha == 1.0 && beta == 1.0 {
        return Ok(z.exp());
    }
    if z.powf(1.0 / alpha) > 700.0 {
        return Err(Error::Range { z, max: 700f64.powf(alpha) });
    }
    Ok(series_sum(alpha, beta, z, None).0)
}

/// Truncated power series sum_{k < terms} z^k / Gamma(alpha k + beta).
pub fn ml_eval_series(params: MlParams, z: f64, terms: usize) -> Result<f64> {
    let MlParams { alpha, beta } = MlParams::new(params.alpha, params.beta)?;
    if z.abs() > SERIES_RADIUS {
        return Err(Error::BranchSelection { z, radius: SERIES_RADIUS });
    }
    Ok(series_sum(alpha, beta, z, Some(terms)).0)
}

// The largest series term is roughly exp(x^(1/alpha)); keep it below e^6.
fn series_is_safe(alpha: f64, x: f64) -> bool {
    x <= SERIES_RADIUS && x.powf(1.0 / alpha) <= 6.0
}

/// Returns (sum, error estimate). With `terms == None` the sum runs until
/// the terms are negligible and decreasing.
fn series_sum(alpha: f64, beta: f64, z: f64, terms: Option<usize>) -> (f64, f64) {
    if z == 0.0 {
        return (rgamma(beta), 0.0);
    }
    let ln_abs = z.abs().ln();
    let neg = z < 0.0;
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut abs_sum = 0.0;
    let mut prev = f64::INFINITY;
    let limit = terms.unwrap_or(100_000);
    let mut last = 0.0;
    for k in 0..limit {
        let arg = alpha * k as f64 + beta;
        let mag = if k == 0 { rgamma(arg) } else { (k as f64 * ln_abs - ln_gamma_signed(arg).map(|v| v.0).unwrap_or(f64::INFINITY)).exp() };
        let term = if neg && k % 2 == 1 { -mag } else { mag };
        // Kahan-Babuska summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        abs_sum += mag;
        last = mag;
        if terms.is_none() && k > 2 && mag < prev && mag <= 1e-17 * (sum + comp).abs().max(1e-300) {
            break;
        }
        prev = mag;
    }
    let value = sum + comp;
    let err = 4.0 * f64::EPSILON * abs_sum + if terms.is_some() { last } else { 0.0 };
    (value, err)
}

/// Algebraic expansion truncated at its smallest envelope term.
fn asymptotic_sum(alpha: f64, beta: f64, x: f64) -> Option<(f64, f64)> {
    let ln_x = x.ln();
    let mut sum = 0.0;
    let mut prev_env = f64::INFINITY;
    for k in 1..2000 {
        let arg = beta - alpha * k as f64;
        let env = (ln_rgamma_envelope(arg) - k as f64 * ln_x).exp();
        if env > prev_env {
            // optimal truncation reached; error of order the smallest term
            return Some((sum, prev_env));
        }
        // -(-x)^{-k} = (-1)^{k+1} x^{-k}
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * rgamma(arg) * (-(k as f64) * ln_x).exp();
        if env < 1e-18 * sum.abs().max(1e-300) {
            return Some((sum, env));
        }
        prev_env = env;
    }
    None
}

/// Trapezoidal rule on the parabola s(u) = mu (1 + iu)^2, u = k h.
fn contour_sum(alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    let n = CONTOUR_NODES as f64;
    let h = 3.0 / n;
    let mu = PI * n / 12.0;
    let mut acc = 0.0;
    let mut abs_acc = 0.0;
    for k in 0..=CONTOUR_NODES {
        let u = k as f64 * h;
        let w = Complex64::new(1.0, u);
        let s = mu * w * w;
        let ds = 2.0 * mu * w; // ds/du divided by i
        let ln_s = s.ln();
        let s_alpha = (alpha * ln_s).exp();
        let s_ab = ((alpha - beta) * ln_s).exp();
        let g = s.exp() * s_ab / (s_alpha + x) * ds;
        let weight = if k == 0 { 0.5 } else { 1.0 };
        acc += weight * g.re;
        abs_acc += weight * g.norm();
    }
    let value = acc * h / PI;
    let scale = abs_acc * h / PI;
    // roundoff grows with exp(mu); discretization error ~ exp(-2 pi N / 3)
    let err = 64.0 * f64::EPSILON * scale + (-2.0 * PI * n / 3.0).exp() * scale;
    (value, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(alpha: f64, beta: f64, x: f64) -> EvalReport {
        ml_eval(MlParams::new(alpha, beta).unwrap(), x).unwrap()
    }

    #[test]
    fn zero_argument() {
        assert_eq!(e(0.7, 1.0, 0.0).value, 1.0);
        let v = ml_eval_series(MlParams::new(0.5, 0.5).unwrap(), 0.0, 10).unwrap();
        assert!((v - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exponential_case() {
        assert!((e(1.0, 1.0, 1.0).value - (-1f64).exp()).abs() < 1e-16);
        let v = ml_eval_series(MlParams::new(1.0, 1.0).unwrap(), -2.0, 60).unwrap();
        assert!((v - (-2f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn e_one_two_closed_form() {
        // E_{1,2}(-x) = (1 - e^{-x}) / x, through the contour branch
        for &x in &[0.5f64, 7.0, 30.0, 200.0] {
            let want = (1.0 - (-x).exp()) / x;
            assert!((e(1.0, 2.0, x).value - want).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn series_radius_enforced() {
        let p = MlParams::new(0.5, 1.0).unwrap();
        assert!(matches!(ml_eval_series(p, -6.0, 30), Err(Error::BranchSelection { .. })));
    }

    #[test]
    fn invalid_params() {
        assert!(MlParams::new(0.0, 1.0).is_err());
        assert!(MlParams::new(1.2, 1.0).is_err());
        assert!(MlParams::new(0.5, -1.0).is_err());
        assert!(ml_eval(MlParams { alpha: 0.5, beta: 1.0 }, -1.0).is_err());
    }

    #[test]
    fn branches_agree_at_switch_points() {
        for &alpha in &[0.3, 0.6, 0.9] {
            for &x in &[1.0, 4.0, 60.0] {
                let direct = e(alpha, 1.0, x).value;
                let c = contour_sum(alpha, 1.0, x).0;
                assert!((direct - c).abs() < 1e-12, "alpha {alpha} x {x}: {direct} vs {c}");
            }
        }
    }

    #[test]
    fn positive_argument_series() {
        let p = MlParams::new(1.0, 1.0).unwrap();
        assert!((ml_signed(p, 2.0).unwrap() - 2f64.exp()).abs() < 1e-13);
        let p = MlParams::new(0.5, 1.0).unwrap();
        // E_{1/2}(z) = e^{z^2} erfc(-z); at z = 1: e * (1 + erf(1))
        let want = 1f64.exp() * (1.0 + 0.842_700_792_949_714_9);
        assert!((ml_signed(p, 1.0).unwrap() - want).abs() < 1e-13);
    }
}
