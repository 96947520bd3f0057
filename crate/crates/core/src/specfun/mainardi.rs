//! Mainardi function M_a(z) = sum_n (-z)^n / (n! Gamma(1 - a(1+n))).
//!
//! The power series is entire but cancels badly once z grows, so beyond the
//! point where its terms get large we switch to the positive-integrand
//! representation inherited from the one-sided stable density,
//!
//!   M_a(z) = z^{a/(1-a)} / (pi (1-a)) * int_0^pi A(phi) exp(-A(phi) z^{1/(1-a)}) dphi,
//!   A(phi) = [sin(a phi)^a sin((1-a) phi)^{1-a} / sin(phi)]^{1/(1-a)},
//!
//! which has no cancellation at all.

use std::f64::consts::PI;

use super::gamma::{ln_rgamma_envelope, rgamma};
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_to_infinity, QuadSpec};

/// Error budget above which the plain series is refused.
const SERIES_MAX_ERROR: f64 = 1e-10;
/// The combined evaluator prefers the series only when it is this accurate.
const SERIES_PREFERRED_ERROR: f64 = 1e-14;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::ParameterDomain(format!("Mainardi order must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Series value and its rounding-error estimate.
fn series(alpha: f64, z: f64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    // z^n / n! built incrementally
    let mut pow_fact = 1.0;
    let mut prev = f64::INFINITY;
    for n in 0..2000 {
        if n > 0 {
            pow_fact *= z / n as f64;
        }
        let term = pow_fact * rgamma(1.0 - alpha * (1.0 + n as f64));
        let signed = if n % 2 == 1 { -term } else { term };
        sum += signed;
        let mag = term.abs();
        abs_sum += mag;
        // 1/Gamma vanishes at isolated n; compare against the smooth envelope
        let env = pow_fact.abs() * ln_rgamma_envelope(1.0 - alpha * (1.0 + n as f64)).exp();
        if n > 5 && env < prev && env < 1e-18 * abs_sum.max(1e-300) {
            break;
        }
        prev = env.max(mag);
    }
    (sum, 4.0 * f64::EPSILON * abs_sum)
}

fn kanter_a(alpha: f64, phi: f64) -> f64 {
    let one_m = 1.0 - alpha;
    let ln_a = (alpha * (alpha * phi).sin().ln() + one_m * (one_m * phi).sin().ln() - phi.sin().ln()) / one_m;
    ln_a.exp()
}

fn integral(alpha: f64, z: f64) -> Result<f64> {
    let one_m = 1.0 - alpha;
    let w = z.powf(1.0 / one_m);
    // A is increasing on (0, pi); factor out its minimum so the integral is O(1)
    let a0 = (alpha.powf(alpha) * one_m.powf(one_m)).powf(1.0 / one_m);
    let ln_scale = (alpha / one_m) * z.ln() - a0 * w;
    if ln_scale < -745.0 {
        return Ok(0.0);
    }
    let integrand = |phi: f64| {
        if phi <= 0.0 || phi >= PI {
            return 0.0;
        }
        let a = kanter_a(alpha, phi);
        let v = a * (-(a - a0) * w).exp();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let r = integrate(integrand, 0.0, PI, QuadSpec::new(1e-15, 1e-14))?;
    Ok(ln_scale.exp() / (PI * one_m) * r.value)
}

/// M_alpha(z) for z >= 0, to about 1e-12 absolute on the whole half-line.
pub fn mainardi_eval(alpha: f64, z: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::ParameterDomain(format!("Mainardi argument must be finite and >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(rgamma(1.0 - alpha));
    }
    let (v, err) = series(alpha, z);
    if err <= SERIES_PREFERRED_ERROR {
        return Ok(v);
    }
    integral(alpha, z)
}

/// The bare power series; refuses arguments where cancellation would push
/// the error past 1e-10.
pub fn mainardi_eval_series(alpha: f64, z: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(z >= 0.0) {
        return Err(Error::ParameterDomain(format!("Mainardi argument must be >= 0, got {z}")));
    }
    let (v, err) = series(alpha, z);
    if !(err <= SERIES_MAX_ERROR && v.is_finite()) {
        return Err(Error::Range { z, max: mainardi_series_range(alpha) });
    }
    Ok(v)
}

/// Largest z (to 1e-3) for which the bare series stays within its error budget.
pub fn mainardi_series_range(alpha: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while series(alpha, hi).1 <= SERIES_MAX_ERROR && hi < 1e4 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if series(alpha, mid).1 <= SERIES_MAX_ERROR {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// int_0^inf t^r M_alpha(t) dt by adaptive quadrature.
pub fn mainardi_moment(alpha: f64, r: f64, spec: QuadSpec) -> Result<f64> {
    check_alpha(alpha)?;
    if !(r > -1.0) {
        return Err(Error::ParameterDomain(format!("moment order must exceed -1, got {r}")));
    }
    let f = |t: f64| {
        if t == 0.0 {
            return if r == 0.0 { rgamma(1.0 - alpha) } else { 0.0 };
        }
        t.powf(r) * mainardi_eval(alpha, t).unwrap_or(f64::NAN)
    };
    let head = integrate(f, 0.0, 1.0, spec)?;
    let tail = integrate_to_infinity(f, 1.0, 1.0, spec)?;
    let v = head.value + tail.value;
    if !v.is_finite() {
        return Err(Error::QuadratureFailure("non-finite Mainardi moment".into()));
    }
    Ok(v)
}

/// Laplace-type transform int_0^inf w(t) M_alpha(t) e^{-lambda t} dt with
/// weight w = 1 (giving E_alpha(-lambda)) or w = alpha t (giving
/// E_{alpha,alpha}(-lambda)).
pub fn mainardi_laplace(alpha: f64, lambda: f64, weighted: bool, spec: QuadSpec) -> Result<f64> {
    check_alpha(alpha)?;
    let f = |t: f64| {
        let w = if weighted { alpha * t } else { 1.0 };
        let m = if t == 0.0 { rgamma(1.0 - alpha) } else { mainardi_eval(alpha, t).unwrap_or(f64::NAN) };
        w * m * (-lambda * t).exp()
    };
    let head = integrate(f, 0.0, 1.0, spec)?;
    let tail = integrate_to_infinity(f, 1.0, 1.0, spec)?;
    Ok(head.value + tail.value)
}
