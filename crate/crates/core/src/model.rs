//! Physical and fractional parameters of the model, plus the parameter
//! window under which the product, bilinear and well-posedness estimates
//! are stated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the damping constant gamma enters the Mittag-Leffler argument of the
/// v-equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GammaSign {
    /// Multiplier |xi|^theta + gamma, the fractional analogue of e^{-gamma t} U(t).
    #[default]
    Damped,
    /// Multiplier |xi|^theta - gamma, as the mild formulation is literally written.
    Paper,
}

impl std::str::FromStr for GammaSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "damped" => Ok(Self::Damped),
            "paper" => Ok(Self::Paper),
            other => Err(Error::ParameterDomain(format!("gamma-sign must be `paper` or `damped`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub alpha: f64,
    pub theta: f64,
    pub theta1: f64,
    pub gamma: f64,
    pub chi: f64,
    pub kappa: f64,
    pub d_eta: f64,
    pub d_v: f64,
    pub dim: usize,
    pub gamma_sign: GammaSign,
    /// Admit theta1 in (-2n, 0); the estimates are not claimed there.
    pub allow_negative_theta1: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            theta: 1.2,
            theta1: 0.0,
            gamma: 0.0,
            chi: 1.0,
            kappa: 1.0,
            d_eta: 1.0,
            d_v: 1.0,
            dim: 1,
            gamma_sign: GammaSign::Damped,
            allow_negative_theta1: false,
        }
    }
}

impl ModelParams {
    /// Field-by-field domain checks (not the estimate window).
    pub fn validate(&self) -> Result<()> {
        let n = self.dim as f64;
        let bad = |m: String| Err(Error::ParameterDomain(m));
        if !(1..=3).contains(&self.dim) {
            return bad(format!("dimension must be 1, 2 or 3, got {}", self.dim));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.theta > 0.0) {
            return bad(format!("theta must be positive, got {}", self.theta));
        }
        let lo = if self.allow_negative_theta1 { -2.0 * n } else { 0.0 };
        if !(self.theta1 >= lo && self.theta1 < n) {
            return bad(format!("theta1 must lie in [{lo}, {n}), got {}", self.theta1));
        }
        if !(self.gamma >= 0.0) {
            return bad(format!("gamma must be nonnegative, got {}", self.gamma));
        }
        for (name, v) in [("chi", self.chi), ("kappa", self.kappa), ("D_eta", self.d_eta), ("D_v", self.d_v)] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Regularity index of the eta space: 2 - 2 theta - theta1 + n/p.
    pub fn s_eta(&self, p: f64) -> f64 {
        2.0 - 2.0 * self.theta - self.theta1 + self.dim as f64 / p
    }

    /// Regularity index of the v space: 2 - theta - theta1 + n/q.
    pub fn s_v(&self, q: f64) -> f64 {
        2.0 - self.theta - self.theta1 + self.dim as f64 / q
    }

    /// Regularity index of the product space: 3 - 3 theta - theta1 + n/p.
    pub fn s_product(&self, p: f64) -> f64 {
        3.0 - 3.0 * self.theta - self.theta1 + self.dim as f64 / p
    }

    /// Checks `6n/(5n+theta1) < p <= q <= p'` and
    /// `max{1, 1 - n/2 - theta1/2 + n/p} < theta < 1 + (n - theta1)/3`.
    /// Every violated inequality is named in the error.
    pub fn check_window(&self, p: f64, q: f64) -> Result<()> {
        let violations = window_violations(self.dim, self.theta, self.theta1, p, q);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Hypothesis(violations.join("; ")))
        }
    }
}

/// Hölder conjugate p' = p/(p-1).
pub fn conjugate(p: f64) -> f64 {
    if p <= 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Lists every violated inequality of the estimate window.
pub fn window_violations(dim: usize, theta: f64, theta1: f64, p: f64, q: f64) -> Vec<String> {
    let n = dim as f64;
    let mut out = Vec::new();
    let p_lo = 6.0 * n / (5.0 * n + theta1);
    if !(p > p_lo) {
        out.push(format!("p <= 6n/(5n+theta1): need p > {p_lo:.6}, got p = {p}"));
    }
    if !(p <= q) {
        out.push(format!("p > q: need p <= q, got p = {p}, q = {q}"));
    }
    let pc = conjugate(p);
    if !(q <= pc) {
        out.push(format!("q > p': need q <= p' = {pc:.6}, got q = {q}"));
    }
    let th_lo = 1f64.max(1.0 - n / 2.0 - theta1 / 2.0 + n / p);
    if !(theta > th_lo) {
        out.push(format!(
            "theta <= max{{1, 1-n/2-theta1/2+n/p}}: need theta > {th_lo:.6}, got theta = {theta}"
        ));
    }
    let th_hi = 1.0 + (n - theta1) / 3.0;
    if !(theta < th_hi) {
        out.push(format!("theta >= 1+(n-theta1)/3: need theta < {th_hi:.6}, got theta = {theta}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_accepts_interior_point() {
        let m = ModelParams { theta: 1.2, theta1: 0.0, dim: 1, ..Default::default() };
        m.check_window(1.5, 1.5).unwrap();
    }

    #[test]
    fn window_rejects_large_theta() {
        let m = ModelParams { theta: 3.0, theta1: 0.0, dim: 1, ..Default::default() };
        let e = m.check_window(1.5, 1.5).unwrap_err().to_string();
        assert!(e.contains("theta >= 1+(n-theta1)/3"), "{e}");
    }

    #[test]
    fn window_rejects_small_p() {
        let m = ModelParams { theta: 1.2, theta1: 0.0, dim: 1, ..Default::default() };
        let e = m.check_window(1.1, 1.5).unwrap_err().to_string();
        assert!(e.contains("p <= 6n/(5n+theta1)"), "{e}");
    }

    #[test]
    fn exponents() {
        let m = ModelParams { theta: 1.2, theta1: 0.0, dim: 1, ..Default::default() };
        assert!((m.s_eta(1.5) - (2.0 - 2.4 + 1.0 / 1.5)).abs() < 1e-15);
        assert!((m.s_v(1.5) - (2.0 - 1.2 + 1.0 / 1.5)).abs() < 1e-15);
    }

    #[test]
    fn negative_theta1_gated() {
        let mut m = ModelParams { theta1: -0.5, ..Default::default() };
        assert!(m.validate().is_err());
        m.allow_negative_theta1 = true;
        m.validate().unwrap();
    }
}
