use serde::{Deserialize, Serialize};

use crate::besov::{besov_norm, BesovParams, DyadicCutoff};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{frac_laplacian, ml_operator, MlFamily, SpectralField};

/// Exponents of the time-integrated smoothing estimate; requires -s + theta - zeta = -s0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YamazakiParams {
    pub p: f64,
    pub s: f64,
    pub s0: f64,
    pub zeta: f64,
    pub theta: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct YamazakiReport {
    /// integral / ||f||_{B^{-s}_{p,1}}
    pub ratio: f64,
    pub integral: f64,
    pub head: f64,
    pub tail: f64,
    /// Fitted log-log slope of the integrand over the last decade.
    pub tail_exponent: f64,
    /// (tau, integrand) samples.
    pub samples: Vec<(f64, f64)>,
}

fn integrand(f: &SpectralField, yp: &YamazakiParams, cutoff: &DyadicCutoff, tau: f64) -> Result<f64> {
    let mp = ModelParams { alpha: yp.alpha, theta: yp.theta, dim: f.grid.dim, ..Default::default() };
    let e = ml_operator(f, tau, &mp, MlFamily::EAlphaAlpha, false)?;
    let g = frac_laplacian(&e, yp.zeta).scale(tau.powf(yp.alpha - 1.0));
    besov_norm(&g, BesovParams { s: -yp.s0, p: yp.p, r: 1.0 }, cutoff)
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Integrates tau -> ||tau^{a-1} (-Delta)^{zeta/2} E_{a,a}(-tau^a (-Delta)^{theta/2}) f||_{B^{-s0}_{p,1}}
/// over (0, t_final] on a logarithmic grid, with a power-law head below the
/// first sample and an algebraic tail extrapolated from the last decade.
pub fn yamazaki_integral_check(
    f: &SpectralField,
    yp: YamazakiParams,
    t_final: f64,
    points_per_decade: usize,
    cutoff: &DyadicCutoff,
) -> Result<YamazakiReport> {
    if ((-yp.s + yp.theta - yp.zeta) - (-yp.s0)).abs() > 1e-10 {
        return Err(Error::ParameterDomain(format!(
            "exponent relation -s + theta - zeta = -s0 violated: {} vs {}",
            -yp.s + yp.theta - yp.zeta,
            -yp.s0
        )));
    }
    if !(yp.alpha > 0.0 && yp.alpha <= 1.0) || !(t_final > 0.0) || points_per_decade < 4 {
        return Err(Error::ParameterDomain("alpha in (0,1], t_final > 0 and >= 4 points per decade required".into()));
    }
    let denom = besov_norm(f, BesovParams { s: -yp.s, p: yp.p, r: 1.0 }, cutoff)?;
    if denom == 0.0 {
        return Ok(YamazakiReport { ratio: 0.0, integral: 0.0, head: 0.0, tail: 0.0, tail_exponent: f64::NAN, samples: vec![] });
    }
    // start where tau^a |xi|_max^theta is small, so the integrand is still ~ tau^{a-1}
    let xi_max = f.grid.dxi() * f.grid.n as f64 / 2.0 * (f.grid.dim as f64).sqrt();
    let tau0 = (1e-4 / xi_max.powf(yp.theta)).powf(1.0 / yp.alpha).min(t_final * 1e-3);
    let decades = (t_final / tau0).log10();
    // even number of intervals for Simpson's rule
    let mut m = (decades * points_per_decade as f64).ceil() as usize;
    m += m % 2;
    let du = (t_final / tau0).ln() / m as f64;
    let taus: Vec<f64> = (0..=m).map(|k| if k == m { t_final } else { tau0 * (k as f64 * du).exp() }).collect();
    use rayon::prelude::*;
    let vals: Vec<f64> = taus.par_iter().map(|&t| integrand(f, &yp, cutoff, t)).collect::<Result<_>>()?;
    // Simpson in u = ln tau of tau * I(tau)
    let mut body = 0.0;
    for k in 0..=m {
        let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
        body += w * taus[k] * vals[k];
    }
    body *= du / 3.0;
    let head = vals[0] * tau0 / yp.alpha;
    let start = taus.iter().position(|&t| t >= t_final / 10.0).unwrap_or(0);
    let tail_pts: Vec<(f64, f64)> = taus[start..].iter().copied().zip(vals[start..].iter().copied()).filter(|p| p.1 > 0.0).collect();
    let tail_exponent = if tail_pts.len() >= 3 { loglog_slope(&tail_pts) } else { f64::NAN };
    let tail = if tail_exponent < -1.0 { vals[m] * t_final / (-tail_exponent - 1.0) } else { f64::INFINITY };
    let integral = head + body + tail;
    Ok(YamazakiReport {
        ratio: integral / denom,
        integral,
        head,
        tail,
        tail_exponent,
        samples: taus.into_iter().zip(vals).collect(),
    })
}
