use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{Grid, SpectralField};
use crate::error::{Error, Result};
use crate::model::{GammaSign, ModelParams};
use crate::specfun::{ml_signed, MlParams};

/// Which Mittag-Leffler family an operator uses: E_{alpha,1} or E_{alpha,alpha}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MlFamily {
    #[serde(rename = "E_alpha")]
    EAlpha,
    #[serde(rename = "E_alpha_alpha")]
    EAlphaAlpha,
}

impl MlFamily {
    pub fn beta(self, alpha: f64) -> f64 {
        match self {
            Self::EAlpha => 1.0,
            Self::EAlphaAlpha => alpha,
        }
    }
}

type Symbol = dyn Fn(&[f64; 3]) -> Complex64 + Send + Sync;

/// A diagonal operator on the frequency lattice.
#[derive(Clone)]
pub struct FourierMultiplier {
    pub symbol: Arc<Symbol>,
    pub zero_mode_value: Complex64,
    /// Set for odd symbols: the unpaired Nyquist mode is zeroed.
    pub odd: bool,
}

impl std::fmt::Debug for FourierMultiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierMultiplier").field("zero_mode_value", &self.zero_mode_value).finish()
    }
}

impl FourierMultiplier {
    pub fn new<F: Fn(&[f64; 3]) -> Complex64 + Send + Sync + 'static>(symbol: F, zero_mode_value: Complex64) -> Self {
        Self { symbol: Arc::new(symbol), zero_mode_value, odd: false }
    }

    pub fn odd(mut self) -> Self {
        self.odd = true;
        self
    }

    pub fn apply(&self, f: &SpectralField) -> SpectralField {
        let g = f.grid;
        let coeffs = f
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    c * self.zero_mode_value
                } else if self.odd && g.touches_nyquist(i) {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * (self.symbol)(&g.xi(i))
                }
            })
            .collect();
        SpectralField { grid: g, coeffs }
    }
}

/// Evaluates a radial symbol once per distinct |k|^2 and returns per-index values.
pub fn radial_values<F>(grid: &Grid, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let keys: Vec<u64> = (0..grid.len()).map(|i| grid.k_norm_sq(i)).collect();
    let mut distinct: Vec<u64> = keys.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let dxi = grid.dxi();
    let vals: Vec<f64> =
        distinct.par_iter().map(|&k2| f((k2 as f64).sqrt() * dxi)).collect::<Result<Vec<_>>>()?;
    let table: HashMap<u64, f64> = distinct.into_iter().zip(vals).collect();
    Ok(keys.iter().map(|k| table[k]).collect())
}

fn scale_by(f: &SpectralField, m: &[f64]) -> SpectralField {
    SpectralField { grid: f.grid, coeffs: f.coeffs.iter().zip(m).map(|(c, w)| c * *w).collect() }
}

fn radial_apply<F: Fn(f64) -> f64 + Sync>(f: &SpectralField, sym: F) -> SpectralField {
    let m = radial_values(&f.grid, |r| Ok(sym(r))).expect("infallible symbol");
    scale_by(f, &m)
}

/// (-Delta)^{theta/2}: multiplies by |xi|^theta (the mean is kept only for theta = 0).
pub fn frac_laplacian(f: &SpectralField, theta: f64) -> SpectralField {
    if theta == 0.0 {
        return f.clone();
    }
    radial_apply(f, |r| if r == 0.0 { 0.0 } else { r.powf(theta) })
}

/// G(v) = grad (-Delta)^{-theta1/2} v, one field per axis; zero mode and Nyquist set to 0.
pub fn g_kernel(v: &SpectralField, theta1: f64) -> Vec<SpectralField> {
    let g = v.grid;
    let w = radial_values(&g, |r| Ok(if r == 0.0 { 0.0 } else { r.powf(-theta1) })).expect("infallible");
    (0..g.dim)
        .map(|axis| {
            let coeffs = v
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 || g.touches_nyquist(i) {
                        Complex64::new(0.0, 0.0)
                    } else {
                        c * Complex64::new(0.0, g.xi(i)[axis] * w[i])
                    }
                })
                .collect();
            SpectralField { grid: g, coeffs }
        })
        .collect()
}

/// U_theta(t): multiplies by exp(-t |xi|^theta).
pub fn heat_semigroup(f: &SpectralField, t: f64, theta: f64) -> SpectralField {
    radial_apply(f, |r| (-t * r.powf(theta)).exp())
}

/// Diffusion symbol m(xi) used inside the Mittag-Leffler argument.
///
/// Without the shift this is D_eta |xi|^theta; with it, D_v |xi|^theta + gamma
/// (or - gamma under [`GammaSign::Paper`]).
pub fn diffusion_symbol(params: &ModelParams, xi_norm: f64, gamma_shift: bool) -> f64 {
    let lap = if xi_norm == 0.0 { 0.0 } else { xi_norm.powf(params.theta) };
    if gamma_shift {
        let g = match params.gamma_sign {
            GammaSign::Damped => params.gamma,
            GammaSign::Paper => -params.gamma,
        };
        params.d_v * lap + g
    } else {
        params.d_eta * lap
    }
}

/// Per-index multiplier E_{alpha,beta}(-t^alpha m(xi)).
pub fn ml_multiplier(
    grid: &Grid,
    t: f64,
    params: &ModelParams,
    family: MlFamily,
    gamma_shift: bool,
) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::ParameterDomain(format!("time must be >= 0, got {t}")));
    }
    let mp = MlParams::new(params.alpha, family.beta(params.alpha))?;
    let ta = t.powf(params.alpha);
    radial_values(grid, |r| ml_signed(mp, -ta * diffusion_symbol(params, r, gamma_shift)))
}

/// E_{alpha,beta}(-t^alpha m(D)) applied to f.
pub fn ml_operator(
    f: &SpectralField,
    t: f64,
    params: &ModelParams,
    family: MlFamily,
    gamma_shift: bool,
) -> Result<SpectralField> {
    let m = ml_multiplier(&f.grid, t, params, family, gamma_shift)?;
    Ok(scale_by(f, &m))
}

/// sum_j i xi_j f_j
pub fn divergence(fields: &[SpectralField]) -> Result<SpectralField> {
    let first = fields.first().ok_or(Error::ShapeMismatch { expected: 1, got: 0 })?;
    let g = first.grid;
    if fields.len() != g.dim {
        return Err(Error::ShapeMismatch { expected: g.dim, got: fields.len() });
    }
    let mut out = SpectralField::zeros(g);
    for (axis, f) in fields.iter().enumerate() {
        f.same_grid(first)?;
        for (i, (o, c)) in out.coeffs.iter_mut().zip(&f.coeffs).enumerate() {
            if i == 0 || g.touches_nyquist(i) {
                continue;
            }
            *o += c * Complex64::new(0.0, g.xi(i)[axis]);
        }
    }
    Ok(out)
}

/// Plain gradient (theta1 = 0 case of [`g_kernel`]).
pub fn gradient(f: &SpectralField) -> Vec<SpectralField> {
    g_kernel(f, 0.0)
}

/// Grid-space product; with `dealias` both factors and the result are cut to
/// the 2/3 band, which makes the retained modes an exact convolution.
pub fn pointwise_product(f: &SpectralField, g: &SpectralField, dealias: bool) -> Result<SpectralField> {
    f.same_grid(g)?;
    let (a, b) = if dealias { (f.dealiased(), g.dealiased()) } else { (f.clone(), g.clone()) };
    let va = a.to_complex_values();
    let vb = b.to_complex_values();
    let prod: Vec<Complex64> = va.iter().zip(&vb).map(|(x, y)| x * y).collect();
    let out = SpectralField::from_complex_values(f.grid, prod)?;
    Ok(if dealias { out.dealiased() } else { out })
}

/// eta * G(v) componentwise, dealiased.
pub fn flux(eta: &SpectralField, v: &SpectralField, theta1: f64) -> Result<Vec<SpectralField>> {
    g_kernel(v, theta1).iter().map(|gv| pointwise_product(eta, gv, true)).collect()
}
