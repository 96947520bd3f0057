//! Littlewood-Paley blocks, discrete homogeneous Besov norms, Bony's
//! paraproduct splitting and a Bernstein-inequality probe.

mod cutoff;

pub use cutoff::{chi, phi, DyadicCutoff, ANNULUS_INNER, ANNULUS_OUTER, MIN_SHELLS};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::window_violations;
use crate::spectral::{flux, lp_norm, lp_norm_vector, pointwise_product, SpectralField};

/// Exponents (s, p, r) of a homogeneous Besov norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub r: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        if !(p >= 1.0) || !(r >= 1.0) || !s.is_finite() {
            return Err(Error::ParameterDomain(format!("Besov exponents need p, r >= 1 and finite s, got ({s}, {p}, {r})")));
        }
        Ok(Self { s, p, r })
    }
}

/// Littlewood-Paley blocks of a field.
#[derive(Debug, Clone)]
pub struct LpBlocks {
    pub j_min: i32,
    pub blocks: Vec<SpectralField>,
    /// L2 norm of the nonzero-frequency part not captured by the blocks.
    pub residual_mass: f64,
}

impl LpBlocks {
    pub fn get(&self, j: i32) -> Option<&SpectralField> {
        usize::try_from(j - self.j_min).ok().and_then(|i| self.blocks.get(i))
    }

    pub fn shells(&self) -> impl Iterator<Item = (i32, &SpectralField)> {
        self.blocks.iter().enumerate().map(move |(i, b)| (self.j_min + i as i32, b))
    }

    /// Zero-free reconstruction sum_j Delta_j f.
    pub fn sum(&self) -> SpectralField {
        let mut out = SpectralField::zeros(self.blocks[0].grid);
        for b in &self.blocks {
            for (o, c) in out.coeffs.iter_mut().zip(&b.coeffs) {
                *o += c;
            }
        }
        out
    }
}

pub fn lp_decompose(f: &SpectralField, cutoff: &DyadicCutoff) -> Result<LpBlocks> {
    if f.grid != cutoff.grid {
        return Err(Error::GridMismatch);
    }
    let blocks: Vec<SpectralField> = cutoff.shells().collect::<Vec<_>>().par_iter().map(|&j| cutoff.block(f, j)).collect();
    let mut out = LpBlocks { j_min: cutoff.j_min, blocks, residual_mass: 0.0 };
    let mut rest = f.sub(&out.sum())?;
    rest.coeffs[0] = num_complex::Complex64::new(0.0, 0.0);
    out.residual_mass = rest.l2_norm_spectral();
    Ok(out)
}

fn combine(terms: impl Iterator<Item = f64>, r: f64) -> f64 {
    if r.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Per-shell quantities 2^{js} ||Delta_j f||_{L^p}.
pub fn besov_profile(f: &SpectralField, params: BesovParams, cutoff: &DyadicCutoff) -> Result<Vec<(i32, f64)>> {
    let blocks = lp_decompose(f, cutoff)?;
    let g = f.grid;
    Ok(blocks
        .shells()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(j, b)| {
            let norm = if b.max_abs_coeff() == 0.0 { 0.0 } else { lp_norm(&g, &b.to_values(), params.p) };
            (j, 2f64.powf(j as f64 * params.s) * norm)
        })
        .collect())
}

/// Discrete homogeneous Besov norm: l^r over resolved shells of 2^{js} ||Delta_j f||_{L^p}.
pub fn besov_norm(f: &SpectralField, params: BesovParams, cutoff: &DyadicCutoff) -> Result<f64> {
    Ok(combine(besov_profile(f, params, cutoff)?.into_iter().map(|(_, v)| v), params.r))
}

/// Besov norm of a vector field, with ||Delta_j F||_{L^p} taken on the pointwise Euclidean magnitude.
pub fn besov_norm_vector(fields: &[SpectralField], params: BesovParams, cutoff: &DyadicCutoff) -> Result<f64> {
    let g = cutoff.grid;
    if fields.iter().any(|f| f.grid != g) {
        return Err(Error::GridMismatch);
    }
    let terms: Vec<f64> = cutoff
        .shells()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&j| {
            let comps: Vec<Vec<f64>> = fields.iter().map(|f| cutoff.block(f, j).to_values()).collect();
            2f64.powf(j as f64 * params.s) * lp_norm_vector(&g, &comps, params.p)
        })
        .collect();
    Ok(combine(terms.into_iter(), params.r))
}

/// Paraproducts T_f g, T_g f and remainder R with fg = T_f g + T_g f + R on
/// dealiased inputs; the product of the means is carried in R.
#[derive(Debug, Clone)]
pub struct BonySplit {
    pub t_fg: SpectralField,
    pub t_gf: SpectralField,
    pub remainder: SpectralField,
}

pub fn bony_split(f: &SpectralField, g: &SpectralField, cutoff: &DyadicCutoff) -> Result<BonySplit> {
    f.same_grid(g)?;
    if f.grid != cutoff.grid {
        return Err(Error::GridMismatch);
    }
    let shells: Vec<i32> = cutoff.shells().collect();
    let para = |a: &SpectralField, b: &SpectralField| -> Result<SpectralField> {
        let parts: Vec<SpectralField> = shells
            .par_iter()
            .map(|&j| pointwise_product(&cutoff.low_pass(a, j - 2), &cutoff.block(b, j), true))
            .collect::<Result<_>>()?;
        sum_fields(f.grid, parts)
    };
    let t_fg = para(f, g)?;
    let t_gf = para(g, f)?;
    let parts: Vec<SpectralField> = shells
        .par_iter()
        .map(|&j| {
            let wide = cutoff.block(g, j - 1).add(&cutoff.block(g, j))?.add(&cutoff.block(g, j + 1))?;
            pointwise_product(&cutoff.block(f, j), &wide, true)
        })
        .collect::<Result<_>>()?;
    let mut remainder = sum_fields(f.grid, parts)?;
    remainder.coeffs[0] += f.coeffs[0] * g.coeffs[0];
    Ok(BonySplit { t_fg, t_gf, remainder })
}

fn sum_fields(grid: crate::spectral::Grid, parts: Vec<SpectralField>) -> Result<SpectralField> {
    parts.iter().try_fold(SpectralField::zeros(grid), |acc, p| acc.add(p))
}

/// ||f||_{L^p} and ||f||_{L^p} / (2^{j(n/q - n/p)} ||f||_{L^q}) for f with spectrum in shell j.
pub fn bernstein_check(f: &SpectralField, j: i32, p: f64, q: f64, cutoff: &DyadicCutoff) -> Result<(f64, f64)> {
    if !(q <= p) || !(q >= 1.0) {
        return Err(Error::ParameterDomain(format!("need 1 <= q <= p, got q = {q}, p = {p}")));
    }
    if !cutoff.spectrum_in_shell(f, j, 1e-12) {
        return Err(Error::Precondition(format!("spectrum not confined to the annulus of shell {j}")));
    }
    let n = f.grid.dim as f64;
    let vals = f.to_values();
    let lhs = lp_norm(&f.grid, &vals, p);
    let lq = lp_norm(&f.grid, &vals, q);
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    let scale = 2f64.powf(j as f64 * n * (inv(q) - inv(p)));
    Ok((lhs, if lq == 0.0 { 0.0 } else { lhs / (scale * lq) }))
}

/// Exponents of a product-estimate check; s0, s1, s2 are derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductParams {
    pub p: f64,
    pub q: f64,
    pub theta: f64,
    pub theta1: f64,
    pub rho1: f64,
    pub rho2: f64,
}

impl ProductParams {
    pub fn exponents(&self, dim: usize) -> (f64, f64, f64) {
        let n = dim as f64;
        let s0 = 3.0 - 3.0 * self.theta - self.theta1 + n / self.p;
        let s1 = 2.0 - 2.0 * self.theta - self.theta1 + n / self.p;
        let s2 = 2.0 - self.theta - self.theta1 + n / self.q;
        (s0, s1, s2)
    }
}

/// ||f G(g)||_{B^{s0+rho1+rho2}_{p,inf}} / (||f||_{B^{s1+rho1}_{p,inf}} ||g||_{B^{s2+rho2}_{q,inf}}).
pub fn product_estimate_check(
    f: &SpectralField,
    g: &SpectralField,
    params: ProductParams,
    cutoff: &DyadicCutoff,
) -> Result<f64> {
    let dim = f.grid.dim;
    let v = window_violations(dim, params.theta, params.theta1, params.p, params.q);
    if !v.is_empty() {
        return Err(Error::Hypothesis(v.join("; ")));
    }
    let (s0, s1, s2) = params.exponents(dim);
    let inf = f64::INFINITY;
    let den_f = besov_norm(f, BesovParams { s: s1 + params.rho1, p: params.p, r: inf }, cutoff)?;
    let den_g = besov_norm(g, BesovParams { s: s2 + params.rho2, p: params.q, r: inf }, cutoff)?;
    if den_f == 0.0 || den_g == 0.0 {
        return Ok(0.0);
    }
    let prod = flux(f, g, params.theta1)?;
    let num = besov_norm_vector(&prod, BesovParams { s: s0 + params.rho1 + params.rho2, p: params.p, r: inf }, cutoff)?;
    Ok(num / (den_f * den_g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(g: Grid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        SpectralField::from_values(g, &v).unwrap().dealiased()
    }

    fn grid() -> Grid {
        Grid::new(1, 64, std::f64::consts::PI).unwrap()
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        let g = grid();
        let c = DyadicCutoff::new(g).unwrap();
        let f = random_band(g, 1);
        let b = lp_decompose(&f, &c).unwrap();
        assert!(b.residual_mass < 1e-12);
        let mut rec = b.sum();
        rec.coeffs[0] = f.coeffs[0];
        assert!(rec.sub(&f).unwrap().max_abs_coeff() < 1e-12);
        for j in c.shells() {
            for k in c.shells().filter(|k| (k - j).abs() >= 2) {
                assert_eq!(c.block(&c.block(&f, j), k).max_abs_coeff(), 0.0);
            }
        }
    }

    #[test]
    fn residual_reports_undealiased_mass() {
        let g = grid();
        let c = DyadicCutoff::new(g).unwrap();
        let mut f = SpectralField::zeros(g);
        f.coeffs[30] = Complex64::new(1.0, 0.0);
        let b = lp_decompose(&f, &c).unwrap();
        assert!(b.residual_mass > 0.5);
    }

    #[test]
    fn plane_wave_hits_neighbouring_blocks() {
        let g = grid();
        let c = DyadicCutoff::new(g).unwrap();
        let mut f = SpectralField::zeros(g);
        f.coeffs[5] = Complex64::new(1.0, 0.0);
        let b = lp_decompose(&f, &c).unwrap();
        let hit: Vec<i32> = b.shells().filter(|(_, x)| x.max_abs_coeff() > 0.0).map(|(j, _)| j).collect();
        assert!(!hit.is_empty() && hit.len() <= 2);
        assert!(hit.windows(2).all(|w| w[1] == w[0] + 1));
    }

    #[test]
    fn norm_of_zero_and_homogeneity() {
        let g = grid();
        let c = DyadicCutoff::new(g).unwrap();
        let bp = BesovParams::new(0.3, 2.0, f64::INFINITY).unwrap();
        assert_eq!(besov_norm(&SpectralField::zeros(g), bp, &c).unwrap(), 0.0);
        let f = random_band(g, 2);
        let a = besov_norm(&f, bp, &c).unwrap();
        let b = besov_norm(&f.scale(-2.5), bp, &c).unwrap();
        assert!((b - 2.5 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn bony_reconstructs_product() {
        let g = grid();
        let c = DyadicCutoff::new(g).unwrap();
        let f = random_band(g, 3);
        let h = random_band(g, 4);
        let s = bony_split(&f, &h, &c).unwrap();
        let total = s.t_fg.add(&s.t_gf).unwrap().add(&s.remainder).unwrap();
        let want = pointwise_product(&f, &h, true).unwrap();
        assert!(total.sub(&want).unwrap().l2_norm_spectral() < 1e-12);
    }

    #[test]
    fn bernstein_identity_case_and_precondition() {
        let g = grid();
        let c = DyadicCutoff::new(g).unwrap();
        let shell = c.block(&random_band(g, 5), 2);
        let (_, ratio) = bernstein_check(&shell, 2, 3.0, 3.0, &c).unwrap();
        assert!((ratio - 1.0).abs() <= 1e-12);
        let wide = random_band(g, 6);
        assert!(matches!(bernstein_check(&wide, 2, 4.0, 2.0, &c), Err(Error::Precondition(_))));
    }

    #[test]
    fn product_check_rejects_window_violation() {
        let g = grid();
        let c = DyadicCutoff::new(g).unwrap();
        let f = random_band(g, 7);
        let pp = ProductParams { p: 1.1, q: 1.5, theta: 1.2, theta1: 0.0, rho1: 0.0, rho2: 0.0 };
        let e = product_estimate_check(&f, &f, pp, &c).unwrap_err().to_string();
        assert!(e.contains("p <= 6n/(5n+theta1)"), "{e}");
        let ok = ProductParams { p: 1.5, ..pp };
        assert_eq!(product_estimate_check(&f, &SpectralField::zeros(g), ok, &c).unwrap(), 0.0);
        assert!(product_estimate_check(&f, &f, ok, &c).unwrap().is_finite());
    }
}
