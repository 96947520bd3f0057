use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::RatioReport;
use crate::besov::{besov_norm, besov_norm_vector, product_estimate_check, BesovParams, DyadicCutoff, ProductParams};
use crate::duhamel::{DuhamelKind, DuhamelOperator, TimeMesh};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::specfun::{ml_signed, MlParams};
use crate::spectral::{divergence, flux, ml_operator, radial_values, MlFamily, SpectralField};
use crate::wellposed::EmpiricalConstants;

/// Empirical constant per variant (a final time, a grid, ...), each the max over one ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantStudy {
    pub check_id: String,
    pub variants: Vec<(String, f64)>,
    pub ensemble: usize,
    /// Members skipped because a denominator vanished.
    pub excluded: usize,
    pub seed: Option<u64>,
}

impl ConstantStudy {
    pub fn max(&self) -> f64 {
        self.variants.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.variants.iter().map(|v| v.1).fold(f64::INFINITY, f64::min)
    }

    /// (max - min) / min across variants.
    pub fn variation(&self) -> f64 {
        (self.max() - self.min()) / self.min()
    }

    /// measured = largest constant, predicted = smallest; PASS when they differ by at most `tol`.
    pub fn report(&self, tol: f64, grid: &str) -> RatioReport {
        let mut r = RatioReport::new(self.check_id.clone(), self.max(), self.min()).judge(tol);
        r.ensemble = self.ensemble;
        r.seed = self.seed;
        r.grid = grid.to_string();
        r.params_json = serde_json::to_string(&self.variants).unwrap_or_default();
        r
    }

    fn merge(check_id: &str, ensemble: usize, runs: Vec<(String, (f64, usize))>) -> Self {
        let excluded = runs.iter().map(|r| r.1 .1).max().unwrap_or(0);
        Self {
            check_id: check_id.into(),
            variants: runs.into_iter().map(|(l, (k, _))| (l, k)).collect(),
            ensemble,
            excluded,
            seed: None,
        }
    }
}

fn scaled_mesh(mesh: &TimeMesh, t_final: f64) -> Result<TimeMesh> {
    let s = t_final / mesh.t_final;
    TimeMesh::from_nodes(mesh.nodes().iter().map(|t| t * s).collect())
}

fn inf(s: f64, p: f64) -> BesovParams {
    BesovParams { s, p, r: f64::INFINITY }
}

/// sup_t ||B(eta, v)(t)||_{B^{s_eta}_{p,inf}} / (||eta||_{B^{s_eta}_{p,inf}} ||v||_{B^{s_v}_{q,inf}})
/// for a pair frozen in time; None when a denominator vanishes.
pub fn bilinear_ratio(
    op: &DuhamelOperator,
    eta: &SpectralField,
    v: &SpectralField,
    params: &ModelParams,
    p: f64,
    q: f64,
    cutoff: &DyadicCutoff,
) -> Result<Option<f64>> {
    if op.kind != DuhamelKind::B {
        return Err(Error::Precondition("bilinear_ratio needs the B operator".into()));
    }
    let de = besov_norm(eta, inf(params.s_eta(p), p), cutoff)?;
    let dv = besov_norm(v, inf(params.s_v(q), q), cutoff)?;
    if de == 0.0 || dv == 0.0 {
        return Ok(None);
    }
    let src = divergence(&flux(eta, v, params.theta1)?)?;
    let sources = vec![src; op.mesh.len()];
    let num = (1..op.mesh.len())
        .into_par_iter()
        .map(|n| besov_norm(&op.apply(&sources, n)?, inf(params.s_eta(p), p), cutoff))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Some(num / (de * dv)))
}

/// sup_t ||T(eta)(t)||_{B^{s_v}_{q,inf}} / ||eta||_{B^{s_eta}_{p,inf}} for eta frozen in time.
pub fn linear_ratio(
    op: &DuhamelOperator,
    eta: &SpectralField,
    params: &ModelParams,
    p: f64,
    q: f64,
    cutoff: &DyadicCutoff,
) -> Result<Option<f64>> {
    if op.kind != DuhamelKind::T {
        return Err(Error::Precondition("linear_ratio needs the T operator".into()));
    }
    let de = besov_norm(eta, inf(params.s_eta(p), p), cutoff)?;
    if de == 0.0 {
        return Ok(None);
    }
    let sources = vec![eta.clone(); op.mesh.len()];
    let num = (1..op.mesh.len())
        .into_par_iter()
        .map(|n| besov_norm(&op.apply(&sources, n)?, inf(params.s_v(q), q), cutoff))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Some(num / de))
}

fn max_over<F>(n: usize, f: F) -> Result<(f64, usize)>
where
    F: Fn(usize) -> Result<Option<f64>>,
{
    let mut best: f64 = 0.0;
    let mut skipped = 0;
    for i in 0..n {
        match f(i)? {
            Some(r) => best = best.max(r),
            None => skipped += 1,
        }
    }
    if skipped == n {
        return Err(Error::Precondition("every ensemble member is degenerate".into()));
    }
    Ok((best, skipped))
}

/// Empirical bilinear constant over an ensemble of frozen pairs, for each final
/// time in `t_values` (the mesh is rescaled from its own t_final).
pub fn bilinear_constant_study(
    pairs: &[(SpectralField, SpectralField)],
    params: &ModelParams,
    mesh: &TimeMesh,
    p: f64,
    q: f64,
    t_values: &[f64],
) -> Result<ConstantStudy> {
    let g = pairs.first().ok_or(Error::Precondition("empty ensemble".into()))?.0.grid;
    let cutoff = DyadicCutoff::new(g)?;
    let runs = t_values
        .iter()
        .map(|&t| {
            let op = DuhamelOperator::new(DuhamelKind::B, g, &scaled_mesh(mesh, t)?, params)?;
            let k = max_over(pairs.len(), |i| bilinear_ratio(&op, &pairs[i].0, &pairs[i].1, params, p, q, &cutoff))?;
            Ok((format!("T={t}"), k))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConstantStudy::merge("bilinear_constant", pairs.len(), runs))
}

/// Empirical constant of T: eta space -> v space, per final time.
pub fn linear_operator_study(
    etas: &[SpectralField],
    params: &ModelParams,
    mesh: &TimeMesh,
    p: f64,
    q: f64,
    t_values: &[f64],
) -> Result<ConstantStudy> {
    let g = etas.first().ok_or(Error::Precondition("empty ensemble".into()))?.grid;
    let cutoff = DyadicCutoff::new(g)?;
    let runs = t_values
        .iter()
        .map(|&t| {
            let op = DuhamelOperator::new(DuhamelKind::T, g, &scaled_mesh(mesh, t)?, params)?;
            let k = max_over(etas.len(), |i| linear_ratio(&op, &etas[i], params, p, q, &cutoff))?;
            Ok((format!("T={t}"), k))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConstantStudy::merge("linear_operator_constant", etas.len(), runs))
}

/// Max over an ensemble of the product-estimate ratio, once per labelled ensemble
/// (typically the same fields on successively refined grids).
pub fn product_ratio_study(ensembles: &[(String, Vec<(SpectralField, SpectralField)>)], pp: ProductParams) -> Result<ConstantStudy> {
    let runs = ensembles
        .iter()
        .map(|(label, pairs)| {
            let g = pairs.first().ok_or(Error::Precondition("empty ensemble".into()))?.0.grid;
            let cutoff = DyadicCutoff::new(g)?;
            let vals: Vec<f64> = pairs.par_iter().map(|(f, h)| product_estimate_check(f, h, pp, &cutoff)).collect::<Result<_>>()?;
            let skipped = vals.iter().filter(|&&v| v == 0.0).count();
            Ok((label.clone(), (vals.into_iter().fold(0.0, f64::max), skipped)))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = ensembles.first().map_or(0, |e| e.1.len());
    Ok(ConstantStudy::merge("product_estimate", n, runs))
}

/// Exponents of the time-integrated divergence operator; requires -s + theta - 1 = -s0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorBSpec {
    pub s: f64,
    pub s0: f64,
    pub p: f64,
    pub theta: f64,
    pub alpha: f64,
}

/// int_0^inf tau^{a-1} div E_{a,a}(-tau^a (-Delta)^{theta/2}) f(tau) dtau, with f sampled on
/// a log grid over [tau0, t_final] and held constant beyond t_final. Each interval
/// is integrated exactly per mode, using d/dtau E_a(-lambda tau^a) = -lambda tau^{a-1} E_{a,a}(-lambda tau^a),
/// against the trapezoidal average of f.
pub fn operator_b<F>(f: F, spec: &OperatorBSpec, tau0: f64, t_final: f64, points_per_decade: usize) -> Result<(Vec<SpectralField>, SpectralField)>
where
    F: Fn(f64) -> Result<Vec<SpectralField>> + Sync,
{
    if !(tau0 > 0.0 && t_final > tau0) || points_per_decade < 2 {
        return Err(Error::ParameterDomain("operator_b needs 0 < tau0 < t_final and >= 2 points per decade".into()));
    }
    let m = ((t_final / tau0).log10() * points_per_decade as f64).ceil() as usize;
    let du = (t_final / tau0).ln() / m as f64;
    let taus: Vec<f64> = (0..=m).map(|k| if k == m { t_final } else { tau0 * (k as f64 * du).exp() }).collect();
    let samples: Vec<Vec<SpectralField>> = taus.par_iter().map(|&t| f(t)).collect::<Result<_>>()?;
    let grid = samples[0][0].grid;
    let mp = MlParams::new(spec.alpha, 1.0)?;
    // 1 - E_a(-lambda tau^a) at every node, per mode; the zero mode is removed by the divergence
    let cum: Vec<Vec<f64>> = taus
        .par_iter()
        .map(|&t| radial_values(&grid, |r| if r == 0.0 { Ok(0.0) } else { Ok(1.0 - ml_signed(mp, -t.powf(spec.alpha) * r.powf(spec.theta))?) }))
        .collect::<Result<_>>()?;
    let lam = radial_values(&grid, |r| Ok(if r == 0.0 { 0.0 } else { r.powf(spec.theta) }))?;
    let dim = samples[0].len();
    let mut acc: Vec<SpectralField> = vec![SpectralField::zeros(grid); dim];
    for (c, a) in acc.iter_mut().enumerate() {
        for i in 1..grid.len() {
            let l = lam[i];
            // head: f(tau0) over (0, tau0]; tail: f(T) over [T, inf)
            let mut s = samples[0][c].coeffs[i] * cum[0][i];
            for k in 0..m {
                let avg = (samples[k][c].coeffs[i] + samples[k + 1][c].coeffs[i]) * 0.5;
                s += avg * (cum[k + 1][i] - cum[k][i]);
            }
            s += samples[m][c].coeffs[i] * (1.0 - cum[m][i]);
            a.coeffs[i] = s / l;
        }
    }
    let out = divergence(&acc)?;
    Ok((acc, out))
}

/// ||B(f)||_{B^s_{p,inf}} / sup_t ||f(t)||_{B^{s0}_{p,inf}} for each field of the ensemble
/// modulated by the time profile `profile`.
pub fn operator_b_study<P>(
    fields: &[Vec<SpectralField>],
    profile: P,
    spec: &OperatorBSpec,
    t_final: f64,
    points_per_decade: usize,
) -> Result<ConstantStudy>
where
    P: Fn(f64) -> f64 + Sync,
{
    if ((-spec.s + spec.theta - 1.0) - (-spec.s0)).abs() > 1e-10 {
        return Err(Error::ParameterDomain(format!(
            "exponent relation -s + theta - 1 = -s0 violated: {} vs {}",
            -spec.s + spec.theta - 1.0,
            -spec.s0
        )));
    }
    let g = fields.first().and_then(|f| f.first()).ok_or(Error::Precondition("empty ensemble".into()))?.grid;
    let cutoff = DyadicCutoff::new(g)?;
    let xi_max = g.dxi() * g.n as f64 / 2.0 * (g.dim as f64).sqrt();
    let tau0 = (1e-4 / xi_max.powf(spec.theta)).powf(1.0 / spec.alpha).min(t_final * 1e-3);
    // sup of the profile on the sampling grid
    let m = ((t_final / tau0).log10() * points_per_decade as f64).ceil() as usize;
    let sup_a = (0..=m).map(|k| profile(tau0 * (t_final / tau0).powf(k as f64 / m as f64)).abs()).fold(0.0, f64::max);
    let k = max_over(fields.len(), |i| {
        let den = besov_norm_vector(&fields[i], inf(spec.s0, spec.p), &cutoff)? * sup_a;
        if den == 0.0 {
            return Ok(None);
        }
        let (_, b) = operator_b(|t| Ok(fields[i].iter().map(|c| c.scale(profile(t))).collect()), spec, tau0, t_final, points_per_decade)?;
        Ok(Some(besov_norm(&b, inf(spec.s, spec.p), &cutoff)? / den))
    })?;
    Ok(ConstantStudy::merge("operator_b", fields.len(), vec![(format!("T={t_final}"), k)]))
}

/// max over the ensemble of sup_t ||E_a(-t^a m(D)) f||_B / ||f||_B; `shift` selects the
/// gamma-shifted symbol of the v equation.
pub fn evolution_constant(fields: &[SpectralField], params: &ModelParams, mesh: &TimeMesh, bp: BesovParams, shift: bool) -> Result<f64> {
    let g = fields.first().ok_or(Error::Precondition("empty ensemble".into()))?.grid;
    let cutoff = DyadicCutoff::new(g)?;
    let (k, _) = max_over(fields.len(), |i| {
        let den = besov_norm(&fields[i], bp, &cutoff)?;
        if den == 0.0 {
            return Ok(None);
        }
        let num = mesh
            .nodes()
            .par_iter()
            .map(|&t| besov_norm(&ml_operator(&fields[i], t, params, MlFamily::EAlpha, shift)?, bp, &cutoff))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(Some(num / den))
    })?;
    Ok(k)
}

/// C1, C2 (linear evolutions), C (T operator) and K (B operator) measured on one
/// ensemble of pairs over the given mesh.
pub fn empirical_constants(
    pairs: &[(SpectralField, SpectralField)],
    params: &ModelParams,
    mesh: &TimeMesh,
    p: f64,
    q: f64,
) -> Result<EmpiricalConstants> {
    let etas: Vec<SpectralField> = pairs.iter().map(|p| p.0.clone()).collect();
    let vs: Vec<SpectralField> = pairs.iter().map(|p| p.1.clone()).collect();
    let c1 = evolution_constant(&etas, params, mesh, inf(params.s_eta(p), p), false)?;
    let c2 = evolution_constant(&vs, params, mesh, inf(params.s_v(q), q), true)?;
    let c = linear_operator_study(&etas, params, mesh, p, q, &[mesh.t_final])?.max();
    let k = bilinear_constant_study(pairs, params, mesh, p, q, &[mesh.t_final])?.max();
    Ok(EmpiricalConstants { c1, c2, c, k })
}
