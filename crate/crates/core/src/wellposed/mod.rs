//! Picard iteration for the mild system, the smallness admission test,
//! the self-similarity check and an empirical uniqueness probe.

mod selfsim;

pub use selfsim::{homogeneous_data, selfsim_check, selfsim_mesh, SelfSimReport};

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov::{besov_norm, BesovParams, DyadicCutoff};
use crate::duhamel::{DuhamelKind, DuhamelOperator, History, TimeMesh};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{ml_operator, MlFamily, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub max_iters: usize,
    pub tol_rel: f64,
    pub besov_eta: BesovParams,
    pub besov_v: BesovParams,
}

impl IterationConfig {
    /// X = B^{2-2theta-theta1+n/p}_{p,inf} for eta and Y = B^{2-theta-theta1+n/q}_{q,inf} for v.
    pub fn new(params: &ModelParams, p: f64, q: f64, max_iters: usize, tol_rel: f64) -> Result<Self> {
        if !(tol_rel > 0.0) || max_iters == 0 {
            return Err(Error::ParameterDomain("need tol_rel > 0 and max_iters >= 1".into()));
        }
        Ok(Self {
            max_iters,
            tol_rel,
            besov_eta: BesovParams::new(params.s_eta(p), p, f64::INFINITY)?,
            besov_v: BesovParams::new(params.s_v(q), q, f64::INFINITY)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub norm_eta_x: f64,
    pub norm_v_y: f64,
    pub diff_eta: f64,
    pub diff_v: f64,
    /// diff_eta over the previous diff_eta (NaN on the first row).
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IterationTrace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
}

impl IterationTrace {
    pub fn diverged(&self) -> bool {
        !self.converged
    }

    /// Largest contraction ratio over the last `tail` rows.
    pub fn tail_ratio(&self, tail: usize) -> f64 {
        let r: Vec<f64> = self.rows.iter().map(|r| r.ratio).filter(|r| r.is_finite()).collect();
        r[r.len().saturating_sub(tail)..].iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,norm_eta_X,norm_v_Y,diff_eta,diff_v,ratio\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:e},{:e},{:e},{:e},{:e}", r.iter, r.norm_eta_x, r.norm_v_y, r.diff_eta, r.diff_v, r.ratio);
        }
        s
    }
}

/// Where the iteration starts; the default is the linear part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FirstIterate {
    Linear,
    Zero,
    /// Linear part plus a seeded smooth perturbation of the given relative size.
    Perturbed { amplitude: f64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub history: History,
    pub trace: IterationTrace,
}

/// Sup over mesh nodes of a Besov norm.
pub fn sup_norm(series: &[SpectralField], bp: BesovParams, cutoff: &DyadicCutoff) -> Result<f64> {
    let v: Vec<f64> = series.par_iter().map(|f| besov_norm(f, bp, cutoff)).collect::<Result<_>>()?;
    Ok(v.into_iter().fold(0.0, f64::max))
}

fn diff_series(a: &[SpectralField], b: &[SpectralField]) -> Result<Vec<SpectralField>> {
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

/// Linear evolutions E_a(-t^a A) eta0 and E_a(-t^a (A +- gamma)) v0 at every node.
pub fn linear_part(
    eta0: &SpectralField,
    v0: &SpectralField,
    params: &ModelParams,
    mesh: &TimeMesh,
) -> Result<(Vec<SpectralField>, Vec<SpectralField>)> {
    let eta = mesh.nodes().par_iter().map(|&t| ml_operator(eta0, t, params, MlFamily::EAlpha, false)).collect::<Result<_>>()?;
    let v = mesh.nodes().par_iter().map(|&t| ml_operator(v0, t, params, MlFamily::EAlpha, true)).collect::<Result<_>>()?;
    Ok((eta, v))
}

/// Picard solver with its Duhamel weight tables built once.
#[derive(Debug, Clone)]
pub struct PicardSolver {
    pub params: ModelParams,
    pub mesh: TimeMesh,
    pub config: IterationConfig,
    pub cutoff: DyadicCutoff,
    op_b: DuhamelOperator,
    op_t: DuhamelOperator,
    /// With false the B term is dropped (linear evolution only).
    pub nonlinear: bool,
}

impl PicardSolver {
    pub fn new(grid: crate::spectral::Grid, params: &ModelParams, mesh: &TimeMesh, config: IterationConfig) -> Result<Self> {
        params.validate()?;
        if grid.dim != params.dim {
            return Err(Error::ParameterDomain(format!("grid dimension {} differs from model dimension {}", grid.dim, params.dim)));
        }
        Ok(Self {
            params: *params,
            mesh: mesh.clone(),
            config,
            cutoff: DyadicCutoff::new(grid)?,
            op_b: DuhamelOperator::new(DuhamelKind::B, grid, mesh, params)?,
            op_t: DuhamelOperator::new(DuhamelKind::T, grid, mesh, params)?,
            nonlinear: true,
        })
    }

    pub fn solve(&self, eta0: &SpectralField, v0: &SpectralField, first: FirstIterate) -> Result<Solution> {
        let grid = self.cutoff.grid;
        if eta0.grid != grid || v0.grid != grid {
            return Err(Error::GridMismatch);
        }
        let last = self.mesh.n_steps();
        let (eta1, v1) = linear_part(eta0, v0, &self.params, &self.mesh)?;
        let (mut eta, mut v) = match first {
            FirstIterate::Linear => (eta1.clone(), v1.clone()),
            FirstIterate::Zero => (vec![SpectralField::zeros(grid); last + 1], vec![SpectralField::zeros(grid); last + 1]),
            FirstIterate::Perturbed { amplitude, seed } => {
                let pe = smooth_perturbation(grid, seed);
                let pv = smooth_perturbation(grid, seed.wrapping_add(1));
                let se = amplitude * eta0.max_abs_coeff().max(1e-300) / pe.max_abs_coeff().max(1e-300);
                let sv = amplitude * v0.max_abs_coeff().max(1e-300) / pv.max_abs_coeff().max(1e-300);
                (
                    eta1.iter().map(|f| pe.axpy(se, f)).collect::<Result<_>>()?,
                    v1.iter().map(|f| pv.axpy(sv, f)).collect::<Result<_>>()?,
                )
            }
        };
        let cfg = self.config;
        let mut trace = IterationTrace::default();
        let mut prev_diff = f64::NAN;
        for iter in 1..=cfg.max_iters {
            let hist = History::from_series(eta.clone(), v.clone())?;
            let eta_next: Vec<SpectralField> = if self.nonlinear {
                let src = self.op_b.sources(&hist, last)?;
                (0..=last).into_par_iter().map(|n| self.op_b.apply(&src, n)?.add(&eta1[n])).collect::<Result<_>>()?
            } else {
                eta1.clone()
            };
            let t_src = eta_next.clone();
            let v_next: Vec<SpectralField> =
                (0..=last).into_par_iter().map(|n| self.op_t.apply(&t_src, n)?.add(&v1[n])).collect::<Result<_>>()?;
            if eta_next.iter().chain(&v_next).any(|f| !f.is_finite()) {
                return Err(Error::BlowUp { iterate: iter });
            }
            let norm_eta_x = sup_norm(&eta_next, cfg.besov_eta, &self.cutoff)?;
            let norm_v_y = sup_norm(&v_next, cfg.besov_v, &self.cutoff)?;
            let diff_eta = sup_norm(&diff_series(&eta_next, &eta)?, cfg.besov_eta, &self.cutoff)?;
            let diff_v = sup_norm(&diff_series(&v_next, &v)?, cfg.besov_v, &self.cutoff)?;
            if ![norm_eta_x, norm_v_y, diff_eta, diff_v].iter().all(|x| x.is_finite()) {
                return Err(Error::BlowUp { iterate: iter });
            }
            let ratio = if prev_diff.is_nan() {
                f64::NAN
            } else if prev_diff == 0.0 {
                0.0
            } else {
                diff_eta / prev_diff
            };
            prev_diff = diff_eta;
            trace.rows.push(TraceRow { iter, norm_eta_x, norm_v_y, diff_eta, diff_v, ratio });
            eta = eta_next;
            v = v_next;
            let small = |d: f64, n: f64| d <= cfg.tol_rel * n || d == 0.0;
            if small(diff_eta, norm_eta_x) && small(diff_v, norm_v_y) {
                trace.converged = true;
                break;
            }
        }
        Ok(Solution { history: History::from_series(eta, v)?, trace })
    }
}

fn smooth_perturbation(grid: crate::spectral::Grid, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f = SpectralField::from_values(grid, &vals).expect("length matches grid");
    // keep only the lowest few shells of modes
    let mut out = SpectralField::zeros(grid);
    for (i, c) in f.coeffs.iter().enumerate() {
        if i != 0 && grid.k_norm_sq(i) <= 16 && !grid.touches_nyquist(i) {
            out.coeffs[i] = *c;
        }
    }
    out
}

/// Runs the Picard iteration from the linear part.
pub fn picard_solve(
    eta0: &SpectralField,
    v0: &SpectralField,
    params: &ModelParams,
    mesh: &TimeMesh,
    config: IterationConfig,
) -> Result<Solution> {
    PicardSolver::new(eta0.grid, params, mesh, config)?.solve(eta0, v0, FirstIterate::Linear)
}

/// Empirical stand-ins for the existential constants of the iteration argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstants {
    /// Linear eta evolution in X.
    pub c1: f64,
    /// Linear v evolution in Y.
    pub c2: f64,
    /// T operator from X to Y.
    pub c: f64,
    /// B operator, X x Y to X.
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallnessReport {
    pub eps: f64,
    pub admitted: bool,
    pub norm_eta0: f64,
    pub norm_v0: f64,
    /// Largest factor by which the data can be scaled and stay admitted.
    pub amplitude_threshold: f64,
}

/// Admission test with eps = eps_fraction / (2K): requires
/// C1 ||eta0||_X <= eps/(4C) and C2 ||v0||_Y <= eps/2.
pub fn smallness_check(
    eta0: &SpectralField,
    v0: &SpectralField,
    config: &IterationConfig,
    constants: EmpiricalConstants,
    eps_fraction: f64,
    cutoff: &DyadicCutoff,
) -> Result<SmallnessReport> {
    let EmpiricalConstants { c1, c2, c, k } = constants;
    if !(c1 > 0.0 && c2 > 0.0 && c > 0.0 && k > 0.0) {
        return Err(Error::ParameterDomain("empirical constants must be positive".into()));
    }
    if !(eps_fraction > 0.0 && eps_fraction < 1.0) {
        return Err(Error::ParameterDomain(format!("eps fraction must lie in (0, 1), got {eps_fraction}")));
    }
    let eps = eps_fraction / (2.0 * k);
    let norm_eta0 = besov_norm(eta0, config.besov_eta, cutoff)?;
    let norm_v0 = besov_norm(v0, config.besov_v, cutoff)?;
    let lim_eta = eps / (4.0 * c * c1);
    let lim_v = eps / (2.0 * c2);
    let admitted = norm_eta0 <= lim_eta && norm_v0 <= lim_v;
    let thr = |n: f64, lim: f64| if n == 0.0 { f64::INFINITY } else { lim / n };
    Ok(SmallnessReport { eps, admitted, norm_eta0, norm_v0, amplitude_threshold: thr(norm_eta0, lim_eta).min(thr(norm_v0, lim_v)) })
}

/// Checks the iterate bounds ||eta^n||_X < eps/(2C) and ||v^n||_Y < eps on a trace.
pub fn iterate_bounds_hold(trace: &IterationTrace, eps: f64, c: f64) -> bool {
    trace.rows.iter().all(|r| r.norm_eta_x < eps / (2.0 * c) && r.norm_v_y < eps)
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    /// Max over pairs of the relative space-time sup distance.
    pub max_pairwise_distance: f64,
    pub converged_starts: usize,
    /// Starts that failed to converge or blew up.
    pub excluded: Vec<String>,
}

/// Runs the iteration from several first iterates and compares the limits.
pub fn uniqueness_probe(
    eta0: &SpectralField,
    v0: &SpectralField,
    params: &ModelParams,
    mesh: &TimeMesh,
    config: IterationConfig,
    n_starts: usize,
) -> Result<UniquenessReport> {
    let solver = PicardSolver::new(eta0.grid, params, mesh, config)?;
    let starts: Vec<FirstIterate> = (0..n_starts)
        .map(|i| match i {
            0 => FirstIterate::Linear,
            1 => FirstIterate::Zero,
            _ => FirstIterate::Perturbed { amplitude: 0.5, seed: i as u64 },
        })
        .collect();
    let runs: Vec<(FirstIterate, Result<Solution>)> = starts.par_iter().map(|&s| (s, solver.solve(eta0, v0, s))).collect();
    let mut sols = Vec::new();
    let mut excluded = Vec::new();
    for (s, r) in runs {
        match r {
            Ok(sol) if sol.trace.converged => sols.push(sol),
            Ok(_) => excluded.push(format!("{s:?}: not converged")),
            Err(e) => excluded.push(format!("{s:?}: {e}")),
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            worst = worst.max(relative_sup_distance(&sols[i].history.eta, &sols[j].history.eta));
            worst = worst.max(relative_sup_distance(&sols[i].history.v, &sols[j].history.v));
        }
    }
    Ok(UniquenessReport { max_pairwise_distance: worst, converged_starts: sols.len(), excluded })
}

/// max_t ||a - b||_inf / max_t ||a||_inf over grid values.
pub fn relative_sup_distance(a: &[SpectralField], b: &[SpectralField]) -> f64 {
    let sup = |f: &SpectralField| f.to_values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        num = num.max(sup(&x.sub(y).expect("same grid")));
        den = den.max(sup(x));
    }
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    fn setup() -> (Grid, ModelParams, TimeMesh, IterationConfig) {
        let g = Grid::new(1, 32, 2.0 * std::f64::consts::PI).unwrap();
        let p = ModelParams { alpha: 0.8, theta: 1.2, ..Default::default() };
        let mesh = TimeMesh::uniform(1.0, 8).unwrap();
        let cfg = IterationConfig::new(&p, 1.5, 1.5, 30, 1e-10).unwrap();
        (g, p, mesh, cfg)
    }

    fn bump(g: Grid, amp: f64) -> SpectralField {
        SpectralField::from_fn(g, |x| amp * (-x[0] * x[0]).exp()).dealiased()
    }

    #[test]
    fn zero_data_fixed_point() {
        let (g, p, mesh, cfg) = setup();
        let z = SpectralField::zeros(g);
        let sol = picard_solve(&z, &z, &p, &mesh, cfg).unwrap();
        assert!(sol.trace.converged);
        assert_eq!(sol.trace.rows.len(), 1);
    }

    #[test]
    fn decoupled_when_eta_zero() {
        let (g, p, mesh, cfg) = setup();
        let v0 = bump(g, 0.1);
        let sol = picard_solve(&SpectralField::zeros(g), &v0, &p, &mesh, cfg).unwrap();
        let (_, lin_v) = linear_part(&SpectralField::zeros(g), &v0, &p, &mesh).unwrap();
        assert!(sol.history.eta.iter().all(|f| f.max_abs_coeff() == 0.0));
        for (a, b) in sol.history.v.iter().zip(&lin_v) {
            assert!(a.sub(b).unwrap().max_abs_coeff() < 1e-15);
        }
    }

    #[test]
    fn small_data_contracts() {
        let (g, p, mesh, cfg) = setup();
        let sol = picard_solve(&bump(g, 0.05), &bump(g, 0.05), &p, &mesh, cfg).unwrap();
        assert!(sol.trace.converged, "{:?}", sol.trace);
        assert!(sol.trace.tail_ratio(3) < 1.0);
        assert!(sol.history.eta.iter().all(|f| f.conjugate_symmetry_defect() < 1e-12));
    }

    #[test]
    fn smallness_threshold_scales_with_k() {
        let (g, _, _, cfg) = setup();
        let cut = DyadicCutoff::new(g).unwrap();
        let d = bump(g, 1.0);
        let c = EmpiricalConstants { c1: 1.0, c2: 1.0, c: 2.0, k: 3.0 };
        let a = smallness_check(&d, &d, &cfg, c, 0.9, &cut).unwrap();
        let b = smallness_check(&d, &d, &cfg, EmpiricalConstants { k: 6.0, ..c }, 0.9, &cut).unwrap();
        assert!((a.amplitude_threshold / b.amplitude_threshold - 2.0).abs() < 1e-12);
        let z = SpectralField::zeros(g);
        assert!(smallness_check(&z, &z, &cfg, c, 0.9, &cut).unwrap().admitted);
    }

    #[test]
    fn single_start_distance_zero() {
        let (g, p, mesh, cfg) = setup();
        let r = uniqueness_probe(&bump(g, 0.05), &bump(g, 0.05), &p, &mesh, cfg, 1).unwrap();
        assert_eq!(r.max_pairwise_distance, 0.0);
    }
}
