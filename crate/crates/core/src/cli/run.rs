use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;

use super::config::{DataKind, Experiment, RunConfig};
use crate::besov::{DyadicCutoff, ProductParams};
use crate::duhamel::{yamazaki_integral_check, History, TimeMesh, YamazakiParams};
use crate::error::{Error, Result};
use crate::estimates::{
    band_limited_ensemble, bilinear_constant_study, decay_fit_heat, decay_fit_ml, decay_fit_shifted, empirical_constants,
    linear_operator_study, product_ratio_study, self_similar_data, write_csv, write_svg_loglog, EnsembleSpec, RatioReport,
    Verdict,
};
use crate::model::GammaSign;
use crate::quad::QuadSpec;
use crate::specfun::{gamma_fn, mainardi_laplace, mainardi_moment, ml, ml_eval, MlParams};
use crate::spectral::{save_snapshot, Grid, SpectralField};
use crate::wellposed::{
    homogeneous_data, iterate_bounds_hold, linear_part, selfsim_check, selfsim_mesh, smallness_check, uniqueness_probe,
    FirstIterate, IterationConfig, PicardSolver,
};

const ML_ORACLE: &str = include_str!("../../data/ml_oracle.tsv");

/// Reports of one experiment and where they were written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub experiment: Experiment,
    pub dir: PathBuf,
    pub reports: Vec<RatioReport>,
}

impl RunOutcome {
    pub fn any_fail(&self) -> bool {
        self.reports.iter().any(|r| r.verdict == Verdict::Fail)
    }

    /// 0 when every check is PASS or INCONCLUSIVE, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.any_fail())
    }

    pub fn summary_lines(&self) -> Vec<String> {
        self.reports
            .iter()
            .map(|r| format!("{} {} measured={:.6e} predicted={:.6e} rel_dev={:.3e}", r.verdict, r.check_id, r.measured, r.predicted, r.rel_dev))
            .collect()
    }
}

/// Runs the configured experiment, writing `results.csv` plus plots and
/// snapshots to `<output_dir>/<experiment>/`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let dir = cfg.output_dir.join(cfg.experiment.name());
    std::fs::create_dir_all(&dir)?;
    let reports = match cfg.experiment {
        Experiment::MlEval => ml_eval_exp(cfg, &dir)?,
        Experiment::MainardiMoments => mainardi_exp(cfg)?,
        Experiment::DecayHeat | Experiment::DecayMl => decay_exp(cfg, &dir)?,
        Experiment::Yamazaki => yamazaki_exp(cfg, &dir)?,
        Experiment::Product => product_exp(cfg)?,
        Experiment::Bilinear | Experiment::LinearOp => study_exp(cfg)?,
        Experiment::Solve => solve_exp(cfg, &dir)?,
        Experiment::Selfsim => selfsim_exp(cfg, &dir)?,
        Experiment::Uniqueness => uniqueness_exp(cfg)?,
    };
    write_csv(&dir.join("results.csv"), &reports)?;
    Ok(RunOutcome { experiment: cfg.experiment, dir, reports })
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn grid_tag(g: &Grid) -> String {
    format!("d{}_n{}_L{}", g.dim, g.n, g.half_width)
}

fn quad() -> QuadSpec {
    QuadSpec::new(1e-13, 1e-12)
}

fn ml_eval_exp(cfg: &RunConfig, dir: &Path) -> Result<Vec<RatioReport>> {
    let rows: Vec<[f64; 4]> = ML_ORACLE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|t| t.parse().unwrap_or(f64::NAN)).collect();
            [v[0], v[1], v[2], v[3]]
        })
        .collect();
    let evals = rows
        .par_iter()
        .map(|r| ml_eval(MlParams::new(r[0], r[1])?, r[2]))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("alpha,beta,x,value,oracle,abs_err,est_abs_error,branch\n");
    let mut worst: f64 = 0.0;
    for (r, e) in rows.iter().zip(&evals) {
        let err = (e.value - r[3]).abs();
        worst = worst.max(err);
        csv.push_str(&format!("{},{},{},{:e},{:e},{:e},{:e},{:?}\n", r[0], r[1], r[2], e.value, r[3], err, e.est_abs_error, e.branch));
    }
    std::fs::write(dir.join("ml_oracle.csv"), csv)?;
    if !cfg.ml_eval.points.is_empty() {
        let mut extra = String::from("alpha,beta,x,value,est_abs_error,branch\n");
        for p in &cfg.ml_eval.points {
            let e = ml_eval(MlParams::new(p[0], p[1])?, p[2])?;
            extra.push_str(&format!("{},{},{},{:e},{:e},{:?}\n", p[0], p[1], p[2], e.value, e.est_abs_error, e.branch));
        }
        std::fs::write(dir.join("ml_points.csv"), extra)?;
    }
    let mut rep = RatioReport::new("ml_oracle_max_abs_error", worst, 0.0).judge(cfg.ml_eval.tol);
    rep.ensemble = rows.len();
    rep.params_json = json!({ "points": rows.len(), "tol": cfg.ml_eval.tol }).to_string();
    Ok(vec![rep])
}

fn mainardi_exp(cfg: &RunConfig) -> Result<Vec<RatioReport>> {
    let m = &cfg.mainardi;
    let combos: Vec<(f64, f64)> = m.alphas.iter().flat_map(|&a| m.orders.iter().map(move |&r| (a, r))).collect();
    let mut out = combos
        .par_iter()
        .map(|&(a, r)| {
            let got = mainardi_moment(a, r, quad())?;
            let want = gamma_fn(r + 1.0)? / gamma_fn(a * r + 1.0)?;
            let mut rep = RatioReport::new("mainardi_moment", got, want);
            rep.rel_dev = (got - want).abs();
            rep.verdict = verdict(rep.rel_dev <= m.tol);
            rep.params_json = json!({ "alpha": a, "r": r }).to_string();
            Ok(rep)
        })
        .collect::<Result<Vec<_>>>()?;
    let lap: Vec<(f64, f64, bool)> =
        m.laplace_alphas.iter().flat_map(|&a| m.lambdas.iter().flat_map(move |&l| [(a, l, false), (a, l, true)])).collect();
    let more = lap
        .par_iter()
        .map(|&(a, l, weighted)| {
            let got = mainardi_laplace(a, l, weighted, quad())?;
            let want = ml(a, if weighted { a } else { 1.0 }, l)?;
            let id = if weighted { "mainardi_laplace_e_alpha_alpha" } else { "mainardi_laplace_e_alpha" };
            let mut rep = RatioReport::new(id, got, want);
            rep.rel_dev = (got - want).abs();
            rep.verdict = verdict(rep.rel_dev <= m.tol);
            rep.params_json = json!({ "alpha": a, "lambda": l }).to_string();
            Ok(rep)
        })
        .collect::<Result<Vec<_>>>()?;
    out.extend(more);
    Ok(out)
}

fn decay_exp(cfg: &RunConfig, dir: &Path) -> Result<Vec<RatioReport>> {
    let g = cfg.grid.grid(cfg.model.dim)?;
    let cut = DyadicCutoff::new(g)?;
    let spec = cfg.decay.spec(&cfg.model);
    let f = self_similar_data(&cut, spec.s1, spec.p1);
    let heat = cfg.experiment == Experiment::DecayHeat;
    let fit = if heat { decay_fit_heat(&f, &spec) } else { decay_fit_ml(&f, &spec, cfg.decay.family) };
    let mut out = Vec::new();
    match fit {
        Ok(rep) => {
            write_svg_loglog(&dir.join(format!("{}.svg", rep.check_id)), &rep.check_id, &rep.samples, rep.measured, rep.window)?;
            out.push(rep);
        }
        Err(Error::InsufficientRange { decades, .. }) => {
            let id = if heat { "decay_heat" } else { "decay_ml" };
            let mut rep = RatioReport::new(id, f64::NAN, spec.predicted_slope(g.dim, family_of(cfg)));
            rep.verdict = Verdict::Inconclusive;
            rep.grid = grid_tag(&g);
            rep.params_json = json!({ "spec": spec, "window_decades": decades }).to_string();
            out.push(rep);
        }
        Err(e) => return Err(e),
    }
    if !heat && cfg.model.gamma > 0.0 {
        for sign in [GammaSign::Damped, GammaSign::Paper] {
            let p = crate::model::ModelParams { gamma_sign: sign, ..cfg.model };
            match decay_fit_shifted(&f, &spec, cfg.decay.family, &p) {
                Ok(rep) => {
                    write_svg_loglog(&dir.join(format!("{}.svg", rep.check_id)), &rep.check_id, &rep.samples, 0.0, None)?;
                    out.push(rep);
                }
                // the printed sign makes low modes grow past the evaluator's range
                Err(e @ (Error::Range { .. } | Error::BranchSelection { .. })) if sign == GammaSign::Paper => {
                    let mut rep = RatioReport::new("decay_shifted_paper", f64::NAN, 1.0);
                    rep.verdict = Verdict::Inconclusive;
                    rep.grid = grid_tag(&g);
                    rep.params_json = json!({ "spec": spec, "gamma": cfg.model.gamma, "reason": e.to_string() }).to_string();
                    out.push(rep);
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

fn family_of(cfg: &RunConfig) -> crate::estimates::DecayFamily {
    if cfg.experiment == Experiment::DecayHeat {
        crate::estimates::DecayFamily::Heat
    } else {
        crate::estimates::DecayFamily::Ml(cfg.decay.family)
    }
}

fn yamazaki_exp(cfg: &RunConfig, dir: &Path) -> Result<Vec<RatioReport>> {
    let y = &cfg.yamazaki;
    let m = &cfg.model;
    let g = cfg.grid.grid(m.dim)?;
    let cut = DyadicCutoff::new(g)?;
    let spec = EnsembleSpec { members: 1, seed: cfg.seed, k_lo: y.k_lo, k_hi: y.k_hi, slope: y.slope };
    let f = band_limited_ensemble(g, &spec)?.remove(0);
    let yp = YamazakiParams { p: y.p, s: y.s, s0: y.s - m.theta + y.zeta, zeta: y.zeta, theta: m.theta, alpha: m.alpha };
    let reps = y
        .t_finals
        .par_iter()
        .map(|&t| yamazaki_integral_check(&f, yp, t, y.points_per_decade, &cut))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (t, r) in y.t_finals.iter().zip(&reps) {
        let mut rep = RatioReport::new("time_integrated_ratio", r.ratio, f64::NAN);
        rep.rel_dev = f64::NAN;
        rep.verdict = verdict(r.ratio.is_finite() && r.ratio > 0.0);
        rep.grid = grid_tag(&g);
        rep.params_json = json!({ "t_final": t, "head": r.head, "tail": r.tail, "tail_exponent": r.tail_exponent }).to_string();
        out.push(rep);
    }
    let n = reps.len();
    let (last, prev) = (reps[n - 1].ratio, reps[n - 2].ratio);
    let mut conv = RatioReport::new("time_integrated_convergence", last, prev).judge(y.tol);
    conv.grid = grid_tag(&g);
    conv.seed = Some(cfg.seed);
    out.push(conv);
    let exp = reps[n - 1].tail_exponent;
    let mut tail = RatioReport::new("time_integrated_tail_exponent", exp, -1.0);
    tail.verdict = verdict(exp < -1.0);
    tail.grid = grid_tag(&g);
    out.push(tail);
    write_svg_loglog(&dir.join("integrand.svg"), "time-integrated smoothing integrand", &reps[n - 1].samples, exp, None)?;
    Ok(out)
}

fn ensemble_pairs(cfg: &RunConfig, g: Grid) -> Result<Vec<(SpectralField, SpectralField)>> {
    let e = &cfg.ensemble;
    let spec = |seed| EnsembleSpec { members: e.members, seed, k_lo: e.k_lo, k_hi: e.k_hi, slope: e.slope };
    let etas = band_limited_ensemble(g, &spec(cfg.seed))?;
    let vs = band_limited_ensemble(g, &spec(cfg.seed.wrapping_add(1)))?;
    Ok(etas.into_iter().zip(vs).collect())
}

fn refined(g: Grid) -> Result<Grid> {
    Grid::new(g.dim, 2 * g.n, g.half_width)
}

fn product_exp(cfg: &RunConfig) -> Result<Vec<RatioReport>> {
    let m = &cfg.model;
    let g = cfg.grid.grid(m.dim)?;
    let pp = ProductParams { p: cfg.besov.p, q: cfg.besov.q, theta: m.theta, theta1: m.theta1, rho1: cfg.study.rho1, rho2: cfg.study.rho2 };
    let mut ens = vec![(grid_tag(&g), ensemble_pairs(cfg, g)?)];
    if cfg.study.refine {
        let gf = refined(g)?;
        ens.push((grid_tag(&gf), ensemble_pairs(cfg, gf)?));
    }
    let mut study = product_ratio_study(&ens, pp)?;
    study.seed = Some(cfg.seed);
    let mut rep = study.report(cfg.study.tol_refine, &grid_tag(&g));
    rep.check_id = "product_ratio".into();
    if !study.max().is_finite() {
        rep.verdict = Verdict::Fail;
    }
    Ok(vec![rep])
}

fn study_exp(cfg: &RunConfig) -> Result<Vec<RatioReport>> {
    let m = &cfg.model;
    let (p, q) = (cfg.besov.p, cfg.besov.q);
    let g = cfg.grid.grid(m.dim)?;
    let mesh = cfg.mesh.mesh()?;
    let bilinear = cfg.experiment == Experiment::Bilinear;
    let run = |g: Grid, ts: &[f64]| -> Result<crate::estimates::ConstantStudy> {
        let pairs = ensemble_pairs(cfg, g)?;
        let mut s = if bilinear {
            bilinear_constant_study(&pairs, m, &mesh, p, q, ts)?
        } else {
            let etas: Vec<SpectralField> = pairs.into_iter().map(|x| x.0).collect();
            linear_operator_study(&etas, m, &mesh, p, q, ts)?
        };
        s.seed = Some(cfg.seed);
        Ok(s)
    };
    let coarse = run(g, &cfg.study.t_values)?;
    let mut out = vec![coarse.report(cfg.study.tol_time, &grid_tag(&g))];
    if cfg.study.refine {
        let gf = refined(g)?;
        let t = *cfg.study.t_values.last().unwrap_or(&mesh.t_final);
        let fine = run(gf, &[t])?;
        let base = coarse.variants.last().map(|v| v.1).unwrap_or(f64::NAN);
        let mut rep = RatioReport::new(format!("{}_refinement", coarse.check_id), fine.max(), base).judge(cfg.study.tol_refine);
        rep.ensemble = fine.ensemble;
        rep.seed = Some(cfg.seed);
        rep.grid = format!("{} -> {}", grid_tag(&g), grid_tag(&gf));
        rep.params_json = json!({ "T": t }).to_string();
        out.push(rep);
    }
    Ok(out)
}

/// Initial data with unit max coefficient, before scaling.
fn base_data(cfg: &RunConfig, g: Grid) -> Result<(SpectralField, SpectralField)> {
    Ok(match cfg.solve.data {
        DataKind::Zero => (SpectralField::zeros(g), SpectralField::zeros(g)),
        DataKind::Ensemble => {
            let e = &cfg.ensemble;
            let spec = |seed| EnsembleSpec { members: 1, seed, k_lo: e.k_lo, k_hi: e.k_hi, slope: e.slope };
            (band_limited_ensemble(g, &spec(cfg.seed))?.remove(0), band_limited_ensemble(g, &spec(cfg.seed.wrapping_add(1)))?.remove(0))
        }
        DataKind::Gaussian => {
            let bump = |w: f64| {
                let f = SpectralField::from_fn(g, |x| (-x.iter().map(|c| c * c).sum::<f64>() / w).exp()).dealiased();
                let m = f.max_abs_coeff();
                f.scale(1.0 / m)
            };
            (bump(2.0), bump(1.0))
        }
    })
}

struct Prepared {
    eta0: SpectralField,
    v0: SpectralField,
    mesh: TimeMesh,
    config: IterationConfig,
    eps: Option<(f64, f64)>,
    params: serde_json::Value,
}

/// Scales the data: absolute amplitude, or a fraction of the admissible one
/// measured with empirical constants on the ensemble.
fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let m = &cfg.model;
    let s = &cfg.solve;
    let g = cfg.grid.grid(m.dim)?;
    let mesh = cfg.mesh.mesh()?;
    let config = IterationConfig::new(m, cfg.besov.p, cfg.besov.q, s.max_iters, s.tol_rel)?;
    let (e, v) = base_data(cfg, g)?;
    if let Some(a) = s.amplitude {
        return Ok(Prepared { eta0: e.scale(a), v0: v.scale(a), mesh, config, eps: None, params: json!({ "amplitude": a }) });
    }
    if cfg.solve.data == DataKind::Zero {
        return Ok(Prepared { eta0: e, v0: v, mesh, config, eps: None, params: json!({ "amplitude": 0.0 }) });
    }
    let consts = empirical_constants(&ensemble_pairs(cfg, g)?, m, &mesh, cfg.besov.p, cfg.besov.q)?;
    let cut = DyadicCutoff::new(g)?;
    let probe = smallness_check(&e, &v, &config, consts, s.eps_fraction, &cut)?;
    let a = s.amplitude_fraction * probe.amplitude_threshold;
    let (eta0, v0) = (e.scale(a), v.scale(a));
    let small = smallness_check(&eta0, &v0, &config, consts, s.eps_fraction, &cut)?;
    Ok(Prepared {
        eta0,
        v0,
        mesh,
        config,
        eps: Some((small.eps, consts.c)),
        params: json!({ "amplitude": a, "admitted": small.admitted, "constants": consts, "eps": small.eps }),
    })
}

fn solve_exp(cfg: &RunConfig, dir: &Path) -> Result<Vec<RatioReport>> {
    let pr = prepare(cfg)?;
    let g = pr.eta0.grid;
    let solver = PicardSolver::new(g, &cfg.model, &pr.mesh, pr.config)?;
    let sol = solver.solve(&pr.eta0, &pr.v0, FirstIterate::Linear)?;
    std::fs::write(dir.join("trace.csv"), sol.trace.to_csv())?;
    let last = pr.mesh.n_steps();
    let t = pr.mesh.t_final;
    save_snapshot(&dir.join("eta0.fkf"), &pr.eta0, "eta", 0.0)?;
    save_snapshot(&dir.join("v0.fkf"), &pr.v0, "v", 0.0)?;
    save_snapshot(&dir.join("eta_final.fkf"), &sol.history.eta[last], "eta", t)?;
    save_snapshot(&dir.join("v_final.fkf"), &sol.history.v[last], "v", t)?;
    let ratios: Vec<f64> = sol.trace.rows.iter().map(|r| r.ratio).filter(|r| r.is_finite()).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let mut rep = RatioReport::new("picard_contraction", max_ratio, 1.0);
    rep.rel_dev = max_ratio;
    rep.verdict = verdict(sol.trace.converged && max_ratio < 1.0);
    rep.grid = grid_tag(&g);
    rep.seed = Some(cfg.seed);
    rep.params_json = json!({ "data": pr.params, "iterations": sol.trace.rows.len(), "converged": sol.trace.converged }).to_string();
    let mut out = vec![rep];
    if let Some((eps, c)) = pr.eps {
        let peak = sol.trace.rows.iter().map(|r| (r.norm_eta_x * 2.0 * c / eps).max(r.norm_v_y / eps)).fold(0.0, f64::max);
        let mut b = RatioReport::new("iterate_bounds", peak, 1.0);
        b.rel_dev = peak;
        b.verdict = verdict(iterate_bounds_hold(&sol.trace, eps, c));
        b.grid = grid_tag(&g);
        b.seed = Some(cfg.seed);
        out.push(b);
    }
    Ok(out)
}

fn uniqueness_exp(cfg: &RunConfig) -> Result<Vec<RatioReport>> {
    let pr = prepare(cfg)?;
    let u = uniqueness_probe(&pr.eta0, &pr.v0, &cfg.model, &pr.mesh, pr.config, cfg.solve.starts)?;
    let tol = 10.0 * pr.config.tol_rel;
    let mut rep = RatioReport::new("uniqueness_distance", u.max_pairwise_distance, 0.0);
    rep.verdict = verdict(u.converged_starts == cfg.solve.starts && u.max_pairwise_distance <= tol);
    rep.ensemble = cfg.solve.starts;
    rep.grid = grid_tag(&pr.eta0.grid);
    rep.seed = Some(cfg.seed);
    rep.params_json = json!({ "data": pr.params, "converged_starts": u.converged_starts, "excluded": u.excluded, "tol": tol }).to_string();
    Ok(vec![rep])
}

fn selfsim_exp(cfg: &RunConfig, dir: &Path) -> Result<Vec<RatioReport>> {
    let m = &cfg.model;
    let s = &cfg.selfsim;
    let (p, q) = (cfg.besov.p, cfg.besov.q);
    let mesh = selfsim_mesh(m, s.t_final, s.steps)?;
    let config = IterationConfig::new(m, p, q, s.max_iters, s.tol_rel)?;
    let (de, dv) = (2.0 - 2.0 * m.theta - m.theta1, 2.0 - m.theta - m.theta1);
    let base = cfg.grid.grid(m.dim)?;
    let mut csv = String::from("n,half_width,err_eta,err_v,linear_defect,iterations\n");
    let mut errs = Vec::new();
    let mut lin: f64 = 0.0;
    for level in 0..s.levels {
        let g = Grid::new(m.dim, base.n << level, base.half_width * (1u64 << level) as f64)?;
        let cut = DyadicCutoff::new(g)?;
        let xi_out = s.outer_fraction * g.dealias_cutoff() as f64 * g.dxi();
        let e0 = homogeneous_data(g, de, s.k_in, xi_out, s.amplitude);
        let v0 = homogeneous_data(g, dv, s.k_in, xi_out, s.amplitude);
        let sol = PicardSolver::new(g, m, &mesh, config)?.solve(&e0, &v0, FirstIterate::Linear)?;
        if !sol.trace.converged {
            return Err(Error::Precondition(format!("iteration did not converge on grid n = {}", g.n)));
        }
        let r = selfsim_check(&sol.history, &mesh, m, 2.0, p, q, &cut)?;
        // power law up to the dealiasing edge: the linear part scales exactly
        let pe = homogeneous_data(g, de, 0.5, f64::MAX, s.amplitude);
        let pv = homogeneous_data(g, dv, 0.5, f64::MAX, s.amplitude);
        let (le, lv) = linear_part(&pe, &pv, m, &mesh)?;
        let lr = selfsim_check(&History::from_series(le, lv)?, &mesh, m, 2.0, p, q, &cut)?;
        let defect = lr.err_eta.max(lr.err_v);
        lin = lin.max(defect);
        csv.push_str(&format!("{},{},{:e},{:e},{:e},{}\n", g.n, g.half_width, r.err_eta, r.err_v, defect, sol.trace.rows.len()));
        errs.push((g, r.err_eta));
    }
    std::fs::write(dir.join("selfsim.csv"), csv)?;
    let (first, last) = (errs[0].1, errs[errs.len() - 1].1);
    let mut rep = RatioReport::new("selfsim_refinement", last, first);
    rep.rel_dev = last / first;
    rep.verdict = verdict(errs.windows(2).all(|w| w[1].1 < w[0].1));
    rep.grid = format!("{} -> {}", grid_tag(&errs[0].0), grid_tag(&errs[errs.len() - 1].0));
    rep.params_json = json!({ "errors": errs.iter().map(|e| e.1).collect::<Vec<_>>(), "block": s }).to_string();
    let mut lrep = RatioReport::new("selfsim_linear_identity", lin, 0.0).judge(1e-10);
    lrep.grid = rep.grid.clone();
    Ok(vec![rep, lrep])
}
