//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use fracks::besov::{bernstein_check, bony_split, DyadicCutoff, ProductParams};
use fracks::duhamel::{duhamel_t, yamazaki_integral_check, History, TimeMesh, YamazakiParams};
use fracks::estimates::*;
use fracks::model::ModelParams;
use fracks::quad::QuadSpec;
use fracks::specfun::{gamma_fn, mainardi_laplace, mainardi_moment, ml, ml_eval, MlParams};
use fracks::spectral::{heat_semigroup, ml_operator, pointwise_product, Grid, MlFamily, SpectralField};
use fracks::wellposed::{
    homogeneous_data, iterate_bounds_hold, linear_part, selfsim_check, selfsim_mesh, smallness_check, uniqueness_probe,
    FirstIterate, IterationConfig, PicardSolver,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn table(name: &str) -> Vec<Vec<f64>> {
    let path = format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect()
}

fn quad() -> QuadSpec {
    QuadSpec::new(1e-13, 1e-12)
}

fn special_functions() -> Outcome {
    let rows = table("ml_oracle.tsv");
    let mut worst: f64 = 0.0;
    for r in &rows {
        let v = ml_eval(MlParams::new(r[0], r[1]).map_err(|e| e.to_string())?, r[2]).map_err(|e| e.to_string())?.value;
        worst = worst.max((v - r[3]).abs());
    }
    let mut worst_m: f64 = 0.0;
    let mut combos = 0;
    for alpha in [0.4, 0.6] {
        for r in [0.0, 0.5, 1.0, 2.0] {
            let m = mainardi_moment(alpha, r, quad()).map_err(|e| e.to_string())?;
            let want = gamma_fn(r + 1.0).unwrap() / gamma_fn(alpha * r + 1.0).unwrap();
            worst_m = worst_m.max((m - want).abs());
            combos += 1;
        }
    }
    ensure(
        rows.len() >= 200 && worst <= 1e-10 && combos == 8 && worst_m <= 1e-8,
        format!("{} oracle points, max err {worst:.2e}; {combos} moment checks, max err {worst_m:.2e}", rows.len()),
    )
}

fn operator_consistency() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [0.4, 0.7] {
        for lambda in [0.1, 1.0, 10.0] {
            let e = mainardi_laplace(alpha, lambda, false, quad()).map_err(|e| e.to_string())?;
            let ea = mainardi_laplace(alpha, lambda, true, quad()).map_err(|e| e.to_string())?;
            worst = worst.max((e - ml(alpha, 1.0, lambda).unwrap()).abs());
            worst = worst.max((ea - ml(alpha, alpha, lambda).unwrap()).abs());
        }
    }
    ensure(worst <= 1e-8, format!("max deviation {worst:.2e} over 12 evaluations"))
}

fn decay_rates() -> Outcome {
    let g = Grid::new(1, 1024, 64.0 * PI).unwrap();
    let cut = DyadicCutoff::new(g).unwrap();
    let base = DecaySpec { zeta: 0.0, theta: 1.5, alpha: 0.5, s1: 0.0, s2: 0.5, p1: 2.0, p2: 2.0, t_min: 1e-6, t_max: 1e8, points_per_decade: 12 };
    let cases: Vec<(DecaySpec, DecayFamily)> = vec![
        (base, DecayFamily::Heat),
        (DecaySpec { zeta: 1.5, s2: 0.0, ..base }, DecayFamily::Heat),
        (DecaySpec { theta: 2.0, p1: 1.5, p2: 4.0, ..base }, DecayFamily::Heat),
        (base, DecayFamily::Ml(MlFamily::EAlpha)),
        (DecaySpec { alpha: 0.7, theta: 1.2, s2: 0.2, p1: 1.5, p2: 3.0, ..base }, DecayFamily::Ml(MlFamily::EAlpha)),
        (DecaySpec { zeta: 1.5, s2: 0.0, ..base }, DecayFamily::Ml(MlFamily::EAlphaAlpha)),
        (DecaySpec { alpha: 0.8, zeta: 1.0, s2: 1.0, ..base }, DecayFamily::Ml(MlFamily::EAlphaAlpha)),
    ];
    let mut worst: f64 = 0.0;
    let mut min_decades = f64::INFINITY;
    let mut failed = Vec::new();
    for (spec, fam) in &cases {
        let f = self_similar_data(&cut, spec.s1, spec.p1);
        let r = match fam {
            DecayFamily::Heat => decay_fit_heat(&f, spec),
            DecayFamily::Ml(m) => decay_fit_ml(&f, spec, *m),
        }
        .map_err(|e| e.to_string())?;
        let (lo, hi) = r.window.unwrap_or((1.0, 1.0));
        min_decades = min_decades.min((hi / lo).log10());
        worst = worst.max(r.rel_dev);
        if r.rel_dev > 0.05 || (hi / lo).log10() < 1.5 {
            failed.push(format!("{}: slope {:.4} vs {:.4}", r.check_id, r.measured, r.predicted));
        }
    }
    ensure(
        failed.is_empty(),
        format!("{} configurations, worst rel dev {worst:.4}, narrowest window {min_decades:.2} decades{}", cases.len(), failed.iter().map(|f| format!("; {f}")).collect::<String>()),
    )
}

fn classical_limit() -> Outcome {
    let g = Grid::new(1, 256, 8.0 * PI).unwrap();
    let (s2, t) = (1.0, 1.0);
    let f = SpectralField::from_fn(g, |x| (-x[0] * x[0] / (2.0 * s2)).exp());
    let w = s2 + 2.0 * t;
    let exact: Vec<f64> = (0..g.len()).map(|i| (s2 / w).sqrt() * (-g.point(i)[0].powi(2) / (2.0 * w)).exp()).collect();
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let p1 = ModelParams { alpha: 1.0, theta: 2.0, gamma: 0.0, ..Default::default() };
    let u1 = ml_operator(&f, t, &p1, MlFamily::EAlpha, false).map_err(|e| e.to_string())?.to_values();
    let heat = heat_semigroup(&f, t, 2.0).to_values();
    let p2 = ModelParams { alpha: 0.999, ..p1 };
    let u2 = ml_operator(&f, t, &p2, MlFamily::EAlpha, false).map_err(|e| e.to_string())?.to_values();
    let (e1, eh, e2) = (sup(&u1, &exact), sup(&heat, &exact), sup(&u2, &exact));
    ensure(e1 <= 1e-8 && eh <= 1e-8 && e2 <= 1e-2, format!("alpha=1 err {e1:.2e}, semigroup err {eh:.2e}, alpha=0.999 deviation {e2:.2e}"))
}

fn random_band(g: Grid, rng: &mut ChaCha8Rng) -> SpectralField {
    let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    SpectralField::from_values(g, &v).unwrap().dealiased()
}

fn littlewood_paley() -> Outcome {
    let g = Grid::new(1, 256, PI).unwrap();
    let cut = DyadicCutoff::new(g).unwrap();
    let pu = cut.partition_defect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bony: f64 = 0.0;
    for _ in 0..20 {
        let f = random_band(g, &mut rng);
        let h = random_band(g, &mut rng);
        let s = bony_split(&f, &h, &cut).map_err(|e| e.to_string())?;
        let rec = s.t_fg.add(&s.t_gf).unwrap().add(&s.remainder).unwrap();
        let prod = pointwise_product(&f, &h, true).unwrap();
        bony = bony.max(rec.sub(&prod).unwrap().max_abs_coeff() / prod.max_abs_coeff());
    }
    // dilates of one profile supported inside the annulus of each shell
    let gb = Grid::new(1, 4096, PI).unwrap();
    let cb = DyadicCutoff::new(gb).unwrap();
    let bump = |u: f64| if u > 0.85 && u < 2.5 { (-1.0 / ((u - 0.85) * (2.5 - u))).exp() } else { 0.0 };
    let mut ratios = Vec::new();
    for j in 3..=9 {
        let scale = 2f64.powi(j);
        let coeffs = (0..gb.len()).map(|i| Complex64::new(bump(gb.xi_norm(i) / scale), 0.0)).collect();
        let f = SpectralField::from_coeffs(gb, coeffs).unwrap();
        let (_, r) = bernstein_check(&f, j, f64::INFINITY, 1.0, &cb).map_err(|e| e.to_string())?;
        ratios.push(r);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let var = (hi - lo) / lo;
    ensure(
        pu <= 1e-12 && bony <= 1e-8 && var <= 0.05,
        format!("partition defect {pu:.2e}, Bony defect {bony:.2e} over 20 pairs, Bernstein variation {:.2}% over {} shells", 100.0 * var, ratios.len()),
    )
}

fn relaxation_error(steps: usize) -> f64 {
    let g = Grid::new(1, 8, PI).unwrap();
    let (alpha, gamma, kappa, mu, t_final) = (0.6, 0.8, 1.7, 2.0, 1.5);
    let p = ModelParams { alpha, gamma, kappa, ..Default::default() };
    let mesh = TimeMesh::graded(t_final, steps, 2.0 / alpha).unwrap();
    let mut h = History::new(g);
    for &t in mesh.nodes() {
        let c = ml(alpha, 1.0, mu * t.powf(alpha)).unwrap();
        h.push(SpectralField::from_fn(g, |_| c), SpectralField::zeros(g)).unwrap();
    }
    let got = duhamel_t(&h, &mesh, &p, steps).unwrap().coeffs[0].re;
    let ta = t_final.powf(alpha);
    let want = kappa * (ml(alpha, 1.0, mu * ta).unwrap() - ml(alpha, 1.0, gamma * ta).unwrap()) / (gamma - mu);
    (got - want).abs()
}

fn duhamel_quadrature() -> Outcome {
    // constant source: closed form (kappa c / gamma)(1 - E_a(-gamma t^a))
    let g = Grid::new(1, 8, PI).unwrap();
    let (alpha, gamma, kappa, c, t_final) = (0.6, 0.8, 1.7, 0.9, 1.5);
    let p = ModelParams { alpha, gamma, kappa, ..Default::default() };
    let mesh = TimeMesh::graded(t_final, 512, 2.0 / alpha).unwrap();
    let mut h = History::new(g);
    for _ in mesh.nodes() {
        h.push(SpectralField::from_fn(g, |_| c), SpectralField::zeros(g)).unwrap();
    }
    let got = duhamel_t(&h, &mesh, &p, 512).unwrap().coeffs[0].re;
    let want = kappa * c / gamma * (1.0 - ml(alpha, 1.0, gamma * t_final.powf(alpha)).unwrap());
    let err_const = (got - want).abs();
    // relaxing source E_a(-mu t^a): order over three doublings
    let errs: Vec<f64> = [64, 128, 256, 512].iter().map(|&n| relaxation_error(n)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(
        err_const <= 1e-6 && min_order >= 1.0,
        format!(
            "constant source err {err_const:.2e}; relaxing source errs {} orders {}",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" "),
            orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn params() -> ModelParams {
    ModelParams { alpha: 0.8, theta: 1.2, ..Default::default() }
}

fn pairs(n: usize, members: usize) -> Vec<(SpectralField, SpectralField)> {
    let g = Grid::new(1, n, PI).unwrap();
    let spec = |seed| EnsembleSpec { members, seed, k_lo: 8.0, k_hi: 30.0, slope: 1.0 };
    let e = band_limited_ensemble(g, &spec(7)).unwrap();
    let v = band_limited_ensemble(g, &spec(8)).unwrap();
    e.into_iter().zip(v).collect()
}

fn bilinear_linear() -> Outcome {
    let p = params();
    let mesh = TimeMesh::graded(1.0, 32, 2.0).unwrap();
    let ts = [1.0, 2.0, 4.0, 8.0];
    let coarse = pairs(256, 50);
    let fine = pairs(512, 50);
    let err = |e: fracks::Error| e.to_string();
    let k0 = bilinear_constant_study(&coarse, &p, &mesh, 1.5, 1.5, &ts).map_err(err)?;
    let k1 = bilinear_constant_study(&fine, &p, &mesh, 1.5, 1.5, &ts).map_err(err)?;
    let etas: Vec<SpectralField> = coarse.iter().map(|q| q.0.clone()).collect();
    let c0 = linear_operator_study(&etas, &p, &mesh, 1.5, 1.5, &ts).map_err(err)?;
    let refine = (k1.max() - k0.max()).abs() / k0.max();
    let pp = ProductParams { p: 1.5, q: 1.5, theta: 1.2, theta1: 0.0, rho1: 0.0, rho2: 0.0 };
    let prod = product_ratio_study(&[("n=256".into(), coarse.clone()), ("n=512".into(), fine.clone())], pp).map_err(err)?;
    ensure(
        k0.variation() <= 0.15 && refine <= 0.10 && prod.max().is_finite() && prod.variation() <= 0.10 && c0.variation() <= 0.15,
        format!(
            "K in [{:.4}, {:.4}] (var {:.2}%), refinement {:.2}%; C var {:.2}%; product ratio {:.4} -> {:.4} (var {:.2}%)",
            k0.min(),
            k0.max(),
            100.0 * k0.variation(),
            100.0 * refine,
            100.0 * c0.variation(),
            prod.variants[0].1,
            prod.variants[1].1,
            100.0 * prod.variation()
        ),
    )
}

fn well_posedness() -> Outcome {
    let err = |e: fracks::Error| e.to_string();
    let p = params();
    let mesh = TimeMesh::uniform(2.0, 64).unwrap();
    let cfg = IterationConfig::new(&p, 1.5, 1.5, 60, 1e-10).map_err(err)?;
    let ens = pairs(256, 50);
    let consts = empirical_constants(&ens, &p, &mesh, 1.5, 1.5).map_err(err)?;
    let (e0, v0) = ens[0].clone();
    let cut = DyadicCutoff::new(e0.grid).unwrap();
    let probe = smallness_check(&e0, &v0, &cfg, consts, 0.9, &cut).map_err(err)?;
    let amp = 0.5 * probe.amplitude_threshold;
    let (e0, v0) = (e0.scale(amp), v0.scale(amp));
    let small = smallness_check(&e0, &v0, &cfg, consts, 0.9, &cut).map_err(err)?;
    let solver = PicardSolver::new(e0.grid, &p, &mesh, cfg).map_err(err)?;
    let sol = solver.solve(&e0, &v0, FirstIterate::Linear).map_err(err)?;
    let ratios: Vec<f64> = sol.trace.rows.iter().skip(1).map(|r| r.ratio).filter(|r| r.is_finite()).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let bounds = iterate_bounds_hold(&sol.trace, small.eps, consts.c);
    let uq = uniqueness_probe(&e0, &v0, &p, &mesh, cfg, 3).map_err(err)?;
    ensure(
        small.admitted && sol.trace.converged && !ratios.is_empty() && max_ratio < 1.0 && bounds && uq.converged_starts == 3
            && uq.max_pairwise_distance <= 10.0 * cfg.tol_rel,
        format!(
            "K={:.4} C={:.4}; {} iterations, max ratio {max_ratio:.2e}, bounds {}, uniqueness distance {:.2e} over {} starts",
            consts.k,
            consts.c,
            sol.trace.rows.len(),
            if bounds { "hold" } else { "violated" },
            uq.max_pairwise_distance,
            uq.converged_starts
        ),
    )
}

fn self_similarity() -> Outcome {
    let err = |e: fracks::Error| e.to_string();
    let p = params();
    let mesh = selfsim_mesh(&p, 2.0, 32).map_err(err)?;
    let cfg = IterationConfig::new(&p, 1.5, 1.5, 60, 1e-11).map_err(err)?;
    let mut errs = Vec::new();
    let mut lin: f64 = 0.0;
    for (n, l) in [(64, 4.0 * PI), (128, 8.0 * PI), (256, 16.0 * PI)] {
        let g = Grid::new(1, n, l).unwrap();
        let cut = DyadicCutoff::new(g).unwrap();
        let xi_out = 0.6 * (n / 3) as f64 * g.dxi();
        let e0 = homogeneous_data(g, 2.0 - 2.0 * p.theta, 2.0, xi_out, 1e-2);
        let v0 = homogeneous_data(g, 2.0 - p.theta, 2.0, xi_out, 1e-2);
        let sol = PicardSolver::new(g, &p, &mesh, cfg).map_err(err)?.solve(&e0, &v0, FirstIterate::Linear).map_err(err)?;
        if !sol.trace.converged {
            return Err(format!("iteration did not converge at n={n}"));
        }
        errs.push(selfsim_check(&sol.history, &mesh, &p, 2.0, 1.5, 1.5, &cut).map_err(err)?.err_eta);
        // power law up to the dealiasing edge: the linear part scales exactly
        let pe = homogeneous_data(g, 2.0 - 2.0 * p.theta, 0.5, 1e9, 1e-2);
        let pv = homogeneous_data(g, 2.0 - p.theta, 0.5, 1e9, 1e-2);
        let (le, lv) = linear_part(&pe, &pv, &p, &mesh).map_err(err)?;
        let r = selfsim_check(&History::from_series(le, lv).map_err(err)?, &mesh, &p, 2.0, 1.5, 1.5, &cut).map_err(err)?;
        lin = lin.max(r.err_eta).max(r.err_v);
    }
    ensure(
        errs[1] < errs[0] && errs[2] < errs[1] && lin <= 1e-10,
        format!("discrepancy {:.4} -> {:.4} -> {:.4}; linear identity defect {lin:.2e}", errs[0], errs[1], errs[2]),
    )
}

fn time_integrated_smoothing() -> Outcome {
    let g = Grid::new(1, 256, PI).unwrap();
    let cut = DyadicCutoff::new(g).unwrap();
    let f = band_limited_ensemble(g, &EnsembleSpec { members: 1, seed: 3, k_lo: 1.0, k_hi: 60.0, slope: 0.5 }).unwrap().remove(0);
    let mut lines = Vec::new();
    let mut ok = true;
    for (alpha, zeta) in [(0.8, 1.0), (0.5, 0.5)] {
        let (theta, s) = (1.2, 0.3);
        let yp = YamazakiParams { p: 1.5, s, s0: s - theta + zeta, zeta, theta, alpha };
        let reps = [1e2, 1e3, 1e4]
            .iter()
            .map(|&t| yamazaki_integral_check(&f, yp, t, 12, &cut))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let r: Vec<f64> = reps.iter().map(|x| x.ratio).collect();
        let (d1, d2) = ((r[1] - r[0]).abs(), (r[2] - r[1]).abs());
        let exp = reps[2].tail_exponent;
        ok &= d2 < d1 && d2 <= 1e-3 * r[2] && exp < -1.0;
        lines.push(format!("alpha={alpha}: ratio {:.6} {:.6} {:.6}, tail exponent {exp:.3}", r[0], r[1], r[2]));
    }
    ensure(ok, lines.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("special functions", special_functions, 60),
        ("operator consistency", operator_consistency, 60),
        ("decay rates", decay_rates, 300),
        ("classical limit", classical_limit, 60),
        ("littlewood-paley", littlewood_paley, 120),
        ("duhamel quadrature", duhamel_quadrature, 120),
        ("bilinear and linear estimates", bilinear_linear, 900),
        ("well-posedness", well_posedness, 600),
        ("self-similarity", self_similarity, 600),
        ("time-integrated smoothing", time_integrated_smoothing, 300),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let dt = start.elapsed();
        let in_time = dt <= Duration::from_secs(*budget);
        let (pass, msg) = match out {
            Ok(m) => (in_time, m),
            Err(m) => (false, m),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {msg} [{:.1}s of {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            dt.as_secs_f64()
        );
    }
    println!("acceptance: {} of {} passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
