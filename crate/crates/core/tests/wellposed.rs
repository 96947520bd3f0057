use fracks::besov::DyadicCutoff;
use fracks::duhamel::{duhamel_b, duhamel_t, TimeMesh};
use fracks::model::ModelParams;
use fracks::spectral::{Grid, SpectralField};
use fracks::wellposed::{
    homogeneous_data, iterate_bounds_hold, linear_part, picard_solve, relative_sup_distance, selfsim_check, selfsim_mesh, smallness_check,
    uniqueness_probe, EmpiricalConstants, IterationConfig,
};
use proptest::prelude::*;
use std::f64::consts::PI;

fn setup() -> (Grid, ModelParams, TimeMesh, IterationConfig) {
    let g = Grid::new(1, 64, 2.0 * PI).unwrap();
    let p = ModelParams { alpha: 0.7, theta: 1.3, theta1: 0.1, gamma: 0.2, ..ModelParams::default() };
    let mesh = TimeMesh::graded(2.0, 16, 1.5).unwrap();
    let cfg = IterationConfig::new(&p, 1.5, 1.5, 40, 1e-11).unwrap();
    (g, p, mesh, cfg)
}

fn bump(g: Grid, amp: f64, shift: f64) -> SpectralField {
    SpectralField::from_fn(g, |x| amp * (-(x[0] - shift).powi(2)).exp()).dealiased()
}

fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn converged_solution_is_a_fixed_point() {
    let (g, p, mesh, cfg) = setup();
    let (eta0, v0) = (bump(g, 0.05, 0.0), bump(g, 0.05, 1.0));
    let sol = picard_solve(&eta0, &v0, &p, &mesh, cfg).unwrap();
    assert!(sol.trace.converged);
    let (le, lv) = linear_part(&eta0, &v0, &p, &mesh).unwrap();
    let n = mesh.n_steps();
    let eta = le[n].add(&duhamel_b(&sol.history, &mesh, &p, n).unwrap()).unwrap();
    let v = lv[n].add(&duhamel_t(&sol.history, &mesh, &p, n).unwrap()).unwrap();
    assert!(max_diff(&eta, &sol.history.eta[n]) < 1e-9 * eta0.max_abs_coeff());
    assert!(max_diff(&v, &sol.history.v[n]) < 1e-9 * v0.max_abs_coeff());
}

#[test]
fn constant_eta_stays_constant() {
    let (g, p, mesh, cfg) = setup();
    let eta0 = SpectralField::from_fn(g, |_| 0.3);
    let sol = picard_solve(&eta0, &SpectralField::zeros(g), &p, &mesh, cfg).unwrap();
    assert!(sol.trace.converged);
    for (e, v) in sol.history.eta.iter().zip(&sol.history.v) {
        assert!(max_diff(e, &eta0) < 1e-15);
        assert!(v.coeffs[1..].iter().all(|c| c.norm() < 1e-15));
    }
    // the zero mode of v obeys the scalar relaxation with source kappa eta
    assert!(sol.history.v.last().unwrap().coeffs[0].re > 0.0);
}

#[test]
fn starts_agree_on_small_data() {
    let (g, p, mesh, cfg) = setup();
    let r = uniqueness_probe(&bump(g, 0.05, 0.0), &bump(g, 0.05, 0.5), &p, &mesh, cfg, 3).unwrap();
    assert_eq!(r.converged_starts, 3, "{:?}", r.excluded);
    assert!(r.max_pairwise_distance < 1e-9, "{:e}", r.max_pairwise_distance);
}

#[test]
fn admission_flips_at_threshold() {
    let (g, _, _, cfg) = setup();
    let cut = DyadicCutoff::new(g).unwrap();
    let c = EmpiricalConstants { c1: 1.2, c2: 1.1, c: 0.8, k: 2.5 };
    let d = bump(g, 1.0, 0.0);
    let rep = smallness_check(&d, &d, &cfg, c, 0.9, &cut).unwrap();
    let a = rep.amplitude_threshold;
    assert!(smallness_check(&d.scale(0.99 * a), &d.scale(0.99 * a), &cfg, c, 0.9, &cut).unwrap().admitted);
    assert!(!smallness_check(&d.scale(1.01 * a), &d.scale(1.01 * a), &cfg, c, 0.9, &cut).unwrap().admitted);
    assert!((rep.eps - 0.9 / 5.0).abs() < 1e-15);
    assert!(smallness_check(&d, &d, &cfg, EmpiricalConstants { k: 0.0, ..c }, 0.9, &cut).is_err());
    assert!(smallness_check(&d, &d, &cfg, c, 1.0, &cut).is_err());
}

#[test]
fn trace_bounds_and_csv() {
    let (g, p, mesh, cfg) = setup();
    let sol = picard_solve(&bump(g, 0.01, 0.0), &bump(g, 0.01, 0.0), &p, &mesh, cfg).unwrap();
    let top = sol.trace.rows.iter().map(|r| r.norm_eta_x.max(r.norm_v_y)).fold(0.0, f64::max);
    assert!(iterate_bounds_hold(&sol.trace, 2.0 * top, 0.5));
    assert!(!iterate_bounds_hold(&sol.trace, top, 1.0));
    let csv = sol.trace.to_csv();
    assert!(csv.starts_with("iter,norm_eta_X,norm_v_Y,diff_eta,diff_v,ratio\n"));
    assert_eq!(csv.lines().count(), sol.trace.rows.len() + 1);
}

#[test]
fn scaling_check_rejections() {
    let (g, p, mesh, _) = setup();
    let cut = DyadicCutoff::new(g).unwrap();
    let h = picard_solve(&bump(g, 0.01, 0.0), &bump(g, 0.01, 0.0), &p, &mesh, IterationConfig::new(&p, 1.5, 1.5, 5, 1e-8).unwrap())
        .unwrap()
        .history;
    assert!(selfsim_check(&h, &mesh, &p, 2.0, 1.5, 1.5, &cut).is_err());
    let p0 = ModelParams { gamma: 0.0, ..p };
    assert_eq!(selfsim_check(&h, &mesh, &p0, 1.0, 1.5, 1.5, &cut).unwrap().err_eta, 0.0);
    assert!(selfsim_check(&h, &mesh, &p0, 3.0, 1.5, 1.5, &cut).is_err());
    assert!(selfsim_mesh(&ModelParams { alpha: 0.9, theta: 0.5, ..p0 }, 1.0, 8).is_err());
}

#[test]
fn homogeneous_data_has_power_law_coefficients() {
    let g = Grid::new(1, 256, 8.0 * PI).unwrap();
    let f = homogeneous_data(g, 0.4, 2.0, f64::MAX, 1.0);
    // between 2 k_in and the dealias band the coefficients are |xi|^{-(1 + 0.4)}
    for k in [5usize, 11, 40, 80] {
        let xi = k as f64 * g.dxi();
        assert!((f.coeffs[k].re / xi.powf(-1.4) - 1.0).abs() < 1e-13, "k = {k}");
    }
    assert_eq!(f.coeffs[0].re, 0.0);
    assert_eq!(f.coeffs[1].re, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solutions_of_real_data_are_real(amp in 0.001f64..0.05, shift in -2.0f64..2.0) {
        let (g, p, mesh, cfg) = setup();
        let sol = picard_solve(&bump(g, amp, shift), &bump(g, amp, -shift), &p, &mesh, cfg).unwrap();
        prop_assert!(sol.trace.converged);
        for f in sol.history.eta.iter().chain(&sol.history.v) {
            prop_assert!(f.conjugate_symmetry_defect() < 1e-13 * amp);
        }
    }

    #[test]
    fn sup_distance_is_zero_on_itself_and_scales(a in 0.1f64..3.0) {
        let (g, _, _, _) = setup();
        let s = vec![bump(g, 1.0, 0.0), bump(g, 0.5, 1.0)];
        prop_assert_eq!(relative_sup_distance(&s, &s), 0.0);
        let scaled: Vec<SpectralField> = s.iter().map(|f| f.scale(a)).collect();
        prop_assert!((relative_sup_distance(&s, &scaled) - (a - 1.0).abs()).abs() < 1e-12);
    }
}
