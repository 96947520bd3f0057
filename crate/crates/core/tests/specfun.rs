use fracks::quad::QuadSpec;
use fracks::specfun::{gamma_fn, mainardi_eval, mainardi_laplace, mainardi_moment, ml, ml_eval, ml_signed, MlParams};
use proptest::prelude::*;

fn table(name: &str) -> Vec<Vec<f64>> {
    let path = format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect()
}

#[test]
fn ml_matches_oracle_table() {
    let rows = table("ml_oracle.tsv");
    assert!(rows.len() >= 200);
    let mut worst = (0.0, vec![]);
    for r in &rows {
        let rep = ml_eval(MlParams::new(r[0], r[1]).unwrap(), r[2]).unwrap();
        let err = (rep.value - r[3]).abs();
        if err > worst.0 {
            worst = (err, r.clone());
        }
        // the reported error estimate must not undersell the true error
        assert!(err <= rep.est_abs_error.max(1e-15) * 10.0, "{r:?}: err {err:e} est {:e}", rep.est_abs_error);
    }
    assert!(worst.0 <= 1e-10, "worst {:e} at {:?}", worst.0, worst.1);
}

#[test]
fn gamma_matches_oracle_table() {
    for r in table("gamma_oracle.tsv") {
        let g = gamma_fn(r[0]).unwrap();
        assert!(((g - r[1]) / r[1]).abs() <= 1e-13, "x={} got {g:e} want {:e}", r[0], r[1]);
    }
}

#[test]
fn mainardi_matches_oracle_table() {
    for r in table("mainardi_oracle.tsv") {
        let m = mainardi_eval(r[0], r[1]).unwrap();
        assert!((m - r[2]).abs() <= 1e-12, "alpha={} z={}: {m} vs {}", r[0], r[1], r[2]);
        assert!((m - r[2]).abs() <= 1e-9 * r[2].abs() || r[2].abs() < 1e-290, "alpha={} z={}: {m:e} vs {:e}", r[0], r[1], r[2]);
    }
}

#[test]
fn mainardi_moments() {
    let spec = QuadSpec::new(1e-13, 1e-12);
    for alpha in [0.4, 0.6] {
        for r in [0.0, 0.5, 1.0, 2.0] {
            let m = mainardi_moment(alpha, r, spec).unwrap();
            let want = gamma_fn(r + 1.0).unwrap() / gamma_fn(alpha * r + 1.0).unwrap();
            assert!((m - want).abs() <= 1e-8, "alpha={alpha} r={r}: {m} vs {want}");
        }
    }
}

#[test]
fn mainardi_laplace_gives_both_families() {
    let spec = QuadSpec::new(1e-13, 1e-12);
    for alpha in [0.4, 0.7] {
        for lambda in [0.1, 1.0, 10.0] {
            let e = mainardi_laplace(alpha, lambda, false, spec).unwrap();
            let ea = mainardi_laplace(alpha, lambda, true, spec).unwrap();
            assert!((e - ml(alpha, 1.0, lambda).unwrap()).abs() <= 1e-8);
            assert!((ea - ml(alpha, alpha, lambda).unwrap()).abs() <= 1e-8);
        }
    }
}

#[test]
fn half_order_erfc() {
    assert!((ml(0.5, 1.0, 1.0).unwrap() - 0.427_583_576_155_807_004_41).abs() < 1e-14);
}

#[test]
fn near_exponential_limit() {
    for x in [0.1, 1.0, 3.0, 10.0] {
        let d = (ml(0.999, 1.0, x).unwrap() - (-x).exp()).abs();
        assert!(d < 1e-2, "x={x}: {d}");
    }
}

#[test]
fn positive_argument_series() {
    let p = MlParams::new(1.0, 1.0).unwrap();
    assert!((ml_signed(p, 2.0).unwrap() - 2f64.exp()).abs() < 1e-13);
    let p = MlParams::new(0.5, 1.0).unwrap();
    // E_{1/2}(z) = exp(z^2) erfc(-z); at z = 1 this is e (1 + erf 1)
    assert!((ml_signed(p, 1.0).unwrap() - 5.008_980_080_762_283).abs() < 1e-12);
    assert!(ml_signed(p, 40.0).is_err());
}

proptest! {
    #[test]
    fn recurrence_links_beta_shifts(alpha in 0.05f64..1.0, x in 0.01f64..200.0) {
        // E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z)
        for beta in [1.0, alpha] {
            let lhs = ml(alpha, beta, x).unwrap();
            let rhs = 1.0 / gamma_fn(beta).unwrap() - x * ml(alpha, alpha + beta, x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + x), "beta={} {} vs {}", beta, lhs, rhs);
        }
    }

    #[test]
    fn completely_monotone_on_negative_axis(alpha in 0.05f64..=1.0, x in 0.0f64..500.0, dx in 1e-3f64..5.0) {
        for beta in [1.0, alpha] {
            let a = ml(alpha, beta, x).unwrap();
            let b = ml(alpha, beta, x + dx).unwrap();
            prop_assert!(a > 0.0 && b <= a + 1e-14, "beta={} {} -> {}", beta, a, b);
        }
    }

    #[test]
    fn mainardi_is_a_nonnegative_density(alpha in 0.1f64..0.9, z in 0.0f64..20.0) {
        prop_assert!(mainardi_eval(alpha, z).unwrap() >= -1e-13);
    }
}
