//! Quadrature rules: globally adaptive Gauss-Kronrod (7/15) on finite
//! intervals, a doubling-chunk driver for [a, inf), and Gauss-Legendre
//! nodes for fixed-order product rules.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Tolerances and work limits for adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-12, max_subdivisions: 4000 }
    }
}

impl QuadSpec {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub est_error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive G7/K15 integration of `f` over [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: QuadSpec) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, est_error: 0.0, evaluations: 0 });
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    let mut evals = 15;
    let mut splits = 0;
    while total_err > spec.abs_tol.max(spec.rel_tol * total.abs()) {
        if splits >= spec.max_subdivisions {
            return Err(Error::QuadratureFailure(format!(
                "no convergence on [{a}, {b}] after {splits} subdivisions (err {total_err:.3e})"
            )));
        }
        let seg = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (seg.a + seg.b);
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        evals += 30;
        splits += 1;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.err;
        if !total.is_finite() {
            return Err(Error::QuadratureFailure("non-finite integrand".into()));
        }
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
    }
    // recompute the sum to shed accumulated rounding from the running updates
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let est_error: f64 = heap.iter().map(|s| s.err).sum();
    Ok(QuadResult { value, est_error, evaluations: evals })
}

/// Integrate over [a, inf) by summing adaptive integrals over doubling
/// chunks [a + s(2^k - 1), a + s(2^{k+1} - 1)] until the chunk contributions
/// are negligible. A tail that stops shrinking is reported as divergent.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    spec: QuadSpec,
) -> Result<QuadResult> {
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    let mut lo = a;
    let mut width = scale;
    let mut small_run = 0;
    let mut prev_mag = f64::INFINITY;
    let mut growth_run = 0;
    for _ in 0..200 {
        let hi = lo + width;
        let chunk_spec = QuadSpec { abs_tol: spec.abs_tol * 0.1, ..spec };
        let r = integrate(&f, lo, hi, chunk_spec)?;
        total += r.value;
        err += r.est_error;
        evals += r.evaluations;
        let mag = r.value.abs();
        if mag <= spec.abs_tol.max(spec.rel_tol * total.abs()) * 1e-2 {
            small_run += 1;
            if small_run >= 3 {
                return Ok(QuadResult { value: total, est_error: err + mag, evaluations: evals });
            }
        } else {
            small_run = 0;
        }
        if mag >= prev_mag && mag > 0.0 {
            growth_run += 1;
            if growth_run >= 6 {
                return Err(Error::QuadratureFailure("tail does not decay: divergent integral".into()));
            }
        } else {
            growth_run = 0;
        }
        prev_mag = mag;
        lo = hi;
        width *= 2.0;
    }
    Err(Error::QuadratureFailure("tail truncation did not converge".into()))
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, QuadSpec::default()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, QuadSpec::new(1e-11, 1e-11)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, 1.0, QuadSpec::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divergent_tail_detected() {
        let r = integrate_to_infinity(|x: f64| 1.0 / (1.0 + x).sqrt(), 0.0, 1.0, QuadSpec::default());
        assert!(matches!(r, Err(Error::QuadratureFailure(_))));
    }

    #[test]
    fn legendre_rule_integrates_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
