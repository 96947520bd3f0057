//! Product integration against the kernel k(u) = u^{a-1} E_{a,a}(-lambda u^a).
//!
//! On each mesh interval the data is replaced by its linear interpolant and
//! the kernel is integrated exactly through the primitives
//!
//!   P0(s) = int_0^s k      = s^a E_{a,a+1}(-lambda s^a)
//!   P1(s) = int_0^s u k(u) = s^{a+1} [E_{a,a+1} - E_{a,a+2}](-lambda s^a)
//!
//! For lambda = 0 the kernel is u^{a-1}/Gamma(a), which gives the
//! fractional Adams weights of the Riemann-Liouville integral.

use std::sync::OnceLock;

use rayon::prelude::*;

use super::mesh::TimeMesh;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::specfun::{ml_signed, MlParams};

// Beyond this ratio of distance to interval length, primitive differences
// lose too many digits and the interval is integrated by Gauss-Legendre.
const FAR_RATIO: f64 = 1e4;
const GL_POINTS: usize = 10;

fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_POINTS))
}

#[derive(Debug, Clone, Copy)]
pub struct MlKernel {
    pub alpha: f64,
    pub lambda: f64,
    e_aa: MlParams,
    e_a1: MlParams,
    e_a2: MlParams,
}

impl MlKernel {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::ParameterDomain(format!("kernel order must lie in (0, 1], got {alpha}")));
        }
        Ok(Self {
            alpha,
            lambda,
            e_aa: MlParams::new(alpha, alpha)?,
            e_a1: MlParams::new(alpha, alpha + 1.0)?,
            e_a2: MlParams::new(alpha, alpha + 2.0)?,
        })
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        let ua = u.powf(self.alpha);
        Ok(ua / u * ml_signed(self.e_aa, -self.lambda * ua)?)
    }

    /// (P0(s), P1(s)).
    pub fn primitives(&self, s: f64) -> Result<(f64, f64)> {
        if s <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let sa = s.powf(self.alpha);
        let z = -self.lambda * sa;
        let e1 = ml_signed(self.e_a1, z)?;
        let e2 = ml_signed(self.e_a2, z)?;
        Ok((sa * e1, sa * s * (e1 - e2)))
    }

    /// Weights (on f at tau = t_m, on f at tau = t_m + h) of
    /// int_{t_m}^{t_m+h} k(t_n - tau) f(tau) dtau for linear f, where a = t_n - t_m and b = a - h.
    fn interval(&self, a: f64, b: f64, h: f64, pa: (f64, f64), pb: (f64, f64)) -> Result<(f64, f64)> {
        if b > 0.0 && a > FAR_RATIO * h {
            let (x, w) = gl_rule();
            let (mut wa, mut wb) = (0.0, 0.0);
            for (xi, wi) in x.iter().zip(w) {
                let u = a - 0.5 * h * (xi + 1.0);
                let k = 0.5 * h * wi * self.eval(u)?;
                wa += k * 0.5 * (1.0 - xi);
                wb += k * 0.5 * (1.0 + xi);
            }
            return Ok((wa, wb));
        }
        let d0 = pa.0 - pb.0;
        let d1 = pa.1 - pb.1;
        Ok(((d1 - b * d0) / h, (a * d0 - d1) / h))
    }

    /// Node weights c_0..c_n with int_0^{t_n} k(t_n - tau) f(tau) dtau ~ sum c_m f(t_m).
    pub fn node_weights(&self, nodes: &[f64], n: usize) -> Result<Vec<f64>> {
        let prims: Vec<(f64, f64)> = (0..=n).map(|m| self.primitives(nodes[n] - nodes[m])).collect::<Result<_>>()?;
        self.weights_from_primitives(nodes, n, |m| prims[m])
    }

    fn weights_from_primitives<P: Fn(usize) -> (f64, f64)>(&self, nodes: &[f64], n: usize, prim: P) -> Result<Vec<f64>> {
        let mut c = vec![0.0; n + 1];
        for m in 0..n {
            let a = nodes[n] - nodes[m];
            let b = nodes[n] - nodes[m + 1];
            let h = nodes[m + 1] - nodes[m];
            let (wa, wb) = self.interval(a, b, h, prim(m), prim(m + 1))?;
            c[m] += wa;
            c[m + 1] += wb;
        }
        Ok(c)
    }

    /// Node weights for every n = 0..=N; uniform meshes reuse primitives by time difference.
    pub fn all_weights(&self, mesh: &TimeMesh) -> Result<Vec<Vec<f64>>> {
        let nodes = mesh.nodes();
        let nn = mesh.n_steps();
        if mesh.is_uniform() {
            let h = mesh.t_final / nn as f64;
            let prims: Vec<(f64, f64)> = (0..=nn).map(|d| self.primitives(d as f64 * h)).collect::<Result<_>>()?;
            (0..=nn).map(|n| self.weights_from_primitives(nodes, n, |m| prims[n - m])).collect()
        } else {
            (0..=nn).map(|n| self.node_weights(nodes, n)).collect()
        }
    }
}

/// Weight tables for a set of decay rates lambda on one mesh.
#[derive(Debug, Clone)]
pub struct KernelPlan {
    pub alpha: f64,
    pub lambdas: Vec<f64>,
    // [slot][n][m]
    weights: Vec<Vec<Vec<f64>>>,
}

impl KernelPlan {
    pub fn new(mesh: &TimeMesh, alpha: f64, lambdas: Vec<f64>) -> Result<Self> {
        let weights = lambdas
            .par_iter()
            .map(|&l| MlKernel::new(alpha, l)?.all_weights(mesh))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { alpha, lambdas, weights })
    }

    pub fn weights(&self, slot: usize, n: usize) -> &[f64] {
        &self.weights[slot][n]
    }

    pub fn n_steps(&self) -> usize {
        self.weights.first().map_or(0, |w| w.len() - 1)
    }
}

/// Riemann-Liouville integral I^a f at every mesh node (a > 0).
pub fn rl_integral(f: &[f64], mesh: &TimeMesh, alpha: f64) -> Result<Vec<f64>> {
    if f.is_empty() {
        return Err(Error::ParameterDomain("empty time series".into()));
    }
    if f.len() != mesh.len() {
        return Err(Error::ShapeMismatch { expected: mesh.len(), got: f.len() });
    }
    if !(alpha > 0.0) {
        return Err(Error::ParameterDomain(format!("integration order must be positive, got {alpha}")));
    }
    // u^{a-1}/Gamma(a) for any a > 0 via closed-form primitives
    let g1 = crate::specfun::rgamma(alpha + 1.0);
    let g2 = crate::specfun::rgamma(alpha + 2.0);
    let prim = |s: f64| -> (f64, f64) {
        if s <= 0.0 {
            (0.0, 0.0)
        } else {
            let sa = s.powf(alpha);
            (sa * g1, alpha * sa * s * g2)
        }
    };
    let nodes = mesh.nodes();
    let mut out = vec![0.0; f.len()];
    for n in 1..f.len() {
        let mut acc = 0.0;
        for m in 0..n {
            let a = nodes[n] - nodes[m];
            let b = nodes[n] - nodes[m + 1];
            let h = nodes[m + 1] - nodes[m];
            let (pa, pb) = (prim(a), prim(b));
            let d0 = pa.0 - pb.0;
            let d1 = pa.1 - pb.1;
            acc += (d1 - b * d0) / h * f[m] + (a * d0 - d1) / h * f[m + 1];
        }
        out[n] = acc;
    }
    Ok(out)
}

/// max over interior nodes of |d/dt I^{1-a}[u - u(0)] - rhs|, a finite-difference
/// consistency check of the Caputo form.
pub fn caputo_residual(u: &[f64], rhs: &[f64], mesh: &TimeMesh, alpha: f64) -> Result<f64> {
    const MIN_NODES: usize = 16;
    if mesh.len() < MIN_NODES {
        return Err(Error::MeshTooCoarse { nodes: mesh.len(), required: MIN_NODES });
    }
    if u.len() != mesh.len() || rhs.len() != mesh.len() {
        return Err(Error::ShapeMismatch { expected: mesh.len(), got: u.len().min(rhs.len()) });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::ParameterDomain(format!("Caputo order must lie in (0, 1], got {alpha}")));
    }
    let shifted: Vec<f64> = u.iter().map(|x| x - u[0]).collect();
    let w = if alpha == 1.0 { shifted } else { rl_integral(&shifted, mesh, 1.0 - alpha)? };
    let t = mesh.nodes();
    let mut worst: f64 = 0.0;
    for k in 1..t.len() - 1 {
        let h1 = t[k] - t[k - 1];
        let h2 = t[k + 1] - t[k];
        let d = -h2 / (h1 * (h1 + h2)) * w[k - 1] + (h2 - h1) / (h1 * h2) * w[k] + h1 / (h2 * (h1 + h2)) * w[k + 1];
        worst = worst.max((d - rhs[k]).abs());
    }
    Ok(worst)
}
