use num_complex::Complex64;
use serde::Serialize;

use crate::besov::{besov_norm, BesovParams, DyadicCutoff};
use crate::duhamel::{History, TimeMesh};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{Grid, SpectralField};

fn psi(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// C-infinity step: 0 for s <= 0, 1 for s >= 1.
fn smooth_step(s: f64) -> f64 {
    let a = psi(s);
    let b = psi(1.0 - s);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Truncated power-law data with Fourier coefficients |xi|^{-(n + degree)},
/// switched on smoothly between |k| = k_in and 2 k_in (lattice units) and off
/// between xi_out/2 and xi_out. Exactly homogeneous of the given degree in between.
pub fn homogeneous_data(grid: Grid, degree: f64, k_in: f64, xi_out: f64, amplitude: f64) -> SpectralField {
    let n = grid.dim as f64;
    let mut f = SpectralField::zeros(grid);
    for (i, c) in f.coeffs.iter_mut().enumerate() {
        if i == 0 || grid.touches_nyquist(i) {
            continue;
        }
        let kabs = (grid.k_norm_sq(i) as f64).sqrt();
        let xi = kabs * grid.dxi();
        let w = smooth_step((kabs - k_in) / k_in) * (1.0 - smooth_step((xi - 0.5 * xi_out) / (0.5 * xi_out)));
        *c = Complex64::new(amplitude * w * xi.powf(-(n + degree)), 0.0);
    }
    f.dealiased()
}

/// Mesh graded with exponent theta/alpha, so that node 2j sits at 2^{theta/alpha} t_j.
pub fn selfsim_mesh(params: &ModelParams, t_final: f64, n_steps: usize) -> Result<TimeMesh> {
    let r = params.theta / params.alpha;
    if r < 1.0 {
        return Err(Error::ScalingNotApplicable(format!("theta/alpha = {r} < 1 gives no nested graded mesh")));
    }
    TimeMesh::graded(t_final, n_steps, r)
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfSimReport {
    pub err_eta: f64,
    pub err_v: f64,
    /// (j, i) node pairs with t_i = sigma^{theta/alpha} t_j.
    pub pairs: Vec<(usize, usize)>,
}

/// Index of lattice point 2k, when 2k lies inside the dealiased band.
fn doubled_index(grid: &Grid, i: usize) -> Option<usize> {
    let k = grid.kvec(i);
    let c = grid.dealias_cutoff();
    let mut idx = 0;
    for &kk in &k[..grid.dim] {
        let d = 2 * kk;
        if d.abs() > c {
            return None;
        }
        idx = idx * grid.n + d.rem_euclid(grid.n as i64) as usize;
    }
    Some(idx)
}

/// Relative discrepancy of f(t) against sigma^{deg - n} f(., sigma^{theta/alpha} t), measured on
/// the even sublattice in a scale-invariant Besov norm.
fn scaling_error(
    a: &SpectralField,
    b: &SpectralField,
    factor: f64,
    bp: BesovParams,
    cutoff: &DyadicCutoff,
) -> Result<f64> {
    let g = a.grid;
    let mut diff = SpectralField::zeros(g);
    let mut reference = SpectralField::zeros(g);
    for i in 1..g.len() {
        if let Some(j) = doubled_index(&g, i) {
            diff.coeffs[j] = a.coeffs[j] - factor * b.coeffs[i];
            reference.coeffs[j] = a.coeffs[j];
        }
    }
    let den = besov_norm(&reference, bp, cutoff)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(besov_norm(&diff, bp, cutoff)? / den)
}

/// Compares eta(x, t) with sigma^{2theta+theta1-2} eta(sigma x, sigma^{theta/alpha} t) and the v
/// analogue with exponent theta+theta1-2, over every node pair the mesh represents.
/// Only sigma = 1 and sigma = 2 map the lattice to itself.
pub fn selfsim_check(
    history: &History,
    mesh: &TimeMesh,
    params: &ModelParams,
    sigma: f64,
    p: f64,
    q: f64,
    cutoff: &DyadicCutoff,
) -> Result<SelfSimReport> {
    if params.gamma != 0.0 {
        return Err(Error::ScalingNotApplicable(format!("gamma = {} breaks the scaling invariance", params.gamma)));
    }
    if sigma == 1.0 {
        return Ok(SelfSimReport { err_eta: 0.0, err_v: 0.0, pairs: vec![] });
    }
    if sigma != 2.0 {
        return Err(Error::ParameterDomain(format!("only sigma = 2 is representable on the lattice, got {sigma}")));
    }
    history.require(mesh.n_steps())?;
    let stretch = sigma.powf(params.theta / params.alpha);
    let t = mesh.nodes();
    let mut pairs = Vec::new();
    for j in 1..t.len() {
        let target = stretch * t[j];
        if let Some(i) = t.iter().position(|&x| (x - target).abs() <= 1e-9 * target) {
            pairs.push((j, i));
        }
    }
    if pairs.is_empty() {
        return Err(Error::ParameterDomain("mesh holds no node pairs related by the time scaling".into()));
    }
    let n = params.dim as f64;
    let a_eta = 2.0 * params.theta + params.theta1 - 2.0;
    let a_v = params.theta + params.theta1 - 2.0;
    let be = BesovParams::new(params.s_eta(p), p, 2.0)?;
    let bv = BesovParams::new(params.s_v(q), q, 2.0)?;
    let mut err_eta: f64 = 0.0;
    let mut err_v: f64 = 0.0;
    for &(j, i) in &pairs {
        err_eta = err_eta.max(scaling_error(&history.eta[j], &history.eta[i], sigma.powf(a_eta - n), be, cutoff)?);
        err_v = err_v.max(scaling_error(&history.v[j], &history.v[i], sigma.powf(a_v - n), bv, cutoff)?);
    }
    Ok(SelfSimReport { err_eta, err_v, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wellposed::linear_part;

    #[test]
    fn linear_part_scales_exactly() {
        let g = Grid::new(1, 128, 16.0 * std::f64::consts::PI).unwrap();
        let p = ModelParams { alpha: 0.8, theta: 1.2, ..Default::default() };
        // no smooth cutoffs inside the band: pure power law up to the dealiasing edge
        let eta0 = homogeneous_data(g, 2.0 - 2.0 * p.theta, 0.5, 1e9, 1e-3);
        let v0 = homogeneous_data(g, 2.0 - p.theta, 0.5, 1e9, 1e-3);
        let mesh = selfsim_mesh(&p, 4.0, 8).unwrap();
        let (e, v) = linear_part(&eta0, &v0, &p, &mesh).unwrap();
        let h = History::from_series(e, v).unwrap();
        let cut = DyadicCutoff::new(g).unwrap();
        let r = selfsim_check(&h, &mesh, &p, 2.0, 1.5, 1.5, &cut).unwrap();
        assert_eq!(r.pairs.len(), 4);
        assert!(r.err_eta < 1e-10 && r.err_v < 1e-10, "{r:?}");
        assert_eq!(selfsim_check(&h, &mesh, &p, 1.0, 1.5, 1.5, &cut).unwrap().err_eta, 0.0);
        let pg = ModelParams { gamma: 0.1, ..p };
        assert!(matches!(selfsim_check(&h, &mesh, &pg, 2.0, 1.5, 1.5, &cut), Err(Error::ScalingNotApplicable(_))));
    }
}
