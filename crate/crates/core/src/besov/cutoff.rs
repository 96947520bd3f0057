use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// Inner and outer radius of the reference annulus.
pub const ANNULUS_INNER: f64 = 0.75;
pub const ANNULUS_OUTER: f64 = 8.0 / 3.0;
/// Minimum number of resolvable shells for a usable cutoff.
pub const MIN_SHELLS: usize = 4;

fn psi(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth bump supported in (3/4, 8/3).
pub fn chi(u: f64) -> f64 {
    psi((ANNULUS_OUTER - u) / (ANNULUS_OUTER - 2.0)) * psi((u - ANNULUS_INNER) / (1.0 - ANNULUS_INNER))
}

/// phi_j(r) = chi(r 2^-j) / sum_k chi(r 2^-k), the dyadic partition of unity.
pub fn phi(j: i32, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let own = chi(r * 2f64.powi(-j));
    if own == 0.0 {
        return 0.0;
    }
    let c = r.log2().floor() as i32;
    let total: f64 = (c - 3..=c + 3).map(|k| chi(r * 2f64.powi(-k))).sum();
    own / total
}

/// Dyadic shells j_min..=j_max resolved on a grid, with the per-index weights.
#[derive(Debug, Clone)]
pub struct DyadicCutoff {
    pub grid: Grid,
    pub j_min: i32,
    pub j_max: i32,
    weights: Vec<Vec<f64>>,
}

impl DyadicCutoff {
    pub fn new(grid: Grid) -> Result<Self> {
        let xi_min = grid.dxi();
        let xi_max = grid.dxi() * grid.dealias_cutoff() as f64 * (grid.dim as f64).sqrt();
        let mut j_min = (xi_min / ANNULUS_OUTER).log2().floor() as i32 - 1;
        while ANNULUS_OUTER * 2f64.powi(j_min) <= xi_min {
            j_min += 1;
        }
        let mut j_max = (xi_max / ANNULUS_INNER).log2().ceil() as i32 + 1;
        while ANNULUS_INNER * 2f64.powi(j_max) >= xi_max {
            j_max -= 1;
        }
        let shells = (j_max - j_min + 1).max(0) as usize;
        if shells < MIN_SHELLS {
            return Err(Error::GridTooSmall { shells, required: MIN_SHELLS });
        }
        let weights = (j_min..=j_max)
            .into_par_iter()
            .map(|j| (0..grid.len()).map(|i| phi(j, grid.xi_norm(i))).collect())
            .collect();
        Ok(Self { grid, j_min, j_max, weights })
    }

    pub fn shells(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    pub fn n_shells(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    /// Weights phi_j at every lattice index, or None outside the range.
    pub fn weights(&self, j: i32) -> Option<&[f64]> {
        if j < self.j_min || j > self.j_max {
            None
        } else {
            Some(&self.weights[(j - self.j_min) as usize])
        }
    }

    /// max |sum_j phi_j - 1| over nonzero lattice points inside the dealiased band.
    pub fn partition_defect(&self) -> f64 {
        (1..self.grid.len())
            .filter(|&i| self.grid.is_dealias_retained(i))
            .map(|i| (self.weights.iter().map(|w| w[i]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Delta_j f (zero outside the resolved range).
    pub fn block(&self, f: &SpectralField, j: i32) -> SpectralField {
        match self.weights(j) {
            Some(w) => SpectralField {
                grid: f.grid,
                coeffs: f.coeffs.iter().zip(w).map(|(c, w)| c * *w).collect(),
            },
            None => SpectralField::zeros(f.grid),
        }
    }

    /// S_k f = zero mode + sum_{j_min <= j <= k} Delta_j f.
    pub fn low_pass(&self, f: &SpectralField, k: i32) -> SpectralField {
        let mut out = SpectralField::zeros(f.grid);
        out.coeffs[0] = f.coeffs[0];
        for j in self.j_min..=k.min(self.j_max) {
            let w = &self.weights[(j - self.j_min) as usize];
            for ((o, c), w) in out.coeffs.iter_mut().zip(&f.coeffs).zip(w) {
                *o += c * *w;
            }
        }
        out
    }

    /// Whether the spectrum of f lies in the closed annulus of shell j.
    pub fn spectrum_in_shell(&self, f: &SpectralField, j: i32, rel_tol: f64) -> bool {
        let scale = f.max_abs_coeff();
        let lo = ANNULUS_INNER * 2f64.powi(j);
        let hi = ANNULUS_OUTER * 2f64.powi(j);
        f.coeffs.iter().enumerate().all(|(i, c)| {
            let r = self.grid.xi_norm(i);
            (r >= lo && r <= hi) || c.norm() <= rel_tol * scale
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_shells() {
        let g = Grid::new(1, 64, std::f64::consts::PI).unwrap();
        let c = DyadicCutoff::new(g).unwrap();
        assert_eq!((c.j_min, c.j_max), (-1, 4));
        assert!(c.partition_defect() <= 1e-12);
    }

    #[test]
    fn too_small_grid() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        assert!(matches!(DyadicCutoff::new(g), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn support_and_partition() {
        for j in -3..4 {
            let s = 2f64.powi(j);
            let total = phi(j - 1, s) + phi(j, s) + phi(j + 1, s);
            assert!((total - 1.0).abs() < 1e-14);
            assert_eq!(phi(j, 0.7499 * s), 0.0);
            assert_eq!(phi(j, 2.6667 * s), 0.0);
        }
    }
}
