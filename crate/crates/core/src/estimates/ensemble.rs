use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// Seeded ensemble of real band-limited fields: random phases, amplitudes
/// |xi|^{-slope} times a uniform random factor, support |k| in [k_lo, k_hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub members: usize,
    pub seed: u64,
    pub k_lo: f64,
    pub k_hi: f64,
    pub slope: f64,
}

fn neg_index(grid: &Grid, i: usize) -> usize {
    let k = grid.kvec(i);
    let n = grid.n as i64;
    let mut idx = 0;
    for &kk in &k[..grid.dim] {
        idx = idx * grid.n + (-kk).rem_euclid(n) as usize;
    }
    idx
}

pub fn band_limited_field(grid: Grid, k_lo: f64, k_hi: f64, slope: f64, rng: &mut ChaCha8Rng) -> Result<SpectralField> {
    if !(k_lo > 0.0 && k_hi >= k_lo) {
        return Err(Error::ParameterDomain(format!("band needs 0 < k_lo <= k_hi, got [{k_lo}, {k_hi}]")));
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for i in 1..grid.len() {
        let k = (grid.k_norm_sq(i) as f64).sqrt();
        if k < k_lo || k > k_hi || grid.touches_nyquist(i) || !grid.is_dealias_retained(i) {
            continue;
        }
        let j = neg_index(&grid, i);
        if j < i {
            continue;
        }
        let amp = rng.random_range(0.5..1.5) * grid.xi_norm(i).powf(-slope);
        let ph = rng.random_range(0.0..std::f64::consts::TAU);
        let c = Complex64::from_polar(amp, ph);
        coeffs[i] = c;
        coeffs[j] = c.conj();
    }
    SpectralField::from_coeffs(grid, coeffs)
}

/// Members are normalised to unit max coefficient, so amplitudes can be applied afterwards.
pub fn band_limited_ensemble(grid: Grid, spec: &EnsembleSpec) -> Result<Vec<SpectralField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.members)
        .map(|_| {
            let f = band_limited_field(grid, spec.k_lo, spec.k_hi, spec.slope, &mut rng)?;
            let m = f.max_abs_coeff();
            if m == 0.0 {
                return Err(Error::ParameterDomain(format!("band [{}, {}] holds no lattice modes", spec.k_lo, spec.k_hi)));
            }
            Ok(f.scale(1.0 / m))
        })
        .collect()
}
