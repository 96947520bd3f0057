use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on [-L, L)^dim with `n` points per axis.
///
/// Coefficient index `i` along an axis carries the integer wavenumber
/// `k = i` for `i <= n/2` and `k = i - n` otherwise, i.e. frequency
/// `xi = pi k / L`. The Nyquist index `n/2` is kept with `k = +n/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("points per axis must be a power of two >= 8, got {n}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {half_width}")));
        }
        Ok(Self { dim, n, half_width })
    }

    /// Total number of grid points (and coefficients).
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Frequency spacing pi / L.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Signed wavenumber of a per-axis index.
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Per-axis indices of a flat (row-major) index.
    pub fn unflatten(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    /// Integer wavenumber vector of a flat index (unused axes are zero).
    pub fn kvec(&self, idx: usize) -> [i64; 3] {
        let ii = self.unflatten(idx);
        let mut k = [0; 3];
        for a in 0..self.dim {
            k[a] = self.wavenumber(ii[a]);
        }
        k
    }

    /// |k|^2 of a flat index, an exact integer usable as a cache key.
    pub fn k_norm_sq(&self, idx: usize) -> u64 {
        self.kvec(idx).iter().map(|k| (k * k) as u64).sum()
    }

    /// |xi| of a flat index.
    pub fn xi_norm(&self, idx: usize) -> f64 {
        (self.k_norm_sq(idx) as f64).sqrt() * self.dxi()
    }

    /// Frequency vector xi of a flat index.
    pub fn xi(&self, idx: usize) -> [f64; 3] {
        let k = self.kvec(idx);
        let s = self.dxi();
        [k[0] as f64 * s, k[1] as f64 * s, k[2] as f64 * s]
    }

    /// True if any axis index is the Nyquist index.
    pub fn touches_nyquist(&self, idx: usize) -> bool {
        let ii = self.unflatten(idx);
        (0..self.dim).any(|a| self.is_nyquist(ii[a]))
    }

    /// Physical coordinate of a flat grid-point index.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let ii = self.unflatten(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = -self.half_width + ii[a] as f64 * self.dx();
        }
        x
    }

    /// Largest |k| kept by the 2/3 rule on each axis.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Whether the mode survives 2/3-rule truncation.
    pub fn is_dealias_retained(&self, idx: usize) -> bool {
        let c = self.dealias_cutoff();
        self.kvec(idx)[..self.dim].iter().all(|k| k.abs() <= c)
    }
}

/// Fourier coefficients of a scalar field on a [`Grid`]:
/// `f(x) = sum_k c_k exp(i xi_k . x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    pub coeffs: Vec<Complex64>,
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().expect("fft planner poisoned");
    if forward {
        p.plan_fft_forward(n)
    } else {
        p.plan_fft_inverse(n)
    }
}

/// In-place unnormalized FFT along every axis.
fn fft_nd(grid: &Grid, buf: &mut [Complex64], forward: bool) {
    let n = grid.n;
    let fft = plan(n, forward);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let total = buf.len();
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        if stride == 1 {
            fft.process(buf);
            continue;
        }
        let block = stride * n;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = buf[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    buf[base + j * stride] = *v;
                }
            }
        }
    }
}

/// (-1)^(sum of axis indices): the phase from the grid origin at -L.
fn origin_sign(grid: &Grid, idx: usize) -> f64 {
    let ii = grid.unflatten(idx);
    if ii[..grid.dim].iter().sum::<usize>() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: coeffs.len() });
        }
        Ok(Self { grid, coeffs })
    }

    /// Forward transform of grid values.
    pub fn from_values(grid: Grid, values: &[f64]) -> Result<Self> {
        let buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::from_complex_values(grid, buf)
    }

    pub fn from_complex_values(grid: Grid, mut buf: Vec<Complex64>) -> Result<Self> {
        if buf.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: buf.len() });
        }
        fft_nd(&grid, &mut buf, true);
        let scale = 1.0 / grid.len() as f64;
        for (idx, c) in buf.iter_mut().enumerate() {
            *c *= scale * origin_sign(&grid, idx);
        }
        Ok(Self { grid, coeffs: buf })
    }

    /// Samples a function of position on the grid and transforms it.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(&grid.point(i)[..grid.dim])).collect();
        Self::from_values(grid, &values).expect("length matches grid")
    }

    /// Complex grid values.
    pub fn to_complex_values(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> =
            self.coeffs.iter().enumerate().map(|(i, c)| c * origin_sign(&self.grid, i)).collect();
        fft_nd(&self.grid, &mut buf, false);
        buf
    }

    /// Real part of the grid values.
    pub fn to_values(&self) -> Vec<f64> {
        self.to_complex_values().into_iter().map(|c| c.re).collect()
    }

    /// Zero-frequency coefficient (the spatial mean).
    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { grid: self.grid, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self { grid: self.grid, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self { grid: self.grid, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() })
    }

    /// a * self + other
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self { grid: self.grid, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x * a + y).collect() })
    }

    /// L2 norm from the coefficients: (2L)^{n/2} ||c||_2.
    pub fn l2_norm_spectral(&self) -> f64 {
        let vol = (2.0 * self.grid.half_width).powi(self.grid.dim as i32);
        (vol * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Max coefficient modulus.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest violation of c(-k) = conj(c(k)) over non-Nyquist modes.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for idx in 0..g.len() {
            let ii = g.unflatten(idx);
            let mut mirror = 0;
            for a in 0..g.dim {
                mirror = mirror * g.n + (g.n - ii[a]) % g.n;
            }
            worst = worst.max((self.coeffs[idx] - self.coeffs[mirror].conj()).norm());
        }
        worst
    }

    /// Drops every mode outside the 2/3-rule band.
    pub fn dealiased(&self) -> Self {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            if !self.grid.is_dealias_retained(idx) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Riemann-sum L^p norm of grid values with cell volume weighting; p = inf is the max.
pub fn lp_norm(grid: &Grid, values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let s: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    (grid.cell_volume() * s).powf(1.0 / p)
}

/// L^p norm of the pointwise Euclidean magnitude of a vector of grid arrays.
pub fn lp_norm_vector(grid: &Grid, comps: &[Vec<f64>], p: f64) -> f64 {
    let mag: Vec<f64> = (0..grid.len()).map(|i| comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()).collect();
    lp_norm(grid, &mag, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(4, 16, 1.0).is_err());
        assert!(Grid::new(1, 12, 1.0).is_err());
        assert!(Grid::new(1, 4, 1.0).is_err());
        assert!(Grid::new(2, 16, -1.0).is_err());
        let g = Grid::new(2, 16, 1.0).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.wavenumber(8), 8);
        assert_eq!(g.wavenumber(9), -7);
    }

    #[test]
    fn constant_has_only_zero_mode() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let f = SpectralField::from_fn(g, |_| 2.5);
        assert!((f.coeffs[0].re - 2.5).abs() < 1e-14);
        assert!(f.coeffs[1..].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn plane_wave_single_coefficient() {
        let g = Grid::new(1, 32, 2.0).unwrap();
        let xi0 = 3.0 * g.dxi();
        let buf: Vec<Complex64> =
            (0..g.len()).map(|i| Complex64::from_polar(1.0, xi0 * g.point(i)[0])).collect();
        let f = SpectralField::from_complex_values(g, buf).unwrap();
        for (i, c) in f.coeffs.iter().enumerate() {
            let want = if i == 3 { 1.0 } else { 0.0 };
            assert!((c - Complex64::new(want, 0.0)).norm() < 1e-13, "index {i}: {c}");
        }
    }

    #[test]
    fn round_trip_and_plancherel() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=3 {
            let g = Grid::new(dim, 16, 1.7).unwrap();
            let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = SpectralField::from_values(g, &v).unwrap();
            let back = f.to_values();
            let err = v.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-12, "dim {dim}: {err}");
            let grid_l2 = lp_norm(&g, &v, 2.0);
            assert!((grid_l2 - f.l2_norm_spectral()).abs() <= 1e-12 * grid_l2);
            assert!(f.conjugate_symmetry_defect() < 1e-14);
        }
    }

    #[test]
    fn shape_mismatch() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        assert!(matches!(SpectralField::from_values(g, &[0.0; 15]), Err(Error::ShapeMismatch { .. })));
    }
}
