//! Python bindings: grids and fields, special functions, Besov norms, decay
//! fits, the Picard solver and the experiment runner.

use std::path::PathBuf;

use fracks::besov::{besov_norm, BesovParams, DyadicCutoff};
use fracks::cli::{load_config_with, report_index, run, Overrides};
use fracks::duhamel::TimeMesh;
use fracks::estimates::{self_similar_data, DecaySpec, RatioReport};
use fracks::model::{GammaSign, ModelParams};
use fracks::specfun::{self, Branch, MlParams};
use fracks::spectral::{self, Grid, MlFamily, SpectralField};
use fracks::wellposed::{picard_solve, IterationConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: fracks::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn family(name: &str) -> PyResult<MlFamily> {
    match name {
        "E_alpha" => Ok(MlFamily::EAlpha),
        "E_alpha_alpha" => Ok(MlFamily::EAlphaAlpha),
        other => Err(PyValueError::new_err(format!("family must be E_alpha or E_alpha_alpha, got {other}"))),
    }
}

#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid(Grid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(dim: usize, n: usize, half_width: f64) -> PyResult<Self> {
        Grid::new(dim, n, half_width).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.0.half_width
    }

    /// Grid coordinates, flattened row-major; one list per axis.
    fn points(&self) -> Vec<Vec<f64>> {
        (0..self.0.dim).map(|a| (0..self.0.len()).map(|i| self.0.point(i)[a]).collect()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Grid(dim={}, n={}, half_width={})", self.0.dim, self.0.n, self.0.half_width)
    }
}

#[pyclass(name = "ModelParams", from_py_object)]
#[derive(Clone, Copy)]
struct PyModelParams(ModelParams);

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (alpha=0.8, theta=1.2, theta1=0.0, gamma=0.0, chi=1.0, kappa=1.0, d_eta=1.0, d_v=1.0, dim=1, gamma_sign="damped"))]
    #[allow(clippy::too_many_arguments)]
    fn new(alpha: f64, theta: f64, theta1: f64, gamma: f64, chi: f64, kappa: f64, d_eta: f64, d_v: f64, dim: usize, gamma_sign: &str) -> PyResult<Self> {
        let gamma_sign: GammaSign = gamma_sign.parse().map_err(err)?;
        let p = ModelParams { alpha, theta, theta1, gamma, chi, kappa, d_eta, d_v, dim, gamma_sign, allow_negative_theta1: false };
        p.validate().map_err(err)?;
        Ok(Self(p))
    }

    /// Regularity indices of the eta and v spaces for exponents p, q.
    fn exponents(&self, p: f64, q: f64) -> (f64, f64) {
        (self.0.s_eta(p), self.0.s_v(q))
    }

    fn check_window(&self, p: f64, q: f64) -> PyResult<()> {
        self.0.check_window(p, q).map_err(err)
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!("ModelParams(alpha={}, theta={}, theta1={}, gamma={}, dim={})", p.alpha, p.theta, p.theta1, p.gamma, p.dim)
    }
}

#[pyclass(name = "Field", from_py_object)]
#[derive(Clone)]
struct PyField(SpectralField);

#[pymethods]
impl PyField {
    #[staticmethod]
    fn from_values(grid: PyGrid, values: Vec<f64>) -> PyResult<Self> {
        SpectralField::from_values(grid.0, &values).map(Self).map_err(err)
    }

    #[staticmethod]
    fn zeros(grid: PyGrid) -> Self {
        Self(SpectralField::zeros(grid.0))
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid)
    }

    fn values(&self) -> Vec<f64> {
        self.0.to_values()
    }

    /// Fourier coefficients as (re, im) pairs in FFT order.
    fn coeffs(&self) -> Vec<(f64, f64)> {
        self.0.coeffs.iter().map(|c| (c.re, c.im)).collect()
    }

    fn l2_norm(&self) -> f64 {
        self.0.l2_norm_spectral()
    }

    fn dealiased(&self) -> Self {
        Self(self.0.dealiased())
    }

    fn frac_laplacian(&self, theta: f64) -> Self {
        Self(spectral::frac_laplacian(&self.0, theta))
    }

    fn heat(&self, t: f64, theta: f64) -> Self {
        Self(spectral::heat_semigroup(&self.0, t, theta))
    }

    #[pyo3(signature = (t, params, family="E_alpha", gamma_shift=false))]
    fn ml_operator(&self, t: f64, params: &PyModelParams, family: &str, gamma_shift: bool) -> PyResult<Self> {
        spectral::ml_operator(&self.0, t, &params.0, self::family(family)?, gamma_shift).map(Self).map_err(err)
    }

    fn product(&self, other: &PyField) -> PyResult<Self> {
        spectral::pointwise_product(&self.0, &other.0, true).map(Self).map_err(err)
    }

    fn __add__(&self, other: &PyField) -> PyResult<Self> {
        self.0.add(&other.0).map(Self).map_err(err)
    }

    fn __sub__(&self, other: &PyField) -> PyResult<Self> {
        self.0.sub(&other.0).map(Self).map_err(err)
    }

    fn __mul__(&self, a: f64) -> Self {
        Self(self.0.scale(a))
    }

    fn __rmul__(&self, a: f64) -> Self {
        Self(self.0.scale(a))
    }

    fn save(&self, path: PathBuf, name: &str, time: f64) -> PyResult<()> {
        spectral::save_snapshot(&path, &self.0, name, time).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        spectral::load_snapshot(&path).map(|(_, f)| Self(f)).map_err(err)
    }
}

/// E_{alpha,beta}(-x) for x >= 0, returned as (value, error estimate, branch).
#[pyfunction]
fn ml_eval(alpha: f64, beta: f64, x: f64) -> PyResult<(f64, f64, &'static str)> {
    let r = specfun::ml_eval(MlParams::new(alpha, beta).map_err(err)?, x).map_err(err)?;
    let branch = match r.branch {
        Branch::Series => "series",
        Branch::Asymptotic => "asymptotic",
        Branch::Contour => "contour",
    };
    Ok((r.value, r.est_abs_error, branch))
}

#[pyfunction]
fn gamma(x: f64) -> PyResult<f64> {
    specfun::gamma_fn(x).map_err(err)
}

#[pyfunction]
fn mainardi(alpha: f64, z: f64) -> PyResult<f64> {
    specfun::mainardi_eval(alpha, z).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (alpha, r, tol=1e-10))]
fn mainardi_moment(alpha: f64, r: f64, tol: f64) -> PyResult<f64> {
    specfun::mainardi_moment(alpha, r, fracks::quad::QuadSpec::new(tol, tol)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (field, s, p, r=f64::INFINITY))]
fn besov(field: &PyField, s: f64, p: f64, r: f64) -> PyResult<f64> {
    let cut = DyadicCutoff::new(field.0.grid).map_err(err)?;
    besov_norm(&field.0, BesovParams::new(s, p, r).map_err(err)?, &cut).map_err(err)
}

#[pyfunction]
fn self_similar(grid: PyGrid, s1: f64, p1: f64) -> PyResult<PyField> {
    let cut = DyadicCutoff::new(grid.0).map_err(err)?;
    Ok(PyField(self_similar_data(&cut, s1, p1)))
}

fn report_dict<'py>(py: Python<'py>, r: &RatioReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("check_id", &r.check_id)?;
    d.set_item("measured", r.measured)?;
    d.set_item("predicted", r.predicted)?;
    d.set_item("rel_dev", r.rel_dev)?;
    d.set_item("verdict", r.verdict.to_string())?;
    d.set_item("window", r.window)?;
    Ok(d)
}

/// Log-log decay fit; family is "heat", "E_alpha" or "E_alpha_alpha".
#[pyfunction]
#[pyo3(signature = (field, family, theta, alpha=1.0, zeta=0.0, s1=0.0, s2=0.5, p1=2.0, p2=2.0, t_min=1e-6, t_max=1e8, points_per_decade=12))]
#[allow(clippy::too_many_arguments)]
fn decay_fit<'py>(
    py: Python<'py>,
    field: &PyField,
    family: &str,
    theta: f64,
    alpha: f64,
    zeta: f64,
    s1: f64,
    s2: f64,
    p1: f64,
    p2: f64,
    t_min: f64,
    t_max: f64,
    points_per_decade: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = DecaySpec { zeta, theta, alpha, s1, s2, p1, p2, t_min, t_max, points_per_decade };
    let r = if family == "heat" {
        fracks::estimates::decay_fit_heat(&field.0, &spec)
    } else {
        fracks::estimates::decay_fit_ml(&field.0, &spec, self::family(family)?)
    }
    .map_err(err)?;
    report_dict(py, &r)
}

/// Picard iteration for the mild formulation on a graded mesh. Returns a dict
/// with the convergence flag, the trace rows and the fields at the final time.
#[pyfunction]
#[pyo3(signature = (eta0, v0, params, t_final=2.0, steps=64, grading=1.0, p=1.5, q=1.5, max_iters=60, tol=1e-10))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    eta0: &PyField,
    v0: &PyField,
    params: &PyModelParams,
    t_final: f64,
    steps: usize,
    grading: f64,
    p: f64,
    q: f64,
    max_iters: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mesh = TimeMesh::graded(t_final, steps, grading).map_err(err)?;
    let cfg = IterationConfig::new(&params.0, p, q, max_iters, tol).map_err(err)?;
    let sol = py.detach(|| picard_solve(&eta0.0, &v0.0, &params.0, &mesh, cfg)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("converged", sol.trace.converged)?;
    let rows: Vec<(usize, f64, f64, f64)> = sol.trace.rows.iter().map(|r| (r.iter, r.norm_eta_x, r.norm_v_y, r.ratio)).collect();
    d.set_item("trace", rows)?;
    d.set_item("times", mesh.nodes().to_vec())?;
    d.set_item("eta", PyField(sol.history.eta.last().cloned().unwrap_or_else(|| eta0.0.clone())))?;
    d.set_item("v", PyField(sol.history.v.last().cloned().unwrap_or_else(|| v0.0.clone())))?;
    Ok(d)
}

/// Runs one experiment from a config file; returns the report dicts.
#[pyfunction]
#[pyo3(signature = (experiment, config, out=None, seed=None))]
fn run_experiment<'py>(py: Python<'py>, experiment: &str, config: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let ov = Overrides { experiment: Some(experiment.parse().map_err(err)?), seed, output_dir: out, gamma_sign: None };
    let cfg = load_config_with(&config, &ov).map_err(err)?;
    let outcome = py.detach(|| run(&cfg)).map_err(err)?;
    report_index(&cfg.output_dir).map_err(err)?;
    outcome.reports.iter().map(|r| report_dict(py, r)).collect()
}

#[pymodule]
fn pyfracks(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(ml_eval, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(mainardi, m)?)?;
    m.add_function(wrap_pyfunction!(mainardi_moment, m)?)?;
    m.add_function(wrap_pyfunction!(besov, m)?)?;
    m.add_function(wrap_pyfunction!(self_similar, m)?)?;
    m.add_function(wrap_pyfunction!(decay_fit, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
