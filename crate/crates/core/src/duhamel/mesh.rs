use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// Partition 0 = t_0 < ... < t_N = t_final, uniform or graded as t_k = T (k/N)^r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeMesh {
    pub t_final: f64,
    pub grading: f64,
    nodes: Vec<f64>,
}

impl TimeMesh {
    pub fn uniform(t_final: f64, n_steps: usize) -> Result<Self> {
        Self::graded(t_final, n_steps, 1.0)
    }

    pub fn graded(t_final: f64, n_steps: usize, grading: f64) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::ParameterDomain(format!("t_final must be positive, got {t_final}")));
        }
        if n_steps == 0 {
            return Err(Error::ParameterDomain("time mesh needs at least one step".into()));
        }
        if !(grading >= 1.0) {
            return Err(Error::ParameterDomain(format!("grading exponent must be >= 1, got {grading}")));
        }
        let n = n_steps as f64;
        let mut nodes: Vec<f64> = (0..=n_steps).map(|k| t_final * (k as f64 / n).powf(grading)).collect();
        nodes[n_steps] = t_final;
        Ok(Self { t_final, grading, nodes })
    }

    /// Mesh from explicit nodes (must start at 0 and increase strictly).
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::ParameterDomain("mesh nodes must start at 0 and increase strictly".into()));
        }
        Ok(Self { t_final: *nodes.last().unwrap(), grading: f64::NAN, nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_uniform(&self) -> bool {
        self.grading == 1.0
    }
}

/// Per-node snapshots of eta and v on a single grid.
#[derive(Debug, Clone)]
pub struct History {
    pub grid: Grid,
    pub eta: Vec<SpectralField>,
    pub v: Vec<SpectralField>,
}

impl History {
    pub fn new(grid: Grid) -> Self {
        Self { grid, eta: Vec::new(), v: Vec::new() }
    }

    pub fn from_series(eta: Vec<SpectralField>, v: Vec<SpectralField>) -> Result<Self> {
        let grid = eta.first().or(v.first()).map(|f| f.grid).ok_or(Error::InsufficientHistory { available: 0, requested: 0 })?;
        if eta.len() != v.len() {
            return Err(Error::ShapeMismatch { expected: eta.len(), got: v.len() });
        }
        if eta.iter().chain(&v).any(|f| f.grid != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, eta, v })
    }

    pub fn push(&mut self, eta: SpectralField, v: SpectralField) -> Result<()> {
        if eta.grid != self.grid || v.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        self.eta.push(eta);
        self.v.push(v);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub(crate) fn require(&self, t_index: usize) -> Result<()> {
        if t_index >= self.len() {
            return Err(Error::InsufficientHistory { available: self.len(), requested: t_index });
        }
        Ok(())
    }
}
