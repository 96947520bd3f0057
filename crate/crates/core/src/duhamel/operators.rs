use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::kernel::KernelPlan;
use super::mesh::{History, TimeMesh};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{diffusion_symbol, divergence, flux, Grid, SpectralField};

/// The two Duhamel terms of the mild formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DuhamelKind {
    /// -chi int (t-s)^{a-1} div E_{a,a}(-(t-s)^a (-Delta)^{theta/2}) (eta G(v)) ds
    B,
    /// kappa int (t-s)^{a-1} E_{a,a}(-(t-s)^a ((-Delta)^{theta/2} + gamma)) eta ds
    T,
}

/// Precomputed per-frequency quadrature weights of one Duhamel operator on a
/// fixed grid and mesh; reusable across Picard iterates.
#[derive(Debug, Clone)]
pub struct DuhamelOperator {
    pub kind: DuhamelKind,
    pub grid: Grid,
    pub mesh: TimeMesh,
    params: ModelParams,
    slot: Vec<usize>,
    plan: KernelPlan,
}

impl DuhamelOperator {
    pub fn new(kind: DuhamelKind, grid: Grid, mesh: &TimeMesh, params: &ModelParams) -> Result<Self> {
        let shift = kind == DuhamelKind::T;
        let mut keys: HashMap<u64, usize> = HashMap::new();
        let mut lambdas = Vec::new();
        let slot = (0..grid.len())
            .map(|i| {
                let k2 = grid.k_norm_sq(i);
                *keys.entry(k2).or_insert_with(|| {
                    lambdas.push(diffusion_symbol(params, (k2 as f64).sqrt() * grid.dxi(), shift));
                    lambdas.len() - 1
                })
            })
            .collect();
        let plan = KernelPlan::new(mesh, params.alpha, lambdas)?;
        Ok(Self { kind, grid, mesh: mesh.clone(), params: *params, slot, plan })
    }

    fn prefactor(&self) -> f64 {
        match self.kind {
            DuhamelKind::B => -self.params.chi,
            DuhamelKind::T => self.params.kappa,
        }
    }

    /// Integrand sources at each node: div(eta G(v)) for B, eta for T.
    pub fn sources(&self, history: &History, upto: usize) -> Result<Vec<SpectralField>> {
        history.require(upto)?;
        match self.kind {
            DuhamelKind::T => Ok(history.eta[..=upto].to_vec()),
            DuhamelKind::B => (0..=upto)
                .into_par_iter()
                .map(|m| divergence(&flux(&history.eta[m], &history.v[m], self.params.theta1)?))
                .collect(),
        }
    }

    /// Operator value at node n from precomputed sources.
    pub fn apply(&self, sources: &[SpectralField], n: usize) -> Result<SpectralField> {
        if n >= self.mesh.len() {
            return Err(Error::InsufficientHistory { available: self.mesh.len(), requested: n });
        }
        if sources.len() <= n {
            return Err(Error::InsufficientHistory { available: sources.len(), requested: n });
        }
        if sources.iter().any(|s| s.grid != self.grid) {
            return Err(Error::GridMismatch);
        }
        let pre = self.prefactor();
        let coeffs = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let w = self.plan.weights(self.slot[i], n);
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, wm) in w.iter().enumerate() {
                    acc += sources[m].coeffs[i] * *wm;
                }
                acc * pre
            })
            .collect();
        Ok(SpectralField { grid: self.grid, coeffs })
    }

    /// Operator values at every node 0..=upto.
    pub fn series(&self, history: &History, upto: usize) -> Result<Vec<SpectralField>> {
        let src = self.sources(history, upto)?;
        (0..=upto).map(|n| self.apply(&src, n)).collect()
    }

    pub fn at(&self, history: &History, t_index: usize) -> Result<SpectralField> {
        let src = self.sources(history, t_index)?;
        self.apply(&src, t_index)
    }
}

fn check_mesh(history: &History, mesh: &TimeMesh, t_index: usize) -> Result<()> {
    history.require(t_index)?;
    if t_index >= mesh.len() {
        return Err(Error::InsufficientHistory { available: mesh.len(), requested: t_index });
    }
    Ok(())
}

/// B_theta(eta, v)(t_n); builds a one-off operator, use [`DuhamelOperator`] for repeated calls.
pub fn duhamel_b(history: &History, mesh: &TimeMesh, params: &ModelParams, t_index: usize) -> Result<SpectralField> {
    check_mesh(history, mesh, t_index)?;
    DuhamelOperator::new(DuhamelKind::B, history.grid, mesh, params)?.at(history, t_index)
}

/// T_theta(eta)(t_n), including the kappa prefactor.
pub fn duhamel_t(history: &History, mesh: &TimeMesh, params: &ModelParams, t_index: usize) -> Result<SpectralField> {
    check_mesh(history, mesh, t_index)?;
    DuhamelOperator::new(DuhamelKind::T, history.grid, mesh, params)?.at(history, t_index)
}
