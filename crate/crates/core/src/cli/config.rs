use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::besov::DyadicCutoff;
use crate::duhamel::TimeMesh;
use crate::error::{Error, Result};
use crate::estimates::{DecayFamily, DecaySpec};
use crate::model::{GammaSign, ModelParams};
use crate::spectral::{Grid, MlFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MlEval,
    MainardiMoments,
    DecayHeat,
    DecayMl,
    Yamazaki,
    Product,
    Bilinear,
    LinearOp,
    Solve,
    Selfsim,
    Uniqueness,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Self::MlEval,
        Self::MainardiMoments,
        Self::DecayHeat,
        Self::DecayMl,
        Self::Yamazaki,
        Self::Product,
        Self::Bilinear,
        Self::LinearOp,
        Self::Solve,
        Self::Selfsim,
        Self::Uniqueness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MlEval => "ml-eval",
            Self::MainardiMoments => "mainardi-moments",
            Self::DecayHeat => "decay-heat",
            Self::DecayMl => "decay-ml",
            Self::Yamazaki => "yamazaki",
            Self::Product => "product",
            Self::Bilinear => "bilinear",
            Self::LinearOp => "linear-op",
            Self::Solve => "solve",
            Self::Selfsim => "selfsim",
            Self::Uniqueness => "uniqueness",
        }
    }

    /// Module doing the work, used to label runtime errors.
    pub fn module(self) -> &'static str {
        match self {
            Self::MlEval | Self::MainardiMoments => "specfun",
            Self::DecayHeat | Self::DecayMl | Self::Product | Self::Bilinear | Self::LinearOp => "estimates",
            Self::Yamazaki => "duhamel",
            Self::Solve | Self::Selfsim | Self::Uniqueness => "wellposed",
        }
    }

    /// Experiments whose claims live inside the (p, q, theta, theta1) window.
    pub fn needs_window(self) -> bool {
        matches!(self, Self::Product | Self::Bilinear | Self::LinearOp | Self::Solve | Self::Selfsim | Self::Uniqueness)
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::ParameterDomain(format!("unknown experiment `{s}`")))
    }
}

/// Periodic box [-L, L)^dim with n points per axis; L given directly or as a multiple of pi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: Option<f64>,
    pub half_width_pi: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 256, half_width: None, half_width_pi: None }
    }
}

impl GridSpec {
    pub fn length(&self) -> f64 {
        match (self.half_width, self.half_width_pi) {
            (Some(l), _) => l,
            (None, Some(m)) => m * std::f64::consts::PI,
            (None, None) => std::f64::consts::PI,
        }
    }

    pub fn grid(&self, dim: usize) -> Result<Grid> {
        Grid::new(dim, self.n, self.length())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSpec {
    pub t_final: f64,
    pub steps: usize,
    /// 1 gives a uniform mesh; r > 1 clusters nodes as t_k = T (k/N)^r.
    pub grading: f64,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { t_final: 2.0, steps: 64, grading: 1.0 }
    }
}

impl MeshSpec {
    pub fn mesh(&self) -> Result<TimeMesh> {
        TimeMesh::graded(self.t_final, self.steps, self.grading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BesovBlock {
    pub p: f64,
    pub q: f64,
}

impl Default for BesovBlock {
    fn default() -> Self {
        Self { p: 1.5, q: 1.5 }
    }
}

/// Regularity indices derived from the model and (p, q); never read from file.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DerivedExponents {
    pub s_eta: f64,
    pub s_v: f64,
    pub s_product: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleBlock {
    pub members: usize,
    pub k_lo: f64,
    pub k_hi: f64,
    pub slope: f64,
}

impl Default for EnsembleBlock {
    fn default() -> Self {
        Self { members: 50, k_lo: 8.0, k_hi: 30.0, slope: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayBlock {
    pub family: MlFamily,
    pub zeta: f64,
    pub s1: f64,
    pub s2: f64,
    pub p1: f64,
    pub p2: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub points_per_decade: usize,
}

impl Default for DecayBlock {
    fn default() -> Self {
        Self {
            family: MlFamily::EAlpha,
            zeta: 0.0,
            s1: 0.0,
            s2: 0.5,
            p1: 2.0,
            p2: 2.0,
            t_min: 1e-6,
            t_max: 1e8,
            points_per_decade: 12,
        }
    }
}

impl DecayBlock {
    pub fn spec(&self, model: &ModelParams) -> DecaySpec {
        DecaySpec {
            zeta: self.zeta,
            theta: model.theta,
            alpha: model.alpha,
            s1: self.s1,
            s2: self.s2,
            p1: self.p1,
            p2: self.p2,
            t_min: self.t_min,
            t_max: self.t_max,
            points_per_decade: self.points_per_decade,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct YamazakiBlock {
    pub p: f64,
    pub s: f64,
    pub zeta: f64,
    pub t_finals: Vec<f64>,
    pub points_per_decade: usize,
    /// Relative change allowed between the last two truncations.
    pub tol: f64,
    pub k_lo: f64,
    pub k_hi: f64,
    pub slope: f64,
}

impl Default for YamazakiBlock {
    fn default() -> Self {
        Self { p: 1.5, s: 0.3, zeta: 1.0, t_finals: vec![1e2, 1e3, 1e4], points_per_decade: 12, tol: 1e-2, k_lo: 1.0, k_hi: 60.0, slope: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyBlock {
    pub t_values: Vec<f64>,
    /// Allowed (max - min) / min across t_values.
    pub tol_time: f64,
    /// Allowed relative change under one grid refinement (n -> 2n, same L).
    pub tol_refine: f64,
    pub refine: bool,
    pub rho1: f64,
    pub rho2: f64,
}

impl Default for StudyBlock {
    fn default() -> Self {
        Self { t_values: vec![1.0, 2.0, 4.0, 8.0], tol_time: 0.15, tol_refine: 0.10, refine: true, rho1: 0.0, rho2: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    /// First member of the band-limited ensemble for eta and for v.
    Ensemble,
    Zero,
    /// Gaussian bumps exp(-|x|^2 / 2) (eta) and exp(-|x|^2) (v).
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveBlock {
    pub data: DataKind,
    /// Absolute scale of the data (unit max coefficient before scaling).
    pub amplitude: Option<f64>,
    /// Scale as a fraction of the admissible amplitude; used when `amplitude` is unset.
    pub amplitude_fraction: f64,
    pub eps_fraction: f64,
    pub max_iters: usize,
    pub tol_rel: f64,
    pub starts: usize,
}

impl Default for SolveBlock {
    fn default() -> Self {
        Self { data: DataKind::Ensemble, amplitude: None, amplitude_fraction: 0.5, eps_fraction: 0.9, max_iters: 60, tol_rel: 1e-10, starts: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfsimBlock {
    /// Number of grids; each doubles n and L of the previous one.
    pub levels: usize,
    pub k_in: f64,
    /// Outer cutoff as a fraction of the dealiasing edge.
    pub outer_fraction: f64,
    pub amplitude: f64,
    pub t_final: f64,
    pub steps: usize,
    pub tol_rel: f64,
    pub max_iters: usize,
}

impl Default for SelfsimBlock {
    fn default() -> Self {
        Self { levels: 3, k_in: 2.0, outer_fraction: 0.6, amplitude: 1e-2, t_final: 2.0, steps: 32, tol_rel: 1e-11, max_iters: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlEvalBlock {
    pub tol: f64,
    /// Extra (alpha, beta, x) points evaluated at E_{alpha,beta}(-x).
    pub points: Vec<[f64; 3]>,
}

impl Default for MlEvalBlock {
    fn default() -> Self {
        Self { tol: 1e-10, points: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MainardiBlock {
    pub alphas: Vec<f64>,
    pub orders: Vec<f64>,
    pub laplace_alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub tol: f64,
}

impl Default for MainardiBlock {
    fn default() -> Self {
        Self { alphas: vec![0.4, 0.6], orders: vec![0.0, 0.5, 1.0, 2.0], laplace_alphas: vec![0.4, 0.7], lambdas: vec![0.1, 1.0, 10.0], tol: 1e-8 }
    }
}

/// On-disk schema; every block is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    experiment: Option<Experiment>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    model: ModelParams,
    grid: GridSpec,
    mesh: MeshSpec,
    besov: BesovBlock,
    ensemble: EnsembleBlock,
    decay: DecayBlock,
    yamazaki: YamazakiBlock,
    study: StudyBlock,
    solve: SolveBlock,
    selfsim: SelfsimBlock,
    ml_eval: MlEvalBlock,
    mainardi: MainardiBlock,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub model: ModelParams,
    pub grid: GridSpec,
    pub mesh: MeshSpec,
    pub besov: BesovBlock,
    pub derived: DerivedExponents,
    pub ensemble: EnsembleBlock,
    pub decay: DecayBlock,
    pub yamazaki: YamazakiBlock,
    pub study: StudyBlock,
    pub solve: SolveBlock,
    pub selfsim: SelfsimBlock,
    pub ml_eval: MlEvalBlock,
    pub mainardi: MainardiBlock,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub gamma_sign: Option<GammaSign>,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    load_config_with(path, &Overrides::default())
}

/// Reads a TOML (or, for `.json` files, JSON) config, applies the overrides and
/// validates it; every violated condition is listed in one `Error::Config`.
pub fn load_config_with(path: &Path, ov: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config { line: 0, message: format!("{}: {e}", path.display()) })?;
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    parse_config(&text, json, ov)
}

pub fn parse_config(text: &str, json: bool, ov: &Overrides) -> Result<RunConfig> {
    let file: ConfigFile = if json {
        serde_json::from_str(text).map_err(|e| Error::Config { line: e.line(), message: e.to_string() })?
    } else {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_at(text, s.start)).unwrap_or(0);
            Error::Config { line, message: e.message().to_string() }
        })?
    };
    let experiment = ov
        .experiment
        .or(file.experiment)
        .ok_or(Error::Config { line: 0, message: "no experiment given in the file or on the command line".into() })?;
    let mut model = file.model;
    if let Some(s) = ov.gamma_sign {
        model.gamma_sign = s;
    }
    let cfg = RunConfig {
        experiment,
        output_dir: ov.output_dir.clone().or(file.output_dir).unwrap_or_else(|| PathBuf::from("out")),
        seed: ov.seed.or(file.seed).unwrap_or(7),
        derived: DerivedExponents {
            s_eta: model.s_eta(file.besov.p),
            s_v: model.s_v(file.besov.q),
            s_product: model.s_product(file.besov.p),
        },
        model,
        grid: file.grid,
        mesh: file.mesh,
        besov: file.besov,
        ensemble: file.ensemble,
        decay: file.decay,
        yamazaki: file.yamazaki,
        study: file.study,
        solve: file.solve,
        selfsim: file.selfsim,
        ml_eval: file.ml_eval,
        mainardi: file.mainardi,
    };
    let problems = validate(&cfg);
    if let Some((key, _)) = problems.first() {
        let line = key_line(text, key);
        let message = problems.iter().map(|(_, m)| m.as_str()).collect::<Vec<_>>().join("; ");
        return Err(Error::Config { line, message });
    }
    Ok(cfg)
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of `section.key` (or `[section]`, or the bare key); 0 when absent.
fn key_line(text: &str, path: &str) -> usize {
    let (section, key) = path.rsplit_once('.').unwrap_or(("", path));
    let mut current = String::new();
    let mut section_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                section_line = i + 1;
            }
            continue;
        }
        let k = line.split(['=', ':']).next().unwrap_or("").trim().trim_matches('"');
        if k == key && (current == section || section.is_empty()) {
            return i + 1;
        }
    }
    section_line
}

fn validate(cfg: &RunConfig) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut push = |key: &str, msg: String| out.push((key.to_string(), msg));
    let m = &cfg.model;
    if let Err(e) = m.validate() {
        push("model.alpha", e.to_string());
        return out;
    }
    match cfg.grid.grid(m.dim) {
        Ok(g) => {
            if let Err(e) = DyadicCutoff::new(g) {
                push("grid.n", e.to_string());
            }
        }
        Err(e) => push("grid.n", e.to_string()),
    }
    if cfg.grid.half_width.is_some() && cfg.grid.half_width_pi.is_some() {
        push("grid.half_width", "give either half_width or half_width_pi, not both".into());
    }
    if let Err(e) = cfg.mesh.mesh() {
        push("mesh.t_final", e.to_string());
    }
    if cfg.experiment.needs_window() {
        for v in crate::model::window_violations(m.dim, m.theta, m.theta1, cfg.besov.p, cfg.besov.q) {
            let key = if v.starts_with("theta") { "model.theta" } else { "besov.p" };
            push(key, format!("hypothesis violated: {v}"));
        }
    }
    let ens = &cfg.ensemble;
    if matches!(cfg.experiment, Experiment::Product | Experiment::Bilinear | Experiment::LinearOp)
        || (matches!(cfg.experiment, Experiment::Solve | Experiment::Uniqueness) && cfg.solve.data == DataKind::Ensemble)
    {
        if ens.members == 0 {
            push("ensemble.members", "ensemble needs at least one member".into());
        }
        if !(ens.k_lo > 0.0 && ens.k_hi >= ens.k_lo) {
            push("ensemble.k_lo", format!("band needs 0 < k_lo <= k_hi, got [{}, {}]", ens.k_lo, ens.k_hi));
        }
    }
    match cfg.experiment {
        Experiment::DecayHeat | Experiment::DecayMl => {
            let d = &cfg.decay;
            let fam = if cfg.experiment == Experiment::DecayHeat { DecayFamily::Heat } else { DecayFamily::Ml(d.family) };
            if let Err(e) = d.spec(m).check(m.dim, fam) {
                push("decay.zeta", e.to_string());
            }
            if !(d.t_min > 0.0 && d.t_max > d.t_min) {
                push("decay.t_min", format!("need 0 < t_min < t_max, got [{}, {}]", d.t_min, d.t_max));
            }
            if d.points_per_decade < 2 {
                push("decay.points_per_decade", "need at least 2 points per decade".into());
            }
        }
        Experiment::Yamazaki => {
            let y = &cfg.yamazaki;
            if y.t_finals.len() < 2 || y.t_finals.windows(2).any(|w| !(w[1] > w[0])) || y.t_finals[0] <= 0.0 {
                push("yamazaki.t_finals", "need at least two increasing positive final times".into());
            }
            if !(y.p >= 1.0) {
                push("yamazaki.p", format!("need p >= 1, got {}", y.p));
            }
            if !(y.zeta >= 0.0 && y.zeta < m.theta + 2.0) {
                push("yamazaki.zeta", format!("need 0 <= zeta < theta + 2 for an integrable tail, got {}", y.zeta));
            }
        }
        Experiment::Bilinear | Experiment::LinearOp => {
            if cfg.study.t_values.is_empty() || cfg.study.t_values.iter().any(|t| !(*t > 0.0)) {
                push("study.t_values", "need at least one positive final time".into());
            }
        }
        Experiment::Solve | Experiment::Uniqueness => {
            let s = &cfg.solve;
            if !(s.eps_fraction > 0.0 && s.eps_fraction < 1.0) {
                push("solve.eps_fraction", format!("eps fraction must lie in (0, 1), got {}", s.eps_fraction));
            }
            if s.amplitude.is_none() && !(s.amplitude_fraction > 0.0) {
                push("solve.amplitude_fraction", "amplitude fraction must be positive".into());
            }
            if cfg.experiment == Experiment::Uniqueness && s.starts < 2 {
                push("solve.starts", "uniqueness needs at least 2 starts".into());
            }
        }
        Experiment::Selfsim => {
            if m.gamma != 0.0 {
                push("model.gamma", format!("gamma = {} breaks the scaling invariance; selfsim needs gamma = 0", m.gamma));
            }
            if cfg.selfsim.levels < 3 {
                push("selfsim.levels", "need at least 3 grid levels (two refinements)".into());
            }
            if !(cfg.selfsim.outer_fraction > 0.0 && cfg.selfsim.outer_fraction <= 1.0) {
                push("selfsim.outer_fraction", "outer fraction must lie in (0, 1]".into());
            }
        }
        Experiment::MlEval | Experiment::MainardiMoments | Experiment::Product => {}
    }
    out
}
