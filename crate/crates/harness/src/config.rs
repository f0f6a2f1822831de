//! Study configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gdsw_core::krylov::{KrylovConfig, Method, Side};
use gdsw_core::problems::{BoundaryCondition, Face, Material, NullspaceMode, ProblemKind};
use gdsw_core::sparse::Backend;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    DirichletAll,
    NeumannAll,
    /// Clamped at `x = 0`, free elsewhere.
    ClampedXLower,
}

impl BoundaryKind {
    pub fn to_condition(self) -> BoundaryCondition {
        match self {
            BoundaryKind::DirichletAll => BoundaryCondition::DirichletAll,
            BoundaryKind::NeumannAll => BoundaryCondition::NeumannAll,
            BoundaryKind::ClampedXLower => BoundaryCondition::DirichletFaces(vec![Face::X_LOWER]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhsKind {
    Ones,
    /// Uniform in [-1, 1] from the configured seed.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    /// Global cells per axis; ignored when `decomposition.cells_per_part` is set.
    #[serde(default)]
    pub cells: Vec<usize>,
    /// Mesh width; defaults to `1 / cells[0]`.
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default = "default_bc")]
    pub bc: BoundaryKind,
    #[serde(default)]
    pub material: Material,
    #[serde(default = "default_rhs")]
    pub rhs: RhsKind,
}

fn default_bc() -> BoundaryKind {
    BoundaryKind::DirichletAll
}

fn default_rhs() -> RhsKind {
    RhsKind::Ones
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    /// Sweep points: boxes per axis.
    pub parts: Vec<Vec<usize>>,
    #[serde(default = "default_overlap")]
    pub overlap: usize,
    /// When set, every sweep point uses `parts[a] * cells_per_part` cells on axis `a`.
    #[serde(default)]
    pub cells_per_part: Option<usize>,
}

fn default_overlap() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_nullspace")]
    pub nullspace: NullspaceMode,
}

fn yes() -> bool {
    true
}

fn default_nullspace() -> NullspaceMode {
    NullspaceMode::OneDimensional
}

impl Default for CoarseConfig {
    fn default() -> Self {
        CoarseConfig { enabled: true, nullspace: default_nullspace() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub side: Side,
    /// Number of identical solves; iterations are averaged.
    pub repeats: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let k = KrylovConfig::default();
        SolverConfig {
            method: k.method,
            tol: k.rel_tol,
            max_iter: k.max_iter,
            restart: k.restart,
            side: k.side,
            repeats: 1,
        }
    }
}

impl SolverConfig {
    pub fn krylov(&self) -> KrylovConfig {
        KrylovConfig {
            method: self.method,
            rel_tol: self.tol,
            max_iter: self.max_iter,
            restart: self.restart,
            side: self.side,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Json,
    Both,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "both" => Ok(ReportFormat::Both),
            _ => Err(HarnessError::Config(format!("unknown format `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_stem")]
    pub stem: String,
    #[serde(default = "default_format")]
    pub format: ReportFormat,
    #[serde(default)]
    pub plot_data: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_stem() -> String {
    "study".into()
}

fn default_format() -> ReportFormat {
    ReportFormat::Csv
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir(), stem: default_stem(), format: default_format(), plot_data: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub decomposition: DecompositionConfig,
    #[serde(default)]
    pub coarse: CoarseConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_backends")]
    pub backends: Vec<Backend>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `None` uses the rayon default.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_backends() -> Vec<Backend> {
    vec![Backend::SparseLuOrdered]
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn dim(&self) -> usize {
        match self.problem.kind {
            ProblemKind::Elasticity => 3,
            ProblemKind::Laplace => self.decomposition.parts.first().map_or(self.problem.cells.len(), Vec::len),
        }
    }

    /// Global cells per axis at a sweep point.
    pub fn cells_at(&self, parts: &[usize]) -> Vec<usize> {
        match self.decomposition.cells_per_part {
            Some(c) => parts.iter().map(|p| p * c).collect(),
            None => self.problem.cells.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let parts = &self.decomposition.parts;
        if parts.is_empty() {
            return bad("at least one sweep point is required".into());
        }
        let dim = self.dim();
        if !(1..=3).contains(&dim) {
            return bad(format!("dimension must be 1, 2 or 3, got {dim}"));
        }
        if parts.iter().any(|p| p.len() != dim || p.contains(&0)) {
            return bad(format!("every sweep point needs {dim} positive part counts"));
        }
        if self.decomposition.cells_per_part.is_none() && self.problem.cells.len() != dim {
            return bad(format!("problem.cells needs {dim} entries"));
        }
        if self.decomposition.cells_per_part == Some(0) {
            return bad("cells_per_part must be positive".into());
        }
        if !(self.solver.tol > 0.0) {
            return bad(format!("solver.tol must be positive, got {}", self.solver.tol));
        }
        if self.solver.restart == 0 || self.solver.repeats == 0 {
            return bad("solver.restart and solver.repeats must be at least 1".into());
        }
        if self.backends.is_empty() {
            return bad("at least one backend is required".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }
}

/// `2x2` style part or cell triples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxisCounts(pub Vec<usize>);

impl FromStr for AxisCounts {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split('x')
            .map(|t| t.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map(AxisCounts)
            .map_err(|_| HarnessError::Config(format!("expected counts like `4x4`, got `{s}`")))
    }
}

impl fmt::Display for AxisCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join("x"))
    }
}
