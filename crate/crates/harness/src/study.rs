//! Sweep driver: one record per (sweep point, backend).

use std::time::Instant;

use gdsw_core::coarse::{build_coarse_basis, NodeMap};
use gdsw_core::krylov::{estimate_condition_gmres, solve, Method};
use gdsw_core::partition::{extend_overlap, partition_system};
use gdsw_core::precond::{GdswPreconditioner, LevelFlags};
use gdsw_core::problems::{
    assemble_elasticity3d, assemble_laplace, nullspace_basis, AssembledSystem, ProblemKind, StructuredGrid,
};
use gdsw_core::sparse::{Backend, BackendConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{AxisCounts, CoarseConfig, ProblemConfig, RhsKind, RunConfig, SolverConfig};
use crate::HarnessError;

/// One row of a study. Times are wall-clock seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n_subdomains: usize,
    /// Average over repeated solves.
    pub krylov_iterations: f64,
    pub max_size_ki: usize,
    pub size_k0: usize,
    /// Preconditioner construction plus Krylov iterations.
    pub solver_time: f64,
    /// Local factorizations plus local substitutions.
    pub subd_solve_time: f64,
    /// Coarse factorization plus coarse substitutions.
    pub coarse_solve_time: f64,
    /// Coarse basis and preconditioner construction.
    pub setup_time: f64,
    pub backend: Backend,
    pub cond_estimate: Option<f64>,
    pub converged: bool,
    pub parts: String,
    pub n_dofs: usize,
    pub error: Option<String>,
}

impl RunRecord {
    fn empty(spec: &PointSpec, n_dofs: usize) -> Self {
        RunRecord {
            n_subdomains: spec.parts.iter().product(),
            krylov_iterations: 0.0,
            max_size_ki: 0,
            size_k0: 0,
            solver_time: 0.0,
            subd_solve_time: 0.0,
            coarse_solve_time: 0.0,
            setup_time: 0.0,
            backend: spec.backend,
            cond_estimate: None,
            converged: false,
            parts: AxisCounts(spec.parts.clone()).to_string(),
            n_dofs,
            error: None,
        }
    }

    /// The record with every wall-clock field zeroed.
    pub fn without_times(&self) -> Self {
        RunRecord { solver_time: 0.0, subd_solve_time: 0.0, coarse_solve_time: 0.0, setup_time: 0.0, ..self.clone() }
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Everything needed to produce one record from an assembled system.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSpec {
    pub parts: Vec<usize>,
    pub overlap: usize,
    pub coarse: CoarseConfig,
    pub solver: SolverConfig,
    pub backend: Backend,
}

pub fn assemble(problem: &ProblemConfig, cells: &[usize]) -> Result<AssembledSystem, HarnessError> {
    let h = problem.h.unwrap_or(1.0 / cells[0] as f64);
    let grid = StructuredGrid::new(cells, h)?;
    let bc = problem.bc.to_condition();
    Ok(match problem.kind {
        ProblemKind::Laplace => assemble_laplace(&grid, &bc)?,
        ProblemKind::Elasticity => assemble_elasticity3d(&grid, problem.material, &bc)?,
    })
}

pub fn right_hand_side(system: &AssembledSystem, rhs: RhsKind, seed: u64) -> Vec<f64> {
    match rhs {
        RhsKind::Ones => system.f.clone(),
        RhsKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..system.num_dofs()).map(|_| rng.gen_range(-1.0..=1.0)).collect()
        }
    }
}

/// Partitions, builds the preconditioner and solves; failures land in `error`.
pub fn run_point(system: &AssembledSystem, rhs: &[f64], spec: &PointSpec) -> RunRecord {
    let mut rec = RunRecord::empty(spec, system.num_dofs());
    if let Err(e) = try_point(system, rhs, spec, &mut rec) {
        rec.converged = false;
        rec.error = Some(e.to_string());
    }
    rec
}

fn try_point(system: &AssembledSystem, rhs: &[f64], spec: &PointSpec, rec: &mut RunRecord) -> Result<(), HarnessError> {
    let k = &system.k;
    let owned = partition_system(system, &spec.parts)?;
    let d = extend_overlap(k, &owned, spec.overlap)?;
    rec.max_size_ki = d.max_overlapping_size();
    let backend = BackendConfig::new(spec.backend);

    let start = Instant::now();
    let basis = if spec.coarse.enabled {
        let nullspace = nullspace_basis(system, spec.coarse.nullspace)?;
        let nodes = NodeMap::Nodes(&system.node_of_dof);
        Some(build_coarse_basis(k, &d, nodes, system.grid.dim(), &nullspace, &backend)?)
    } else {
        None
    };
    let basis = basis.filter(|b| b.n_coarse() > 0);
    let flags = if basis.is_some() { LevelFlags::TWO_LEVEL } else { LevelFlags::ONE_LEVEL };
    let m = GdswPreconditioner::setup(k, &d, basis.as_ref(), &backend, flags)?;
    let setup_time = start.elapsed().as_secs_f64();
    rec.setup_time = setup_time;
    rec.size_k0 = m.coarse_size();

    let kcfg = spec.solver.krylov();
    let repeats = spec.solver.repeats;
    let (mut iterations, mut krylov_time) = (0usize, 0.0);
    let mut converged = true;
    let mut cond = None;
    for _ in 0..repeats {
        let result = solve(k, &m, rhs, &kcfg)?;
        iterations += result.iterations;
        krylov_time += result.timing.total;
        converged &= result.converged;
        cond = match kcfg.method {
            Method::Cg => result.cond_estimate,
            Method::Gmres => estimate_condition_gmres(&result).map(|r| r.ratio()),
        };
    }
    let per = repeats as f64;
    let t = m.timing();
    rec.krylov_iterations = iterations as f64 / per;
    rec.solver_time = setup_time + krylov_time / per;
    rec.subd_solve_time = t.local_factor + t.apply_local / per;
    rec.coarse_solve_time = t.coarse_factor + t.apply_coarse / per;
    rec.cond_estimate = cond.filter(|c| c.is_finite());
    rec.converged = converged;
    Ok(())
}

/// Runs every sweep point against every backend, in configuration order.
///
/// Only configuration errors are returned; a failing stage is recorded in its row.
pub fn run_study(cfg: &RunConfig) -> Result<Vec<RunRecord>, HarnessError> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| sweep(cfg)),
        None => sweep(cfg),
    }
}

fn sweep(cfg: &RunConfig) -> Result<Vec<RunRecord>, HarnessError> {
    let mut records = Vec::new();
    for parts in &cfg.decomposition.parts {
        let cells = cfg.cells_at(parts);
        let system = match assemble(&cfg.problem, &cells) {
            Ok(s) => s,
            Err(e) => {
                for &backend in &cfg.backends {
                    let spec = point(cfg, parts, backend);
                    let mut rec = RunRecord::empty(&spec, 0);
                    rec.error = Some(e.to_string());
                    records.push(rec);
                }
                continue;
            }
        };
        let rhs = right_hand_side(&system, cfg.problem.rhs, cfg.seed);
        for &backend in &cfg.backends {
            records.push(run_point(&system, &rhs, &point(cfg, parts, backend)));
        }
    }
    Ok(records)
}

fn point(cfg: &RunConfig, parts: &[usize], backend: Backend) -> PointSpec {
    PointSpec {
        parts: parts.to_vec(),
        overlap: cfg.decomposition.overlap,
        coarse: cfg.coarse,
        solver: cfg.solver,
        backend,
    }
}
