//! Empirical check of the two-level condition number bound
//! `κ ≤ C (1 + H/δ)(1 + log(H/h))` on Laplace problems.

use gdsw_core::krylov::Method;
use gdsw_core::problems::{NullspaceMode, ProblemKind};
use serde::{Deserialize, Serialize};

use crate::config::{BoundaryKind, RunConfig};
use crate::study::{assemble, right_hand_side, run_point, PointSpec};
use crate::HarnessError;

/// Overlap layers of the fixed-partition sweep.
pub const OVERLAP_SWEEP: [usize; 3] = [1, 2, 3];

/// Allowed growth of the normalized ratio over the subdomain sweep.
pub const MAX_GROWTH: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSweep {
    /// Fixed `H/h`, increasing subdomain count.
    Subdomains,
    /// Fixed partition, varying overlap.
    Overlap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub sweep: BoundSweep,
    pub parts: Vec<usize>,
    pub overlap: usize,
    /// `H/h`.
    pub h_ratio: f64,
    /// `H/δ`.
    pub delta_ratio: f64,
    pub iterations: f64,
    pub cond_estimate: Option<f64>,
    /// `κ / ((1 + H/δ)(1 + log(H/h)))`.
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub points: Vec<BoundPoint>,
    /// Largest subdomain-sweep ratio relative to its first point.
    pub growth: Option<f64>,
    pub violation: bool,
}

impl BoundReport {
    pub fn sweep(&self, which: BoundSweep) -> impl Iterator<Item = &BoundPoint> {
        self.points.iter().filter(move |p| p.sweep == which)
    }
}

pub fn normalized_ratio(kappa: f64, h_ratio: f64, delta_ratio: f64) -> f64 {
    kappa / ((1.0 + delta_ratio) * (1.0 + h_ratio.ln()))
}

fn check_spd(cfg: &RunConfig) -> Result<(), HarnessError> {
    let reject = |m: &str| Err(HarnessError::Config(format!("bound check needs {m}")));
    if cfg.problem.kind != ProblemKind::Laplace {
        return reject("a Laplace problem");
    }
    if cfg.solver.method != Method::Cg {
        return reject("the CG method");
    }
    if cfg.problem.bc == BoundaryKind::NeumannAll {
        return reject("a nonsingular (Dirichlet) problem");
    }
    if cfg.coarse.enabled && cfg.coarse.nullspace == NullspaceMode::TranslationsRotations {
        return reject("a constants or translations coarse space");
    }
    Ok(())
}

/// Runs the subdomain sweep of the configuration and an overlap sweep on its first partition.
///
/// Uses the first configured backend.
pub fn verify_bound(cfg: &RunConfig) -> Result<BoundReport, HarnessError> {
    cfg.validate()?;
    check_spd(cfg)?;
    let run = || {
        let mut points: Vec<BoundPoint> = Vec::new();
        for parts in &cfg.decomposition.parts {
            points.push(bound_point(cfg, BoundSweep::Subdomains, parts, cfg.decomposition.overlap)?);
        }
        let first = &cfg.decomposition.parts[0];
        for delta in OVERLAP_SWEEP {
            points.push(bound_point(cfg, BoundSweep::Overlap, first, delta)?);
        }
        let ratios: Option<Vec<f64>> =
            points.iter().filter(|p| p.sweep == BoundSweep::Subdomains).map(|p| p.ratio).collect();
        let growth = ratios.map(|r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / r[0]);
        Ok(BoundReport { violation: growth.is_none_or(|g| g > MAX_GROWTH), growth, points })
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(run),
        None => run(),
    }
}

fn bound_point(
    cfg: &RunConfig,
    sweep: BoundSweep,
    parts: &[usize],
    overlap: usize,
) -> Result<BoundPoint, HarnessError> {
    let cells = cfg.cells_at(parts);
    let h_ratio = cells.iter().zip(parts).map(|(&c, &p)| c as f64 / p as f64).fold(0.0, f64::max);
    let delta_ratio = h_ratio / overlap.max(1) as f64;
    let system = assemble(&cfg.problem, &cells)?;
    let rhs = right_hand_side(&system, cfg.problem.rhs, cfg.seed);
    let spec =
        PointSpec { parts: parts.to_vec(), overlap, coarse: cfg.coarse, solver: cfg.solver, backend: cfg.backends[0] };
    let rec = run_point(&system, &rhs, &spec);
    Ok(BoundPoint {
        sweep,
        parts: parts.to_vec(),
        overlap,
        h_ratio,
        delta_ratio,
        iterations: rec.krylov_iterations,
        cond_estimate: rec.cond_estimate,
        ratio: rec.cond_estimate.map(|k| normalized_ratio(k, h_ratio, delta_ratio)),
        error: rec.error,
    })
}
