//! Preconditioned GMRES and CG with relative-residual stopping.

mod cg;
mod gmres;

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::SparseError;

pub use cg::cg;
pub use gmres::{estimate_condition_gmres, gmres, RitzEstimate};

#[derive(Debug, Error)]
pub enum KrylovError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("operator has dimension {operator}, right-hand side has length {rhs}")]
    DimensionMismatch { operator: usize, rhs: usize },
    #[error("operator not positive definite: {inner_product} = {value:e} at iteration {iteration}")]
    Indefinite { inner_product: &'static str, iteration: usize, value: f64 },
    #[error(transparent)]
    Operator(#[from] SparseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gmres,
    Cg,
}

impl FromStr for Method {
    type Err = KrylovError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gmres" => Ok(Method::Gmres),
            "cg" => Ok(Method::Cg),
            _ => Err(KrylovError::InvalidConfig(format!("unknown method `{s}`"))),
        }
    }
}

/// Preconditioning side for GMRES.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KrylovConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub side: Side,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig { method: Method::Gmres, rel_tol: 1e-8, max_iter: 1000, restart: 200, side: Side::Left }
    }
}

impl KrylovConfig {
    pub fn gmres() -> Self {
        Self::default()
    }

    pub fn cg() -> Self {
        KrylovConfig { method: Method::Cg, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), KrylovError> {
        if !(self.rel_tol > 0.0) {
            return Err(KrylovError::InvalidConfig(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.restart == 0 {
            return Err(KrylovError::InvalidConfig("restart must be at least 1".into()));
        }
        Ok(())
    }
}

/// Wall time of one solve, in seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KrylovTiming {
    pub total: f64,
    pub operator: f64,
    pub preconditioner: f64,
}

/// Upper Hessenberg matrix of the last Arnoldi cycle, `(k+1) × k` column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Hessenberg {
    pub k: usize,
    pub entries: Vec<f64>,
}

impl Hessenberg {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[j * (self.k + 1) + i]
    }
}

#[derive(Clone, Debug)]
pub struct KrylovResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Residual norms in the stopping norm; entry 0 is `‖r_0‖`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// `‖b − A x‖ / ‖b − A x_0‖` of the returned iterate.
    pub true_residual_ratio: f64,
    /// The same ratio measured in the stopping norm (preconditioned for left GMRES).
    pub final_stopping_ratio: f64,
    pub cond_estimate: Option<f64>,
    pub ritz_extremes: Option<(f64, f64)>,
    pub hessenberg: Option<Hessenberg>,
    pub timing: KrylovTiming,
}

impl KrylovResult {
    pub fn residual_ratios(&self) -> Vec<f64> {
        let r0 = self.residual_history.first().copied().unwrap_or(0.0);
        self.residual_history.iter().map(|r| if r0 > 0.0 { r / r0 } else { 0.0 }).collect()
    }

    /// Writes `iteration,residual,ratio` rows.
    pub fn write_history_csv<W: Write>(&self, mut w: W) -> Result<(), KrylovError> {
        writeln!(w, "iteration,residual,ratio")?;
        for (k, (r, q)) in self.residual_history.iter().zip(self.residual_ratios()).enumerate() {
            writeln!(w, "{k},{r:e},{q:e}")?;
        }
        Ok(())
    }
}

/// First index whose residual ratio is at or below `tol`.
pub fn first_converged_index(ratios: &[f64], tol: f64) -> Option<usize> {
    ratios.iter().position(|&r| r <= tol)
}

pub fn solve(
    a: &dyn crate::operator::LinearOperator,
    m: &dyn crate::operator::LinearOperator,
    b: &[f64],
    cfg: &KrylovConfig,
) -> Result<KrylovResult, KrylovError> {
    match cfg.method {
        Method::Gmres => gmres(a, m, b, cfg),
        Method::Cg => cg(a, m, b, cfg),
    }
}

fn check_dims(
    a: &dyn crate::operator::LinearOperator,
    m: &dyn crate::operator::LinearOperator,
    b: &[f64],
) -> Result<(), KrylovError> {
    for op in [a.dim(), m.dim()] {
        if op != b.len() {
            return Err(KrylovError::DimensionMismatch { operator: op, rhs: b.len() });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopping_index() {
        assert_eq!(first_converged_index(&[1.0, 1e-3, 9e-9], 1e-8), Some(2));
        assert_eq!(first_converged_index(&[1.0, 1e-3, 2e-8], 1e-8), None);
        assert_eq!(first_converged_index(&[1.0, 1e-8], 1e-8), Some(1));
    }

    #[test]
    fn config_validation() {
        assert!(KrylovConfig::default().validate().is_ok());
        assert!(KrylovConfig { rel_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(KrylovConfig { rel_tol: f64::NAN, ..Default::default() }.validate().is_err());
        assert!(KrylovConfig { restart: 0, ..Default::default() }.validate().is_err());
        assert_eq!("cg".parse::<Method>().unwrap(), Method::Cg);
        assert!("bicg".parse::<Method>().is_err());
    }
}
