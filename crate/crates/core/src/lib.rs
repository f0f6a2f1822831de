//! Algebraic two-level GDSW overlapping Schwarz preconditioning.

pub mod coarse;
pub mod krylov;
pub mod operator;
pub mod partition;
pub mod precond;
pub mod problems;
pub mod sparse;
pub mod timing;
