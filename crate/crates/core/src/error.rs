use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {z} lies outside the open unit disk")]
    Domain { z: Complex64 },

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("function is not a self-map of the disk (boundary supremum {supnorm})")]
    NotSelfMap { supnorm: f64 },

    #[error("tolerance {tol} not reached before the grid cap of {cap} points (last change {change})")]
    ToleranceNotReached { tol: f64, cap: usize, change: f64 },

    #[error("radial integral does not settle (partial value {partial}, last-panel share {share})")]
    Divergent { partial: f64, share: f64 },

    #[error("supremum estimate grows at every boundary level (last value {estimate})")]
    Unbounded { estimate: f64 },

    #[error("ladder is inconclusive")]
    Inconclusive,
}

pub type Result<T> = std::result::Result<T, Error>;
