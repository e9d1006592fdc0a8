//! Finite element exterior calculus toolkit for the Hodge–Laplace problem.
//!
//! The crate provides exact polynomial differential-form algebra on simplices
//! in general dimension, the local shape spaces and unisolvence machinery of
//! the primal nonconforming scheme, 2D simplicial meshes, global Whitney-form
//! spaces with discrete harmonic forms, the locally supported nonconforming
//! basis for `H(rot) ∩ H0(div)`, and solvers for both the primal scheme and
//! the classical mixed scheme used as a cross-validation oracle.

pub mod exterior;
pub mod fespace;
pub mod linalg;
pub mod local;
pub mod mesh;
pub mod quadrature;
pub mod report;
pub mod sampling;
pub mod solver;
pub mod whitney;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degree out of range: k={k} with n={n}")]
    DegreeOutOfRange { k: isize, n: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate simplex (measure {0:.3e})")]
    DegenerateSimplex(f64),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("inconsistent constraints: residual {residual:.3e} exceeds {tolerance:.3e}")]
    InconsistentConstraints { residual: f64, tolerance: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("patch anomaly: {0}")]
    PatchAnomaly(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("unsupported quadrature degree {0}")]
    UnsupportedQuadrature(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
