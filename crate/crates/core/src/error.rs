//! Error types shared by the library modules.

use thiserror::Error;

/// A named invariant of a scenario input was violated.
#[derive(Debug, Clone, Error)]
#[error("invalid {what}: {message}")]
pub struct ValidationError {
    pub what: &'static str,
    pub message: String,
}

impl ValidationError {
    pub fn new(what: &'static str, message: impl Into<String>) -> Self {
        ValidationError {
            what,
            message: message.into(),
        }
    }
}

/// Failures of the geometric kernels.
#[derive(Debug, Clone, Error)]
pub enum GeomError {
    #[error("Newton projection onto the surface did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("ray left the bounding box without crossing the surface (broken domain invariant?)")]
    NoHit,
    #[error("direction is not tangent to the surface (|d.n| = {0:.3e})")]
    NotTangent(f64),
    #[error("contact/stratum order not resolved within smoothness order {0}")]
    ExceedsSmoothness(u32),
}

/// Failures while advancing a bicharacteristic.
#[derive(Debug, Clone, Error)]
pub enum TraceError {
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("boundary point is not hyperbolic for the requested branch")]
    NotHyperbolic,
    #[error("phase point violates the characteristic relation by {0:.3e} (relative)")]
    OffShell(f64),
}

/// Failures of the grid solver.
#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error("time step {dt:.3e} violates the CFL bound {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("conjugate gradient stalled: residual {residual:.3e} after {iters} iterations")]
    LinearSolveFailure { residual: f64, iters: usize },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// Failures of the decay-fitting routines.
#[derive(Debug, Clone, Error)]
pub enum FitError {
    #[error("degenerate energy series: {0}")]
    DegenerateSeries(String),
}
