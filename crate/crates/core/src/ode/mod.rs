//! Numerical engine: series at the tip, stiff-free propagation in `log x`,
//! resolvent kernels, traces and eigenvalues.

pub mod eigen;
pub mod frobenius;
pub mod integrator;
pub mod kernel;
pub mod quadrature;
pub mod system;
pub mod trace;

use thiserror::Error;

use crate::domain::DomainError;
use crate::indicial::IndicialError;
use crate::operator::OperatorError;
use crate::theta::ThetaError;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("Frobenius series does not reach tolerance on any matching radius")]
    SeriesDivergence,
    #[error("resonant recursion exceeded log depth {depth} at order {order}")]
    ResonanceOverflow { order: usize, depth: usize },
    #[error("λ = {lambda} is within tolerance of an eigenvalue")]
    NearEigenvalue { lambda: num_complex::Complex64 },
    #[error("quadrature did not converge (error estimate {estimate:e})")]
    QuadratureNotConverged { estimate: f64 },
    #[error("contour passes through a zero of the characteristic determinant")]
    ContourThroughZero,
    #[error("eigenvalue tail dominates the trace ({tail:e} vs {head:e})")]
    TailDominates { tail: f64, head: f64 },
    #[error("{tip} tip-admissible solutions but {boundary} boundary conditions")]
    NotSquare { tip: usize, boundary: usize },
    #[error("domain basis has {got} elements, operator has {expected}")]
    DomainMismatch { expected: usize, got: usize },
    #[error("series cannot be matched to the θ tail of a domain element")]
    TailMismatch,
    #[error("unsupported resolvent power {0}")]
    UnsupportedPower(usize),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Indicial(#[from] IndicialError),
}

/// Tolerances and discretization controls of the engine.
#[derive(Clone, Debug, PartialEq)]
pub struct Numerics {
    /// Largest radius at which series are matched to the integrator.
    pub x_match: f64,
    /// Number of Frobenius orders kept.
    pub series_order: usize,
    /// Relative tolerance of series tails and of the integrator.
    pub rel_tol: f64,
    /// Below this radius integrals are closed by a power-law fit.
    pub x_cut: f64,
    pub max_log_depth: usize,
    pub quad_points: usize,
    /// Bulk panel width cap in units of `|λ|^{-1/m}`.
    pub panel_scale: f64,
    /// Bulk panel width is also capped by `1/min_panels`.
    pub min_panels: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self { x_match: 0.1, series_order: 40, rel_tol: 1e-12, x_cut: 1e-8, max_log_depth: 12, quad_points: 16, panel_scale: 4.0, min_panels: 8 }
    }
}
