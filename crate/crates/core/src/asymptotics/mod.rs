//! Large-`|λ|` expansions of resolvent traces along rays, log-term detection,
//! and small-`t` heat-trace and ζ-function summaries.

pub mod expansion;
pub mod heat;
pub mod lsq;
pub mod ray;

use thiserror::Error;

use crate::ode::OdeError;

pub use expansion::{
    compare_domains, detect_logs, fit_expansion, fit_model, residual_decay, CoefficientDelta,
    DomainComparison, ExpansionModel, FitOptions, FitResult, FitTerm, ResidualDecay,
};
pub use heat::{fit_heat, heat_trace, zeta_report, HeatFit, HeatSample, HeatTerm, PoleEntry, ProbeTerm, ZetaValue, PoleStatus, ZetaReport};
pub use ray::{admissible, ray_grid, sample_ray, RayFailure, RayPoint, RaySamples};

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("ray at angle {theta0} is not inside a sector of minimal growth")]
    SectorNotAdmissible { theta0: f64 },
    #[error("fit is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("log detection inconclusive: residual ratio {ratio:.3} straddles the threshold")]
    Inconclusive { ratio: f64 },
    #[error("{have} samples cannot determine {need} coefficients")]
    TooFewSamples { have: usize, need: usize },
    #[error("eigenvalue tail dominates ({tail:e} vs {head:e})")]
    TailDominates { tail: f64, head: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
}
