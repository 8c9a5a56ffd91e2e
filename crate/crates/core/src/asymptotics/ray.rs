use num_complex::Complex64;

use super::AsymptoticsError;
use crate::ode::system::Problem;
use crate::ode::trace::{green_trace, TraceSample};
use crate::ode::OdeError;
use crate::operator::{ConeOperator, Sector};
use crate::poly::Polynomial;

#[derive(Clone, Debug, PartialEq)]
pub struct RayPoint {
    pub r: f64,
    pub sample: TraceSample,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayFailure {
    pub r: f64,
    pub message: String,
}

/// Traces at `λ = r e^{iθ₀}` on a geometric grid of `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct RaySamples {
    pub theta0: f64,
    pub ell: usize,
    /// Order `m` of the operator (fixes the exponent lattice).
    pub order: usize,
    pub phi: Polynomial<f64>,
    pub domain_label: String,
    /// Sorted by increasing `r`.
    pub samples: Vec<RayPoint>,
    pub failures: Vec<RayFailure>,
}

impl RaySamples {
    /// Assembles samples from per-`r` outcomes (in any order).
    pub fn collect(
        theta0: f64,
        ell: usize,
        order: usize,
        phi: Polynomial<f64>,
        domain_label: impl Into<String>,
        outcomes: Vec<(f64, Result<TraceSample, OdeError>)>,
    ) -> Self {
        let mut samples = Vec::new();
        let mut failures = Vec::new();
        for (r, o) in outcomes {
            match o {
                Ok(sample) => samples.push(RayPoint { r, sample }),
                Err(e) => failures.push(RayFailure { r, message: e.to_string() }),
            }
        }
        samples.sort_by(|a, b| a.r.partial_cmp(&b.r).unwrap());
        failures.sort_by(|a, b| a.r.partial_cmp(&b.r).unwrap());
        Self { theta0, ell, order, phi, domain_label: domain_label.into(), samples, failures }
    }

    /// Samples of a known function of `r` (for tests and calibration).
    pub fn synthetic(theta0: f64, ell: usize, order: usize, rs: &[f64], f: impl Fn(f64) -> Complex64) -> Self {
        let outcomes = rs
            .iter()
            .map(|&r| {
                let sample = TraceSample {
                    lambda: Complex64::from_polar(r, theta0),
                    ell,
                    value: f(r),
                    method: crate::ode::trace::TraceMethod::Green,
                    error_estimate: 0.0,
                };
                (r, Ok(sample))
            })
            .collect();
        Self::collect(theta0, ell, order, Polynomial::constant(Complex64::new(1.0, 0.0)), "synthetic", outcomes)
    }

    pub fn radii(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.r).collect()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.samples.iter().map(|p| p.sample.value).collect()
    }

    /// Same samples with values replaced by `f(r, value)`.
    pub fn map_values(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for p in &mut out.samples {
            p.sample.value = f(p.r, p.sample.value);
        }
        out
    }

    /// Samples with `lo ≤ r ≤ hi`.
    pub fn restricted(&self, lo: f64, hi: f64) -> Self {
        let mut out = self.clone();
        out.samples.retain(|p| p.r >= lo && p.r <= hi);
        out
    }
}

pub fn ray_grid(r_min: f64, r_max: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![r_min];
    }
    let ratio = (r_max / r_min).ln() / (count - 1) as f64;
    (0..count).map(|i| r_min * (ratio * i as f64).exp()).collect()
}

/// The sector must avoid the principal symbol and contain its own axis.
pub fn admissible(op: &ConeOperator<f64>, sector: &Sector<f64>) -> Result<(), AsymptoticsError> {
    if op.check_parameter_ellipticity(sector) {
        Ok(())
    } else {
        Err(AsymptoticsError::SectorNotAdmissible { theta0: sector.theta0 })
    }
}

/// Green traces along the axis of `sector`, sequentially. Failures at
/// individual `λ` are recorded rather than returned.
pub fn sample_ray(
    problem: &Problem,
    ell: usize,
    phi: &Polynomial<f64>,
    sector: &Sector<f64>,
    r_min: f64,
    r_max: f64,
    count: usize,
) -> Result<RaySamples, AsymptoticsError> {
    admissible(&problem.op, sector)?;
    let outcomes = ray_grid(r_min, r_max, count)
        .into_iter()
        .map(|r| (r, green_trace(problem, Complex64::from_polar(r, sector.theta0), ell, phi)))
        .collect();
    Ok(RaySamples::collect(sector.theta0, ell, problem.order(), phi.clone(), problem.domain.label.clone(), outcomes))
}
