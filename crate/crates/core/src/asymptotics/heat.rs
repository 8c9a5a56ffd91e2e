//! Heat traces from eigenvalues, their small-`t` fits, and the ζ-function
//! pole table obtained from them.

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use super::lsq::weighted_lsq;
use super::AsymptoticsError;
use crate::ode::eigen::WeylTail;

#[derive(Clone, Debug, PartialEq)]
pub struct HeatSample {
    pub t: f64,
    pub value: f64,
    /// Weyl-model contribution of the eigenvalues beyond the computed ones.
    pub tail: f64,
    pub error_estimate: f64,
    /// The sum is dominated by far-decayed terms (`t μ₁ > 50`): converged
    /// trivially, but useless for small-`t` fitting.
    pub trivially_converged: bool,
}

fn weyl(eigs: &[f64], order: usize) -> Result<(WeylTail, WeylTail), AsymptoticsError> {
    let main = WeylTail::fit(eigs, order).ok_or(AsymptoticsError::TailDominates { tail: f64::INFINITY, head: 0.0 })?;
    let alt = WeylTail::fit_range(eigs, order, 3 * eigs.len() / 4).unwrap_or(main);
    Ok((main, alt))
}

/// `Σ_k e^{-t μ_k}` for ascending positive eigenvalues, with a Weyl tail.
pub fn heat_trace(eigs: &[f64], order: usize, t_grid: &[f64], tol: f64) -> Result<Vec<HeatSample>, AsymptoticsError> {
    let (main, alt) = weyl(eigs, order)?;
    t_grid
        .iter()
        .map(|&t| {
            let term = |mu: f64| Complex64::new((-t * mu).exp(), 0.0);
            let head: f64 = eigs.iter().rev().map(|&mu| (-t * mu).exp()).sum();
            let (tail, corr) = main.tail_sum(eigs.len(), term);
            let (tail_alt, _) = alt.tail_sum(eigs.len(), term);
            let error = (tail - tail_alt).norm() + 0.1 * corr + 4.0 * f64::EPSILON * head;
            if error > tol {
                return Err(AsymptoticsError::TailDominates { tail: tail.norm(), head });
            }
            Ok(HeatSample {
                t,
                value: head + tail.re,
                tail: tail.re,
                error_estimate: error,
                trivially_converged: eigs.first().is_some_and(|&mu| t * mu > 50.0),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatTerm {
    /// Lattice index: exponent `(j - n)/m`, or `j/m` for log terms.
    pub j: usize,
    pub exponent: f64,
    pub log_power: usize,
    pub coefficient: f64,
    pub std_error: f64,
}

/// Coefficient of a deliberately off-lattice power `t^{exponent}`. It is
/// significant when resolved above `5σ` and stable under extending the
/// lattice model by one order.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeTerm {
    pub exponent: f64,
    pub coefficient: f64,
    pub std_error: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatFit {
    pub order: usize,
    pub n: usize,
    pub terms: Vec<HeatTerm>,
    pub residual_norm: f64,
    pub condition: f64,
    pub probes: Vec<ProbeTerm>,
}

impl HeatFit {
    pub fn coefficient(&self, j: usize, log_power: usize) -> Option<f64> {
        self.terms.iter().find(|t| t.j == j && t.log_power == log_power).map(|t| t.coefficient)
    }
}

/// Off-lattice exponents tried by [`fit_heat`].
pub const PROBE_EXPONENTS: [f64; 2] = [-0.25, 0.25];

/// Fits `Σ_{j ≤ j_max} a_j t^{(j-n)/m} + Σ_{j ∈ log_orders} a_{j1} t^{j/m} log t`
/// with `n = 1`, then refits with off-lattice probes added.
pub fn fit_heat(samples: &[HeatSample], order: usize, j_max: usize, log_orders: &[usize]) -> Result<HeatFit, AsymptoticsError> {
    let n = 1usize;
    let m = order as f64;
    let mut cols: Vec<(usize, f64, usize)> = (0..=j_max).map(|j| (j, (j as f64 - n as f64) / m, 0)).collect();
    cols.extend(log_orders.iter().map(|&j| (j, j as f64 / m, 1)));
    let column = |t: f64, e: f64, k: usize| Complex64::new(t.powf(e) * t.ln().powi(k as i32), 0.0);
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let ys: Vec<Complex64> = samples.iter().map(|s| Complex64::new(s.value, 0.0)).collect();
    let w: Vec<f64> = ys.iter().map(|y| 1.0 / y.norm().max(f64::MIN_POSITIVE)).collect();
    let design: Vec<Vec<Complex64>> = ts.iter().map(|&t| cols.iter().map(|&(_, e, k)| column(t, e, k)).collect()).collect();
    let sol = weighted_lsq(&design, &ys, &w).ok_or(AsymptoticsError::TooFewSamples { have: ts.len(), need: cols.len() })?;
    let terms: Vec<HeatTerm> = cols
        .iter()
        .zip(sol.coeffs.iter().zip(&sol.std_errors))
        .map(|(&(j, exponent, log_power), (c, &s))| HeatTerm { j, exponent, log_power, coefficient: c.re, std_error: s })
        .collect();

    // A genuine off-lattice term keeps its coefficient when the lattice
    // model is extended by one order; truncation bias does not.
    let next = (j_max + 1, (j_max as f64 + 1.0 - n as f64) / m);
    let scale = terms.iter().map(|t| t.coefficient.abs()).fold(0.0, f64::max);
    let probe_fit = |e: f64, extended: bool| -> Result<(f64, f64), AsymptoticsError> {
        let probe_design: Vec<Vec<Complex64>> = design
            .iter()
            .zip(&ts)
            .map(|(row, &t)| {
                let mut r = row.clone();
                if extended {
                    r.push(column(t, next.1, 0));
                }
                r.push(column(t, e, 0));
                r
            })
            .collect();
        let need = probe_design.first().map_or(0, Vec::len);
        let s = weighted_lsq(&probe_design, &ys, &w).ok_or(AsymptoticsError::TooFewSamples { have: ts.len(), need })?;
        Ok((s.coeffs.last().unwrap().re, *s.std_errors.last().unwrap()))
    };
    let probes = PROBE_EXPONENTS
        .iter()
        .map(|&e| {
            let (c, se) = probe_fit(e, false)?;
            let resolved = |c: f64, se: f64| c.abs() > (5.0 * se).max(1e-6 * scale);
            let significant = resolved(c, se)
                && match probe_fit(e, true) {
                    Ok((c2, se2)) => resolved(c2, se2) && (c - c2).abs() <= 0.2 * c.abs().max(c2.abs()),
                    Err(_) => true,
                };
            Ok(ProbeTerm { exponent: e, coefficient: c, std_error: se, significant })
        })
        .collect::<Result<Vec<_>, AsymptoticsError>>()?;
    Ok(HeatFit { order, n, terms, residual_norm: sol.residual_norm, condition: sol.condition, probes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PoleStatus {
    /// Resolved pole with residue above tolerance.
    Pole,
    /// The heat coefficient is zero within tolerance: no pole.
    Absent,
    /// `Γ(s)` has a pole here, so the simple-pole contribution cancels.
    Cancelled,
    /// Fit uncertainty exceeds the residue tolerance.
    Unresolved,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoleEntry {
    pub s: f64,
    /// Pole order (2 for log-induced double poles).
    pub order: usize,
    /// Residue, or leading Laurent coefficient for double poles.
    pub residue: f64,
    pub uncertainty: f64,
    pub status: PoleStatus,
    pub source_j: usize,
    pub log_power: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaValue {
    pub s: f64,
    /// Only computed in the half-plane of convergence `s > n/m`.
    pub value: Option<f64>,
    pub error_estimate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaReport {
    pub values: Vec<ZetaValue>,
    pub poles: Vec<PoleEntry>,
    pub off_lattice: Vec<ProbeTerm>,
}

fn nonpositive_integer(s: f64) -> Option<u32> {
    let k = (-s).round();
    (k >= 0.0 && (s + k).abs() < 1e-12).then_some(k as u32)
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Pole table from the heat fit and direct values `Σ μ_k^{-s}` for `s > n/m`.
pub fn zeta_report(eigs: &[f64], heat: &HeatFit, s_grid: &[f64], residue_tol: f64) -> Result<ZetaReport, AsymptoticsError> {
    let threshold = heat.n as f64 / heat.order as f64;
    let (main, alt) = weyl(eigs, heat.order)?;
    let values = s_grid
        .iter()
        .map(|&s| {
            if s <= threshold {
                return ZetaValue { s, value: None, error_estimate: f64::NAN };
            }
            let term = |mu: f64| Complex64::new(mu.powf(-s), 0.0);
            let head: f64 = eigs.iter().rev().map(|&mu| mu.powf(-s)).sum();
            let (tail, corr) = main.tail_sum(eigs.len(), term);
            let (tail_alt, _) = alt.tail_sum(eigs.len(), term);
            let err = (tail - tail_alt).norm() + 0.1 * corr + 4.0 * f64::EPSILON * head * eigs.len() as f64;
            ZetaValue { s, value: Some(head + tail.re), error_estimate: err }
        })
        .collect();

    let mut poles = Vec::new();
    for t in &heat.terms {
        let s0 = -t.exponent;
        let (order, residue, unc, cancelled) = match (t.log_power, nonpositive_integer(s0)) {
            (0, Some(_)) => (1, 0.0, 0.0, true),
            (0, None) => {
                let g = gamma(s0);
                (1, t.coefficient / g, t.std_error / g.abs(), false)
            }
            // ∫_0^1 t^{s-1} t^p log t dt = -1/(s+p)²
            (_, Some(k)) => {
                let f = factorial(k) * if k % 2 == 0 { 1.0 } else { -1.0 };
                (1, -t.coefficient * f, t.std_error * factorial(k), false)
            }
            (_, None) => {
                let g = gamma(s0);
                (2, -t.coefficient / g, t.std_error / g.abs(), false)
            }
        };
        let status = if cancelled {
            PoleStatus::Cancelled
        } else if unc > residue_tol {
            PoleStatus::Unresolved
        } else if residue.abs() <= residue_tol.max(3.0 * unc) {
            PoleStatus::Absent
        } else {
            PoleStatus::Pole
        };
        poles.push(PoleEntry { s: s0, order, residue, uncertainty: unc, status, source_j: t.j, log_power: t.log_power });
    }
    poles.sort_by(|a, b| b.s.partial_cmp(&a.s).unwrap().then(a.order.cmp(&b.order)));
    Ok(ZetaReport { values, poles, off_lattice: heat.probes.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::ray::ray_grid;
    use std::f64::consts::PI;

    fn dirichlet(count: usize) -> Vec<f64> {
        (1..=count).map(|k| (k as f64 * PI).powi(2)).collect()
    }

    #[test]
    fn heat_trace_matches_theta_function() {
        let eigs = dirichlet(200);
        let s = heat_trace(&eigs, 2, &[0.01, 10.0], 1e-9).unwrap();
        let exact = 1.0 / (2.0 * (PI * 0.01f64).sqrt()) - 0.5;
        assert!((s[0].value - exact).abs() < 1e-9);
        assert!(!s[0].trivially_converged);
        assert!(s[1].trivially_converged);
        assert!((s[1].value - (-10.0 * PI * PI).exp()).abs() < 1e-50);
    }

    #[test]
    fn genuine_off_lattice_term_is_flagged() {
        let ts = ray_grid(1e-4, 0.05, 40);
        let samples: Vec<HeatSample> = ts
            .iter()
            .map(|&t| HeatSample {
                t,
                value: 0.3 / t.sqrt() - 0.5 + 0.1 * t.powf(0.25) + 0.2 * t,
                tail: 0.0,
                error_estimate: 0.0,
                trivially_converged: false,
            })
            .collect();
        let fit = fit_heat(&samples, 2, 4, &[]).unwrap();
        let p = fit.probes.iter().find(|p| p.exponent == 0.25).unwrap();
        assert!(p.significant && (p.coefficient - 0.1).abs() < 1e-6, "{p:?}");
    }

    #[test]
    fn zeta_from_heat_fit() {
        let eigs = dirichlet(200);
        let samples = heat_trace(&eigs, 2, &ray_grid(1e-4, 0.05, 40), 1e-9).unwrap();
        let fit = fit_heat(&samples, 2, 4, &[]).unwrap();
        assert!((fit.coefficient(0, 0).unwrap() - 0.5 / PI.sqrt()).abs() < 1e-6);
        assert!((fit.coefficient(1, 0).unwrap() + 0.5).abs() < 1e-5);
        assert!(fit.probes.iter().all(|p| !p.significant), "{:?}", fit.probes);
        let z = zeta_report(&eigs, &fit, &[1.0, 0.25], 1e-4).unwrap();
        assert!((z.values[0].value.unwrap() - 1.0 / 6.0).abs() < 1e-9);
        assert!(z.values[1].value.is_none());
        let half = z.poles.iter().find(|p| (p.s - 0.5).abs() < 1e-12).unwrap();
        assert_eq!(half.status, PoleStatus::Pole);
        assert!((half.residue - 0.5 / PI).abs() < 1e-5);
        let zero = z.poles.iter().find(|p| p.s.abs() < 1e-12).unwrap();
        assert_eq!(zero.status, PoleStatus::Cancelled);
        let neg = z.poles.iter().find(|p| (p.s + 0.5).abs() < 1e-12).unwrap();
        assert_eq!(neg.status, PoleStatus::Absent);
    }
}
