//! Fits of `Σ_j Σ_{k ≤ m_j} α_{jk} r^{(n-j)/m - ℓ} log^k r` to ray samples.

use num_complex::Complex64;

use super::lsq::{weighted_lsq, LsSolution};
use super::ray::RaySamples;
use super::AsymptoticsError;

/// Which `(j, k)` terms are fitted; `n = 1` is the dimension of the cone base
/// plus one.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionModel {
    pub order: usize,
    pub ell: usize,
    pub n: usize,
    /// Sorted by `(j, k)`.
    pub terms: Vec<(usize, usize)>,
    /// Added to every exponent (lattice tests).
    pub exponent_shift: f64,
}

impl ExpansionModel {
    /// All `j ≤ j_max` with log powers up to `caps[j]` (missing caps are 0).
    pub fn with_caps(order: usize, ell: usize, j_max: usize, caps: &[usize]) -> Self {
        let mut terms = Vec::new();
        for j in 0..=j_max {
            for k in 0..=caps.get(j).copied().unwrap_or(0) {
                terms.push((j, k));
            }
        }
        Self { order, ell, n: 1, terms, exponent_shift: 0.0 }
    }

    pub fn with_terms(order: usize, ell: usize, mut terms: Vec<(usize, usize)>) -> Self {
        terms.sort();
        terms.dedup();
        Self { order, ell, n: 1, terms, exponent_shift: 0.0 }
    }

    pub fn shifted(mut self, shift: f64) -> Self {
        self.exponent_shift = shift;
        self
    }

    pub fn exponent(&self, j: usize) -> f64 {
        (self.n as f64 - j as f64) / self.order as f64 - self.ell as f64 + self.exponent_shift
    }

    pub fn basis(&self, r: f64) -> Vec<Complex64> {
        let l = r.ln();
        self.terms
            .iter()
            .map(|&(j, k)| Complex64::new(r.powf(self.exponent(j)) * l.powi(k as i32), 0.0))
            .collect()
    }

    pub fn eval(&self, coeffs: &[Complex64], r: f64) -> Complex64 {
        self.basis(r).iter().zip(coeffs).map(|(b, c)| b * c).sum()
    }

    /// Log caps implied by the term list.
    pub fn caps(&self) -> Vec<usize> {
        let j_max = self.terms.iter().map(|t| t.0).max().unwrap_or(0);
        (0..=j_max)
            .map(|j| self.terms.iter().filter(|t| t.0 == j).map(|t| t.1).max().unwrap_or(0))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// Points per sliding window for the drift diagnostic.
    pub window: usize,
    pub window_step: usize,
    /// Above this condition number the leading term is peeled first.
    pub condition_limit: f64,
    /// Always peel the leading term before fitting the rest.
    pub peel: bool,
    /// Weights `r^p` instead of relative weights `1/|value|`; `p = 1`
    /// measures residuals in units of `r^{-1}`.
    pub weight_power: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { window: 20, window_step: 5, condition_limit: 1e13, peel: false, weight_power: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitTerm {
    pub j: usize,
    pub k: usize,
    pub alpha: Complex64,
    pub std_error: f64,
    /// Spread of this coefficient across sliding `r`-windows.
    pub drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub model: ExpansionModel,
    /// Sorted by `(j, k)`.
    pub terms: Vec<FitTerm>,
    pub caps: Vec<usize>,
    /// RMS relative residual.
    pub residual_norm: f64,
    pub condition: f64,
    pub peeled: bool,
    /// `(r, value - model)` per sample.
    pub residuals: Vec<(f64, Complex64)>,
}

impl FitResult {
    pub fn coefficient(&self, j: usize, k: usize) -> Option<Complex64> {
        self.terms.iter().find(|t| t.j == j && t.k == k).map(|t| t.alpha)
    }

    pub fn term(&self, j: usize, k: usize) -> Option<&FitTerm> {
        self.terms.iter().find(|t| t.j == j && t.k == k)
    }

    pub fn window_drift(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.drift).collect()
    }
}

fn weights(rs: &[f64], values: &[Complex64], power: Option<f64>) -> Vec<f64> {
    match power {
        Some(p) => rs.iter().map(|r| r.powf(p)).collect(),
        None => values.iter().map(|v| if v.norm() > 0.0 { 1.0 / v.norm() } else { 1.0 }).collect(),
    }
}

fn solve(model: &ExpansionModel, rs: &[f64], values: &[Complex64], power: Option<f64>) -> Result<LsSolution, AsymptoticsError> {
    if rs.len() < model.terms.len() {
        return Err(AsymptoticsError::TooFewSamples { have: rs.len(), need: model.terms.len() });
    }
    let design: Vec<Vec<Complex64>> = rs.iter().map(|&r| model.basis(r)).collect();
    weighted_lsq(&design, values, &weights(rs, values, power))
        .ok_or(AsymptoticsError::TooFewSamples { have: rs.len(), need: model.terms.len() })
}

/// Fits the leading term on the upper quarter of the grid, subtracts it and
/// fits the remaining terms on all data.
fn peeled_solve(model: &ExpansionModel, rs: &[f64], values: &[Complex64], power: Option<f64>) -> Result<LsSolution, AsymptoticsError> {
    let lead = ExpansionModel { terms: vec![model.terms[0]], ..model.clone() };
    let from = rs.len() - (rs.len() / 4).max(lead.terms.len());
    let head = solve(&lead, &rs[from..], &values[from..], power)?;
    let rest = ExpansionModel { terms: model.terms[1..].to_vec(), ..model.clone() };
    let reduced: Vec<Complex64> = rs.iter().zip(values).map(|(&r, &v)| v - lead.eval(&head.coeffs, r)).collect();
    if rest.terms.is_empty() {
        return Ok(head);
    }
    let tail = solve(&rest, rs, &reduced, power)?;
    // refit the leading term against the peeled remainder on all data
    let remainder: Vec<Complex64> = rs.iter().zip(values).map(|(&r, &v)| v - rest.eval(&tail.coeffs, r)).collect();
    let lead_all = solve(&lead, rs, &remainder, power)?;
    let mut coeffs = vec![lead_all.coeffs[0]];
    coeffs.extend(&tail.coeffs);
    let mut std_errors = vec![lead_all.std_errors[0]];
    std_errors.extend(&tail.std_errors);
    let residuals: Vec<Complex64> = rs.iter().zip(values).map(|(&r, &v)| v - model.eval(&coeffs, r)).collect();
    let w = weights(rs, values, power);
    let residual_norm = (residuals.iter().zip(&w).map(|(r, w)| (r * w).norm_sqr()).sum::<f64>() / rs.len() as f64).sqrt();
    Ok(LsSolution { coeffs, std_errors, residuals, residual_norm, condition: tail.condition.max(lead_all.condition) })
}

pub fn fit_model(samples: &RaySamples, model: &ExpansionModel, opts: FitOptions) -> Result<FitResult, AsymptoticsError> {
    let rs = samples.radii();
    let values = samples.values();
    if model.terms.is_empty() {
        return Err(AsymptoticsError::TooFewSamples { have: rs.len(), need: 0 });
    }
    let mut peeled = opts.peel;
    let p = opts.weight_power;
    let mut sol = if peeled { peeled_solve(model, &rs, &values, p)? } else { solve(model, &rs, &values, p)? };
    if sol.condition > opts.condition_limit && !peeled {
        peeled = true;
        sol = peeled_solve(model, &rs, &values, p)?;
    }
    if sol.condition > opts.condition_limit {
        return Err(AsymptoticsError::IllConditioned { condition: sol.condition });
    }

    // sliding windows
    let window = opts.window.min(rs.len()).max(model.terms.len());
    let mut lo = vec![Complex64::new(f64::INFINITY, f64::INFINITY); model.terms.len()];
    let mut hi = vec![Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY); model.terms.len()];
    let mut start = 0;
    let mut any = false;
    while start + window <= rs.len() {
        let range = start..start + window;
        let w = if peeled {
            peeled_solve(model, &rs[range.clone()], &values[range], p)
        } else {
            solve(model, &rs[range.clone()], &values[range], p)
        };
        if let Ok(w) = w {
            any = true;
            for (i, c) in w.coeffs.iter().enumerate() {
                lo[i] = Complex64::new(lo[i].re.min(c.re), lo[i].im.min(c.im));
                hi[i] = Complex64::new(hi[i].re.max(c.re), hi[i].im.max(c.im));
            }
        }
        start += opts.window_step.max(1);
    }
    let terms = model
        .terms
        .iter()
        .enumerate()
        .map(|(i, &(j, k))| FitTerm {
            j,
            k,
            alpha: sol.coeffs[i],
            std_error: sol.std_errors[i],
            drift: if any { (hi[i] - lo[i]).norm() } else { 0.0 },
        })
        .collect();
    Ok(FitResult {
        model: model.clone(),
        terms,
        caps: model.caps(),
        residual_norm: sol.residual_norm,
        condition: sol.condition,
        peeled,
        residuals: rs.iter().copied().zip(sol.residuals).collect(),
    })
}

/// Fit with all orders `j ≤ j_max` and log caps `caps[j]`.
pub fn fit_expansion(samples: &RaySamples, j_max: usize, caps: &[usize], opts: FitOptions) -> Result<FitResult, AsymptoticsError> {
    let model = ExpansionModel::with_caps(samples.order, samples.ell, j_max, caps);
    fit_model(samples, &model, opts)
}

/// Log power needed at order `j`: nested fits add `log^k r` at order `j`
/// one power at a time. A reduction of the residual by more than
/// `2·threshold` counts as a genuine log, less than `threshold/2` as none,
/// anything in between is inconclusive.
pub fn detect_logs(
    samples: &RaySamples,
    j: usize,
    threshold: f64,
    j_max: usize,
    base_caps: &[usize],
) -> Result<usize, AsymptoticsError> {
    const MAX_POWER: usize = 3;
    // relative residuals at this level are numerical noise
    const FLOOR: f64 = 1e-11;
    let mut caps: Vec<usize> = (0..=j_max.max(j)).map(|i| base_caps.get(i).copied().unwrap_or(0)).collect();
    caps[j] = 0;
    let opts = FitOptions { window: usize::MAX, ..FitOptions::default() };
    let mut prev = fit_expansion(samples, j_max.max(j), &caps, opts)?.residual_norm;
    for k in 1..=MAX_POWER {
        if prev < FLOOR {
            return Ok(k - 1);
        }
        caps[j] = k;
        let cur = fit_expansion(samples, j_max.max(j), &caps, opts)?.residual_norm.max(f64::MIN_POSITIVE);
        let ratio = prev / cur;
        if ratio <= threshold / 2.0 {
            return Ok(k - 1);
        }
        if ratio < 2.0 * threshold {
            return Err(AsymptoticsError::Inconclusive { ratio });
        }
        prev = cur;
    }
    Ok(MAX_POWER)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientDelta {
    pub j: usize,
    pub k: usize,
    pub a: Option<Complex64>,
    pub b: Option<Complex64>,
    /// `|a - b|`, or infinity when one side lacks the term.
    pub delta: f64,
}

/// Coefficients that must agree across domains (`j < n` and `(n, 1)`) and
/// those allowed to differ.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainComparison {
    pub required: Vec<CoefficientDelta>,
    pub allowed: Vec<CoefficientDelta>,
}

impl DomainComparison {
    pub fn max_required_delta(&self) -> f64 {
        self.required.iter().map(|d| d.delta).fold(0.0, f64::max)
    }
}

pub fn compare_domains(a: &FitResult, b: &FitResult, n: usize) -> DomainComparison {
    let mut keys: Vec<(usize, usize)> = a.terms.iter().chain(&b.terms).map(|t| (t.j, t.k)).collect();
    keys.sort();
    keys.dedup();
    let mut required = Vec::new();
    let mut allowed = Vec::new();
    for (j, k) in keys {
        let ca = a.coefficient(j, k);
        let cb = b.coefficient(j, k);
        let delta = match (ca, cb) {
            (Some(x), Some(y)) => (x - y).norm(),
            _ => f64::INFINITY,
        };
        let entry = CoefficientDelta { j, k, a: ca, b: cb, delta };
        if j < n || (j == n && k == 1) {
            required.push(entry);
        } else {
            allowed.push(entry);
        }
    }
    DomainComparison { required, allowed }
}

/// Decay of the absolute fit residual: `constant = max |res|·r^{p}` with `p`
/// the claimed rate, and the least-squares slope of `log|res|` in `log r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualDecay {
    pub constant: f64,
    pub slope: f64,
}

pub fn residual_decay(fit: &FitResult, rate: f64) -> ResidualDecay {
    let pts: Vec<(f64, f64)> = fit
        .residuals
        .iter()
        .filter(|(_, e)| e.norm() > 0.0)
        .map(|(r, e)| (r.ln(), e.norm().ln()))
        .collect();
    let constant = fit.residuals.iter().map(|(r, e)| e.norm() * r.powf(rate)).fold(0.0, f64::max);
    if pts.len() < 2 {
        return ResidualDecay { constant, slope: f64::NEG_INFINITY };
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    ResidualDecay { constant, slope: sxy / sxx }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::ray::ray_grid;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn synthetic_round_trip() {
        let rs = ray_grid(1e2, 1e6, 40);
        let s = RaySamples::synthetic(PI, 1, 2, &rs, |r| c(0.5 * r.powf(-0.5) - 0.5 / r));
        let fit = fit_expansion(&s, 4, &[0, 1], FitOptions::default()).unwrap();
        assert!((fit.coefficient(0, 0).unwrap() - c(0.5)).norm() < 1e-8);
        assert!((fit.coefficient(1, 0).unwrap() - c(-0.5)).norm() < 1e-8);
        for t in &fit.terms {
            if t.j >= 2 || t.k == 1 {
                assert!(t.alpha.norm() < 1e-8, "{t:?}");
            }
        }
        let s2 = RaySamples::synthetic(PI, 1, 2, &rs, |r| c(r.ln() / r));
        let fit2 = fit_expansion(&s2, 2, &[0, 1], FitOptions::default()).unwrap();
        assert!((fit2.coefficient(1, 1).unwrap() - c(1.0)).norm() < 1e-8);
    }

    #[test]
    fn log_detection() {
        let rs = ray_grid(1e2, 1e6, 40);
        let clean = RaySamples::synthetic(PI, 1, 2, &rs, |r| c(0.5 * r.powf(-0.5) - 0.5 / r + 1e-13 * (r * 7.0).sin() / r));
        assert_eq!(detect_logs(&clean, 0, 10.0, 4, &[]).unwrap(), 0);
        assert_eq!(detect_logs(&clean, 1, 10.0, 4, &[]).unwrap(), 0);
        let logged = clean.map_values(|r, v| v + 0.1 * r.ln() / r);
        assert_eq!(detect_logs(&logged, 1, 10.0, 4, &[]).unwrap(), 1);
    }

    #[test]
    fn identical_fits_compare_to_zero() {
        let rs = ray_grid(1e2, 1e6, 40);
        let s = RaySamples::synthetic(PI, 1, 2, &rs, |r| c(0.5 * r.powf(-0.5)));
        let f = fit_expansion(&s, 2, &[0, 1], FitOptions::default()).unwrap();
        let cmp = compare_domains(&f, &f, 1);
        assert_eq!(cmp.max_required_delta(), 0.0);
        assert!(cmp.required.iter().any(|d| d.j == 1 && d.k == 1));
    }
}
