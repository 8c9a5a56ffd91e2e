//! Eigenvalues as zeros of the characteristic determinant, and traces
//! summed over them.

use std::cell::RefCell;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use roots::{find_root_brent, Convergency};

use super::kernel::{characteristic_det, CharDet, NEAR_EIGENVALUE};
use super::system::Problem;
use super::trace::{TraceMethod, TraceSample};
use super::OdeError;

/// Where to look for eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    /// Real interval, searched by sign changes (self-adjoint problems).
    Interval { lo: f64, hi: f64 },
    /// Closed rectangle in the complex plane, searched by the argument principle.
    Rectangle { lo: Complex64, hi: Complex64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenvalue {
    pub value: Complex64,
    /// Normalized determinant at `value`.
    pub residual: f64,
}

/// Scan controls for the real search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    /// Initial step in `s = sign(λ)|λ|^{1/m}`.
    pub step: f64,
    /// Step after two eigenvalues are known: this fraction of the last gap in `s`.
    pub gap_fraction: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { step: 0.2, gap_fraction: 0.25, min_step: 0.02, max_step: 2.0 }
    }
}

pub fn eigenvalues(problem: &Problem, region: Region, max_count: usize) -> Result<Vec<Eigenvalue>, OdeError> {
    match region {
        Region::Interval { lo, hi } => real_eigenvalues(problem, lo, hi, max_count, ScanOptions::default()),
        Region::Rectangle { lo, hi } => {
            let mut out = Vec::new();
            rectangle_search(problem, lo, hi, 0, &mut out)?;
            out.sort_by(|a, b| {
                (a.value.re, a.value.im).partial_cmp(&(b.value.re, b.value.im)).unwrap()
            });
            out.truncate(max_count);
            Ok(out)
        }
    }
}

struct BracketTol(f64);

impl Convergency<f64> for BracketTol {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }
    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= self.0 * (1.0 + x1.abs())
    }
    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter > 200
    }
}

pub fn real_eigenvalues(
    problem: &Problem,
    lo: f64,
    hi: f64,
    max_count: usize,
    opts: ScanOptions,
) -> Result<Vec<Eigenvalue>, OdeError> {
    let m = problem.order() as f64;
    let to_s = |l: f64| l.signum() * l.abs().powf(1.0 / m);
    let to_l = |s: f64| s.signum() * s.abs().powf(m);
    let det = |l: f64| characteristic_det(problem, Complex64::new(l, 0.0));
    let first = det(lo)?;
    let reference = if first.mantissa.norm() > 0.0 { first.mantissa.conj() / first.mantissa.norm() } else { Complex64::new(1.0, 0.0) };
    let real = |d: &CharDet| (d.mantissa * reference).re;

    let mut out: Vec<Eigenvalue> = Vec::new();
    let (mut s, s_hi) = (to_s(lo), to_s(hi));
    let mut prev = (lo, real(&first));
    let mut step = opts.step;
    while s < s_hi && out.len() < max_count {
        s = (s + step).min(s_hi);
        let l = to_l(s);
        let cur = det(l)?;
        let val = real(&cur);
        if prev.1 == 0.0 {
            out.push(Eigenvalue { value: Complex64::new(prev.0, 0.0), residual: 0.0 });
        } else if prev.1 * val < 0.0 {
            let failure = RefCell::new(None);
            let f = |x: f64| match det(x) {
                Ok(d) => real(&d),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            };
            let root = find_root_brent(prev.0, l, f, &mut BracketTol(1e-13));
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            let root = root.map_err(|_| OdeError::ContourThroughZero)?;
            let residual = det(root)?.normalized;
            out.push(Eigenvalue { value: Complex64::new(root, 0.0), residual });
            if out.len() >= 2 {
                let gap = to_s(out[out.len() - 1].value.re) - to_s(out[out.len() - 2].value.re);
                step = (opts.gap_fraction * gap).clamp(opts.min_step, opts.max_step);
            }
        }
        prev = (l, val);
    }
    out.truncate(max_count);
    Ok(out)
}

/// Accumulated argument of the determinant along a segment, refined until
/// consecutive samples differ by less than π/4.
fn arg_change(problem: &Problem, a: Complex64, b: Complex64) -> Result<f64, OdeError> {
    let eval = |l: Complex64| -> Result<CharDet, OdeError> {
        let d = characteristic_det(problem, l)?;
        if d.normalized < NEAR_EIGENVALUE {
            return Err(OdeError::ContourThroughZero);
        }
        Ok(d)
    };
    let n = 16;
    let pts: Vec<Complex64> = (0..=n).map(|j| a + (b - a) * (j as f64 / n as f64)).collect();
    let vals = pts.iter().map(|&l| eval(l)).collect::<Result<Vec<_>, _>>()?;
    let mut total = 0.0;
    let mut stack: Vec<(Complex64, CharDet, Complex64, CharDet, usize)> = pts
        .windows(2)
        .zip(vals.windows(2))
        .map(|(p, v)| (p[0], v[0], p[1], v[1], 0))
        .rev()
        .collect();
    while let Some((pa, da, pb, db, depth)) = stack.pop() {
        let delta = (db.mantissa / da.mantissa).arg();
        if delta.abs() < std::f64::consts::FRAC_PI_4 {
            total += delta;
            continue;
        }
        if depth > 30 {
            return Err(OdeError::ContourThroughZero);
        }
        let mid = 0.5 * (pa + pb);
        let dm = eval(mid)?;
        stack.push((mid, dm, pb, db, depth + 1));
        stack.push((pa, da, mid, dm, depth + 1));
    }
    Ok(total)
}

fn winding(problem: &Problem, lo: Complex64, hi: Complex64) -> Result<usize, OdeError> {
    let c = [lo, Complex64::new(hi.re, lo.im), hi, Complex64::new(lo.re, hi.im)];
    let mut total = 0.0;
    for k in 0..4 {
        total += arg_change(problem, c[k], c[(k + 1) % 4])?;
    }
    let n = total / (2.0 * std::f64::consts::PI);
    if (n - n.round()).abs() > 0.1 || n.round() < 0.0 {
        return Err(OdeError::ContourThroughZero);
    }
    Ok(n.round() as usize)
}

/// Newton on `D`, with `D'/D` from a central difference.
fn newton(problem: &Problem, start: Complex64) -> Result<Option<(Complex64, f64)>, OdeError> {
    let mut l = start;
    for _ in 0..60 {
        let d0 = characteristic_det(problem, l)?;
        if d0.normalized == 0.0 {
            return Ok(Some((l, 0.0)));
        }
        let h = 1e-6 * l.norm().max(1.0);
        let dp = characteristic_det(problem, l + h)?;
        let dm = characteristic_det(problem, l - h)?;
        // D'/D from ratios, which stay branch-free across the zero
        let ratio = |d: &CharDet| d.mantissa / d0.mantissa * (d.log_scale - d0.log_scale).exp();
        let dlog = (ratio(&dp) - ratio(&dm)) / (2.0 * h);
        let step = -1.0 / dlog;
        l += step;
        // the determinant carries integration noise near rel_tol
        if step.norm() <= 1e-11 * l.norm().max(1.0) {
            let r = characteristic_det(problem, l)?.normalized;
            return Ok(Some((l, r)));
        }
    }
    Ok(None)
}

fn rectangle_search(problem: &Problem, lo: Complex64, hi: Complex64, depth: usize, out: &mut Vec<Eigenvalue>) -> Result<(), OdeError> {
    let count = winding(problem, lo, hi)?;
    if count == 0 {
        return Ok(());
    }
    let inside = |z: Complex64| z.re >= lo.re && z.re <= hi.re && z.im >= lo.im && z.im <= hi.im;
    if count == 1 {
        if let Some((z, r)) = newton(problem, 0.5 * (lo + hi))? {
            if inside(z) {
                out.push(Eigenvalue { value: z, residual: r });
                return Ok(());
            }
        }
    }
    let size = (hi - lo).norm();
    if depth > 40 || size < 1e-10 * hi.norm().max(1.0) {
        let z = 0.5 * (lo + hi);
        let r = characteristic_det(problem, z)?.normalized;
        out.extend(std::iter::repeat_n(Eigenvalue { value: z, residual: r }, count));
        return Ok(());
    }
    // split into quadrants, nudged off-centre so new edges avoid symmetric zeros
    let mid = Complex64::new(
        lo.re + (hi.re - lo.re) * (0.5 + 1e-3 * std::f64::consts::E),
        lo.im + (hi.im - lo.im) * (0.5 + 1e-3 * std::f64::consts::PI),
    );
    let quads = [
        (lo, mid),
        (Complex64::new(mid.re, lo.im), Complex64::new(hi.re, mid.im)),
        (Complex64::new(lo.re, mid.im), Complex64::new(mid.re, hi.im)),
        (mid, hi),
    ];
    for (a, b) in quads {
        rectangle_search(problem, a, b, depth + 1, out)?;
    }
    Ok(())
}

/// Weyl-type model `μ_k^{1/m} ≈ slope·k + intercept` (`k` counted from 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylTail {
    pub order: usize,
    pub slope: f64,
    pub intercept: f64,
}

impl WeylTail {
    /// Least-squares fit on the upper part of the spectrum (indices from `from`).
    pub fn fit_range(eigs: &[f64], order: usize, from: usize) -> Option<Self> {
        let pts: Vec<(f64, f64)> = eigs
            .iter()
            .enumerate()
            .skip(from)
            .filter(|(_, &mu)| mu > 0.0)
            .map(|(i, &mu)| ((i + 1) as f64, mu.powf(1.0 / order as f64)))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        Some(Self { order, slope, intercept: my - slope * mx })
    }

    pub fn fit(eigs: &[f64], order: usize) -> Option<Self> {
        Self::fit_range(eigs, order, eigs.len() / 2)
    }

    pub fn eigenvalue(&self, k: f64) -> f64 {
        (self.slope * k + self.intercept).powi(self.order as i32)
    }

    /// `Σ_{k > count} f(μ_k)` by the midpoint Euler–Maclaurin rule on the
    /// model, with `f` smooth and decaying. Returns `(value, correction size)`.
    pub fn tail_sum<F: Fn(f64) -> Complex64>(&self, count: usize, f: F) -> (Complex64, f64) {
        let k0 = count as f64 + 0.5;
        let g = |k: f64| f(self.eigenvalue(k));
        // ∫_{k0}^∞ g(k) dk with k = k0/τ
        let gl = GaussLegendre::new(NonZeroUsize::new(48).unwrap());
        let mut integral = Complex64::new(0.0, 0.0);
        for (a, b) in [(0.0, 0.1), (0.1, 0.4), (0.4, 1.0)] {
            for &(s, w) in gl.as_node_weight_pairs() {
                let tau = 0.5 * (a + b) + 0.5 * (b - a) * s;
                integral += g(k0 / tau) * (k0 / (tau * tau)) * (0.5 * (b - a) * w);
            }
        }
        let h = 1e-3 * k0;
        let derivative = (g(k0 + h) - g(k0 - h)) / (2.0 * h);
        let correction = derivative / 24.0;
        (integral + correction, correction.norm())
    }
}

/// `Σ_k (μ_k - λ)^{-ℓ}` over computed eigenvalues plus a Weyl-model tail.
/// Fails with `TailDominates` if the tail uncertainty exceeds `tol`.
pub fn eigen_trace(eigs: &[f64], order: usize, lambda: Complex64, ell: usize, tol: f64) -> Result<TraceSample, OdeError> {
    let term = |mu: f64| (Complex64::new(mu, 0.0) - lambda).powi(-(ell as i32));
    let head: Complex64 = eigs.iter().rev().map(|&mu| term(mu)).sum();
    let weyl = WeylTail::fit(eigs, order).ok_or(OdeError::TailDominates { tail: f64::INFINITY, head: head.norm() })?;
    let alt = WeylTail::fit_range(eigs, order, 3 * eigs.len() / 4).unwrap_or(weyl);
    let (tail, correction) = weyl.tail_sum(eigs.len(), term);
    let (tail_alt, _) = alt.tail_sum(eigs.len(), term);
    let error = (tail - tail_alt).norm() + 0.1 * correction + 1e-15 * eigs.len() as f64 * head.norm();
    if error > tol || tail.norm() > head.norm() {
        return Err(OdeError::TailDominates { tail: tail.norm(), head: head.norm() });
    }
    Ok(TraceSample { lambda, ell, value: head + tail, method: TraceMethod::Eigen, error_estimate: error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::friedrichs_domain;
    use crate::ode::Numerics;
    use crate::operator::{ConeOperator, RightBoundary};
    use crate::scalar::c;
    use std::f64::consts::PI;

    fn problem() -> Problem {
        let a = ConeOperator::new(
            2,
            vec![vec![c(0.25, 0.0)], vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap();
        Problem::new(&a, &friedrichs_domain(&a).unwrap(), Numerics::default()).unwrap()
    }

    #[test]
    fn dirichlet_spectrum() {
        let p = problem();
        let e = eigenvalues(&p, Region::Interval { lo: 0.0, hi: 120.0 }, 10).unwrap();
        assert_eq!(e.len(), 3);
        for (k, ev) in e.iter().enumerate() {
            let exact = ((k + 1) as f64 * PI).powi(2);
            assert!((ev.value.re - exact).abs() < 1e-10 * exact);
        }
        assert!(eigenvalues(&p, Region::Interval { lo: -50.0, hi: 5.0 }, 10).unwrap().is_empty());
    }

    #[test]
    fn argument_principle_finds_real_eigenvalue() {
        let p = problem();
        let e = eigenvalues(&p, Region::Rectangle { lo: c(5.0, -1.0), hi: c(45.0, 1.3) }, 10).unwrap();
        assert_eq!(e.len(), 2);
        assert!((e[0].value - c(PI * PI, 0.0)).norm() < 1e-9, "{e:?}");
        assert!((e[1].value - c(4.0 * PI * PI, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn eigen_trace_with_weyl_tail() {
        let eigs: Vec<f64> = (1..=200).map(|k| (k as f64 * PI).powi(2)).collect();
        let t = eigen_trace(&eigs, 2, c(-1.0, 0.0), 1, 1e-5).unwrap();
        assert!((t.value.re - 0.156_517_642_749_665_6).abs() < 1e-9, "{}", t.value);
        let t2 = eigen_trace(&eigs, 2, c(-1.0, 0.0), 2, 1e-6).unwrap();
        assert!((t2.value.re - 0.009_274_3).abs() < 1e-6);
        assert!(matches!(eigen_trace(&eigs[..3], 2, c(-1.0, 0.0), 1, 1e-12), Err(OdeError::TailDominates { .. })));
    }
}
