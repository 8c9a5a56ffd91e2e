//! Composite Gauss–Legendre panels on `[x_cut, 1]`.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Numerics, OdeError};

/// Gauss–Legendre rule on `[-1, 1]` with the Legendre analysis data needed
/// for error estimates and indefinite integrals.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `P_n(s_i)` for `n ≤ len`.
    legendre: Vec<Vec<f64>>,
    /// `(J f)_i ≈ ∫_{s_i}^{1} f` from the nodal values of `f`.
    pub right_integral: DMatrix<f64>,
}

/// `P_0(s), …, P_n(s)`.
pub fn legendre_values(n: usize, s: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(s);
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 * s * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
        p.push(next);
    }
    p
}

impl Rule {
    pub fn new(points: usize) -> Self {
        let points = points.max(2);
        let gl = GaussLegendre::new(NonZeroUsize::new(points).unwrap());
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let legendre: Vec<Vec<f64>> = nodes.iter().map(|&s| legendre_values(points, s)).collect();
        // analysis: c_n = (2n+1)/2 Σ_j w_j P_n(s_j) f_j; ∫_s^1 P_n = -(P_{n+1}(s) - P_{n-1}(s))/(2n+1)
        let mut right_integral = DMatrix::zeros(points, points);
        for i in 0..points {
            let pi = &legendre[i];
            for j in 0..points {
                let mut acc = 0.0;
                for n in 0..points {
                    let analysis = (2 * n + 1) as f64 / 2.0 * weights[j] * legendre[j][n];
                    let integral = if n == 0 {
                        1.0 - nodes[i]
                    } else {
                        -(pi[n + 1] - pi[n - 1]) / (2 * n + 1) as f64
                    };
                    acc += analysis * integral;
                }
                right_integral[(i, j)] = acc;
            }
        }
        Self { nodes, weights, legendre, right_integral }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Legendre coefficients of the interpolant through `values`.
    pub fn legendre_coefficients(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    acc += values[j] * (self.weights[j] * self.legendre[j][k]);
                }
                acc * ((2 * k + 1) as f64 / 2.0)
            })
            .collect()
    }

    /// Error estimate for `∫_{-1}^{1}` of the function sampled at the nodes:
    /// the last two Legendre coefficients, damped by their observed decay rate.
    pub fn error_estimate(&self, values: &[Complex64]) -> f64 {
        let c = self.legendre_coefficients(values);
        let n = c.len();
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let floor = 16.0 * f64::EPSILON * scale;
        if n < 6 {
            return c.iter().map(|z| z.norm()).sum::<f64>() + floor;
        }
        let tail = c[n - 1].norm() + c[n - 2].norm();
        let earlier = c[n - 3].norm() + c[n - 4].norm();
        let rate = if earlier > 0.0 { (tail / earlier).sqrt().min(1.0) } else { 1.0 };
        2.0 * tail * rate.powi(n as i32) + floor
    }
}

/// One quadrature panel with nodes and plain Gauss weights (no measure).
#[derive(Clone, Debug)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Panel {
    pub fn new(a: f64, b: f64, rule: &Rule) -> Self {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        Self {
            a,
            b,
            nodes: rule.nodes.iter().map(|s| mid + half * s).collect(),
            weights: rule.weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }
}

/// Panel breakpoints for the spectral parameter `λ`: geometric (ratio 2)
/// from `x_cut`, widths capped by `panel_scale·|λ|^{-1/m}` and `1/min_panels`.
pub fn breakpoints(lambda: Complex64, m: usize, numerics: &Numerics) -> Vec<f64> {
    let scale = lambda.norm().max(1.0).powf(-1.0 / m as f64);
    let h_max = (numerics.panel_scale * scale).min(1.0 / numerics.min_panels.max(1) as f64);
    let mut pts = vec![numerics.x_cut];
    let mut x = numerics.x_cut;
    while x < 1.0 {
        let mut next = (2.0 * x).min(x + h_max).min(1.0);
        if 1.0 - next < 0.25 * (next - x) {
            next = 1.0;
        }
        pts.push(next);
        x = next;
    }
    pts
}

pub fn panels(lambda: Complex64, m: usize, numerics: &Numerics, rule: &Rule) -> Vec<Panel> {
    breakpoints(lambda, m, numerics)
        .windows(2)
        .map(|w| Panel::new(w[0], w[1], rule))
        .collect()
}

/// `∫_0^{x_cut}` of a power law fitted to samples on the first panel.
/// Returns `(value, error)`.
pub fn tip_correction(panel: &Panel, values: &[Complex64], x_cut: f64) -> Result<(Complex64, f64), OdeError> {
    let n = values.len();
    if n < 3 || values.iter().all(|v| v.norm() == 0.0) {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let exponent = |i: usize, j: usize| {
        (values[j].norm() / values[i].norm()).ln() / (panel.nodes[j] / panel.nodes[i]).ln()
    };
    let p = exponent(0, n - 1);
    let p_alt = exponent(0, n / 2);
    if !p.is_finite() || p <= -1.0 {
        return Err(OdeError::QuadratureNotConverged { estimate: f64::INFINITY });
    }
    let c = values[0] / panel.nodes[0].powf(p);
    let value = c * x_cut.powf(p + 1.0) / (p + 1.0);
    let spread = (p - p_alt).abs() / (p + 1.0);
    Ok((value, value.norm() * (spread + 1e-3)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        let r = Rule::new(16);
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn right_integral_matrix() {
        let r = Rule::new(16);
        let f: Vec<f64> = r.nodes.iter().map(|s| s.exp()).collect();
        for (i, &s) in r.nodes.iter().enumerate() {
            let approx: f64 = (0..16).map(|j| r.right_integral[(i, j)] * f[j]).sum();
            assert!((approx - (1f64.exp() - s.exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn error_estimate_tracks_smoothness() {
        let r = Rule::new(16);
        let smooth: Vec<Complex64> = r.nodes.iter().map(|s| c((4.0 * s).exp())).collect();
        let rough: Vec<Complex64> = r.nodes.iter().map(|s| c((s - 0.1).abs())).collect();
        assert!(r.error_estimate(&smooth) < 1e-12);
        assert!(r.error_estimate(&rough) > 1e-5);
    }

    #[test]
    fn breakpoints_cover_unit_interval() {
        let n = Numerics::default();
        for lam in [c(-1.0), c(-1e6), Complex64::new(-3e4, 2e4)] {
            let b = breakpoints(lam, 2, &n);
            assert_eq!(b[0], n.x_cut);
            assert_eq!(*b.last().unwrap(), 1.0);
            let cap = n.panel_scale * lam.norm().max(1.0).powf(-0.5) + 1e-15;
            assert!(b.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= cap.max(w[0])));
        }
    }

    #[test]
    fn tip_correction_of_power_law() {
        let rule = Rule::new(16);
        let panel = Panel::new(1e-6, 2e-6, &rule);
        let vals: Vec<Complex64> = panel.nodes.iter().map(|x| c(3.0 * x.powf(0.5))).collect();
        let (v, e) = tip_correction(&panel, &vals, 1e-6).unwrap();
        let exact = 3.0 * 1e-6f64.powf(1.5) / 1.5;
        assert!((v.re - exact).abs() < 1e-12 * exact);
        assert!(e < 1e-2 * exact);
    }
}
