//! Traces `Tr(φ (A_D - λ)^{-ℓ})` from the Green kernel.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::kernel::Kernel;
use super::quadrature::{panels, tip_correction, Rule};
use super::system::Problem;
use super::OdeError;
use crate::poly::Polynomial;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TraceMethod {
    Green,
    Eigen,
}

impl TraceMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceMethod::Green => "green",
            TraceMethod::Eigen => "eigen",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceSample {
    pub lambda: Complex64,
    pub ell: usize,
    pub value: Complex64,
    pub method: TraceMethod,
    pub error_estimate: f64,
}

/// Relative quadrature floor added to every Green-trace error estimate.
const FLOOR: f64 = 1e-11;

fn phi_at(phi: &Polynomial<f64>, x: f64) -> Complex64 {
    phi.eval(Complex64::new(x, 0.0))
}

/// `Tr(φ K)` from the kernel diagonal, with the tip piece below `x_cut`
/// closed by a power-law fit. Returns `(value, error)`.
pub fn diagonal_trace(kernel: &Kernel, phi: &Polynomial<f64>, x_cut: f64) -> Result<(Complex64, f64), OdeError> {
    let rule = Rule::new(kernel.panels[0].panel.nodes.len());
    let m = kernel.order as i32;
    let mut total = ZERO;
    let mut err = 0.0;
    for (k, pk) in kernel.panels.iter().enumerate() {
        let vals: Vec<Complex64> = pk
            .panel
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &x)| phi_at(phi, x) * pk.diagonal(i) * x.powi(m - 1))
            .collect();
        total += vals.iter().zip(&pk.panel.weights).map(|(v, w)| v * w).sum::<Complex64>();
        err += pk.panel.half_width() * rule.error_estimate(&vals);
        if k == 0 {
            let (tip, tip_err) = tip_correction(&pk.panel, &vals, x_cut)?;
            total += tip;
            err += tip_err;
        }
    }
    Ok((total, err + FLOOR * total.norm()))
}

/// `∫∫_{x<y} φ_o(x) φ_i(y) G_a(x, y) G_b(y, x)` on a shared grid.
fn upper(a: &Kernel, b: &Kernel, phi_o: &Polynomial<f64>, phi_i: &Polynomial<f64>, rule: &Rule) -> Complex64 {
    let p = a.panels[0].z.ncols();
    let q = b.panels[0].v.ncols();
    let m = a.order as i32;
    let mut s: DMatrix<Complex64> = DMatrix::zeros(p, q);
    let mut total = ZERO;
    for k in (0..a.panels.len()).rev() {
        let (pa, pb) = (&a.panels[k], &b.panels[k]);
        let nodes = &pa.panel.nodes;
        let n = nodes.len();
        let half = pa.panel.half_width();
        // h(y) = φ_i(y) y^{m-1} ĉ_a(y) v̂_b(y)^T
        let h: Vec<DMatrix<Complex64>> = (0..n)
            .map(|j| {
                let f = phi_at(phi_i, nodes[j]) * nodes[j].powi(m - 1);
                pa.c.row(j).transpose() * pb.v.row(j) * f
            })
            .collect();
        let mut h_bar = DMatrix::zeros(p, q);
        for j in 0..n {
            h_bar += &h[j] * Complex64::new(pa.panel.weights[j], 0.0);
        }
        for i in 0..n {
            let mut inner = s.clone();
            for j in 0..n {
                let jw = half * rule.right_integral[(i, j)];
                if jw != 0.0 {
                    inner += &h[j] * Complex64::new(jw, 0.0);
                }
            }
            let zrow = pa.z.row(i);
            let dcol = pb.d.row(i).transpose();
            let val = (zrow * inner * dcol)[(0, 0)];
            total += val * phi_at(phi_o, nodes[i]) * pa.measure[i];
        }
        s = &pa.t * (h_bar + s) * &pb.u;
    }
    total
}

/// `Tr(φ K_a K_b)` for two kernels on the same grid.
pub fn composed(a: &Kernel, b: &Kernel, phi: &Polynomial<f64>) -> Complex64 {
    let rule = Rule::new(a.panels[0].panel.nodes.len());
    let one = Polynomial::constant(Complex64::new(1.0, 0.0));
    upper(a, b, phi, &one, &rule) + upper(b, a, &one, phi, &rule)
}

/// `Tr(φ (A_D - λ_a)^{-1} (A_D - λ_b)^{-1})`.
pub fn composed_trace(problem: &Problem, lambda_a: Complex64, lambda_b: Complex64, phi: &Polynomial<f64>) -> Result<TraceSample, OdeError> {
    let rule = Rule::new(problem.numerics.quad_points);
    let big = if lambda_a.norm() >= lambda_b.norm() { lambda_a } else { lambda_b };
    let grid = panels(big, problem.order(), &problem.numerics, &rule);
    let ka = Kernel::on_panels(problem, lambda_a, &grid)?;
    let kb = Kernel::on_panels(problem, lambda_b, &grid)?;
    let value = composed(&ka, &kb, phi);
    let (da, ea) = diagonal_trace(&ka, phi, problem.numerics.x_cut)?;
    let (db, eb) = diagonal_trace(&kb, phi, problem.numerics.x_cut)?;
    let rel = (ea / da.norm().max(f64::MIN_POSITIVE)).max(eb / db.norm().max(f64::MIN_POSITIVE));
    Ok(TraceSample {
        lambda: lambda_a,
        ell: 2,
        value,
        method: TraceMethod::Green,
        error_estimate: value.norm() * (2.0 * rel + 1e-9),
    })
}

/// `Tr(φ (A_D - λ)^{-ℓ})`.
///
/// `ℓ = 1` integrates the kernel diagonal, `ℓ = 2` composes the kernel with
/// itself, and `ℓ ≥ 3` differentiates the `ℓ = 2` trace `ℓ - 2` times along
/// a Cauchy contour around `λ`.
pub fn green_trace(problem: &Problem, lambda: Complex64, ell: usize, phi: &Polynomial<f64>) -> Result<TraceSample, OdeError> {
    let m = problem.order();
    if ell == 0 || m * ell <= 1 || (ell == 1 && m < 2) {
        return Err(OdeError::UnsupportedPower(ell));
    }
    match ell {
        1 => {
            let k = Kernel::new(problem, lambda)?;
            let (value, err) = diagonal_trace(&k, phi, problem.numerics.x_cut)?;
            Ok(TraceSample { lambda, ell, value, method: TraceMethod::Green, error_estimate: err })
        }
        2 => composed_trace(problem, lambda, lambda, phi),
        _ => cauchy_trace(problem, lambda, ell, phi),
    }
}

fn cauchy_trace(problem: &Problem, lambda: Complex64, ell: usize, phi: &Polynomial<f64>) -> Result<TraceSample, OdeError> {
    // Tr R^ℓ = ∂^{ℓ-2} Tr R² / (ℓ-1)!, and ∂^n f(λ) = n!/(2πi) ∮ f(z)/(z-λ)^{n+1} dz
    let n = ell - 2;
    let radius = 0.25 * lambda.norm().max(1.0);
    let sample = |count: usize| -> Result<(Complex64, f64), OdeError> {
        let mut acc = ZERO;
        let mut err = 0.0;
        for j in 0..count {
            let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / count as f64);
            let s = composed_trace(problem, lambda + w * radius, lambda + w * radius, phi)?;
            acc += s.value * w.powi(-(n as i32));
            err += s.error_estimate;
        }
        let scale = radius.powi(n as i32) * count as f64 * (ell - 1) as f64;
        Ok((acc / scale, err / scale))
    };
    let (coarse, _) = sample(16)?;
    let (fine, err) = sample(32)?;
    Ok(TraceSample {
        lambda,
        ell,
        value: fine,
        method: TraceMethod::Green,
        error_estimate: err + (fine - coarse).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::friedrichs_domain;
    use crate::ode::Numerics;
    use crate::operator::{ConeOperator, RightBoundary};
    use crate::scalar::c;

    fn problem() -> Problem {
        let a = ConeOperator::new(
            2,
            vec![vec![c(0.25, 0.0)], vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap();
        Problem::new(&a, &friedrichs_domain(&a).unwrap(), Numerics::default()).unwrap()
    }

    fn one() -> Polynomial<f64> {
        Polynomial::constant(c(1.0, 0.0))
    }

    #[test]
    fn dirichlet_traces() {
        let p = problem();
        let t1 = green_trace(&p, c(-1.0, 0.0), 1, &one()).unwrap();
        let exact1 = (1f64.cosh() / 1f64.sinh() - 1.0) / 2.0;
        assert!((t1.value.re - exact1).abs() < 1e-9, "{}", t1.value);
        assert!(t1.error_estimate < 1e-8);
        let t2 = green_trace(&p, c(-1.0, 0.0), 2, &one()).unwrap();
        let exact2: f64 = (1..200000).map(|k| 1.0 / ((k as f64 * std::f64::consts::PI).powi(2) + 1.0).powi(2)).sum();
        assert!((t2.value.re - exact2).abs() < 1e-9, "{}", t2.value);
    }

    #[test]
    fn third_power_by_contour() {
        let p = problem();
        let t3 = green_trace(&p, c(-1.0, 0.0), 3, &one()).unwrap();
        let exact: f64 = (1..20000).map(|k| 1.0 / ((k as f64 * std::f64::consts::PI).powi(2) + 1.0).powi(3)).sum();
        assert!((t3.value.re - exact).abs() < 1e-8, "{} vs {exact}", t3.value);
    }
}
