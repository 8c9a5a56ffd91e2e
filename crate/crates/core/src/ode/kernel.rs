//! Green kernel of `A_D - λ` on a panel grid, kept in per-panel frames so that
//! exponentially growing solutions never overflow.
//!
//! With `Z` the tip-admissible solutions (`p` columns) and `V` those satisfying
//! the conditions at `x = 1` (`q = m - p` columns), the kernel is
//! `G(x, y) = z(x)·c(y)` for `x < y` and `v(x)·d(y)` for `x > y`, where at each
//! `y` the pair `(c, d)` solves `[-Z | V](c; d) = e_m / (a_m (-i)^m)`.
//! Within panel `k` the stored solutions are `Ẑ = Z N_k^{-1}` and
//! `V̂ = V M_k^{-1}`; consecutive frames are linked by `T_k = N_{k-1} N_k^{-1}`
//! and `U_k = M_k M_{k-1}^{-1}`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::integrator::Gbs;
use super::quadrature::{panels, Panel, Rule};
use super::system::{Companion, Problem, TipFamily};
use super::OdeError;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Characteristic determinant `det(B·Z(1))`, stored as a phase-carrying
/// mantissa and the logarithm of a positive scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharDet {
    pub lambda: Complex64,
    pub mantissa: Complex64,
    pub log_scale: f64,
    /// `|det(B Q)| / Π‖B_i‖` with `Q` an orthonormal basis of `span Z(1)`;
    /// scale free, zero exactly at eigenvalues.
    pub normalized: f64,
}

impl CharDet {
    /// `det(B·Z(1))` itself (may overflow for large `|λ|`).
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }

    pub fn ln(&self) -> Complex64 {
        self.mantissa.ln() + self.log_scale
    }
}

/// Threshold on [`CharDet::normalized`] below which `λ` is treated as an eigenvalue.
pub const NEAR_EIGENVALUE: f64 = 1e-6;

fn qr_split(y: &DMatrix<Complex64>) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let qr = y.clone().qr();
    (qr.q(), qr.r())
}

fn row_norms_product(b: &DMatrix<Complex64>) -> f64 {
    (0..b.nrows()).map(|i| b.row(i).norm()).product::<f64>().max(f64::MIN_POSITIVE)
}

/// Running product of QR triangles.
#[derive(Clone, Copy, Debug)]
struct Scale {
    phase: Complex64,
    log: f64,
}

impl Scale {
    fn new() -> Self {
        Self { phase: Complex64::new(1.0, 0.0), log: 0.0 }
    }

    fn absorb(&mut self, r: &DMatrix<Complex64>) {
        for i in 0..r.nrows().min(r.ncols()) {
            let d = r[(i, i)];
            let n = d.norm();
            if n > 0.0 {
                self.phase *= d / n;
                self.log += n.ln();
            } else {
                self.log = f64::NEG_INFINITY;
            }
        }
    }
}

fn finish_det(problem: &Problem, lambda: Complex64, z1: &DMatrix<Complex64>, mut scale: Scale) -> CharDet {
    let (q, r) = qr_split(z1);
    scale.absorb(&r);
    let bq = &problem.bc * &q;
    let det = bq.determinant();
    CharDet {
        lambda,
        mantissa: det * scale.phase,
        log_scale: scale.log,
        normalized: det.norm() / row_norms_product(&problem.bc),
    }
}

/// Tip jets at `x`, integrating upward from the series radius if `x` lies beyond it.
fn start_state(problem: &Problem, lambda: Complex64, fam: &TipFamily, x: f64, gbs: &mut Gbs) -> Result<DMatrix<Complex64>, OdeError> {
    if x <= fam.radius {
        return Ok(fam.jets(x));
    }
    let mut y = fam.jets(fam.radius);
    let field = Companion::new(&problem.op, lambda);
    gbs.integrate(&field, fam.radius.ln(), x.ln(), &mut y)?;
    Ok(y)
}

/// `det(B·Z(1))` for the tip-admissible family, without building a kernel.
pub fn characteristic_det(problem: &Problem, lambda: Complex64) -> Result<CharDet, OdeError> {
    let fam = problem.tip_family(lambda)?;
    let field = Companion::new(&problem.op, lambda);
    let mut gbs = Gbs::new(problem.numerics.rel_tol);
    let mut y = fam.jets(fam.radius);
    let mut scale = Scale::new();
    let mut x = fam.radius;
    let m = problem.order();
    let cap = problem.numerics.panel_scale * lambda.norm().max(1.0).powf(-1.0 / m as f64);
    while x < 1.0 {
        let next = (2.0 * x).min(x + cap).min(1.0);
        gbs.integrate(&field, x.ln(), next.ln(), &mut y)?;
        let (q, r) = qr_split(&y);
        scale.absorb(&r);
        y = q;
        x = next;
    }
    Ok(finish_det(problem, lambda, &y, scale))
}

/// Kernel data on one panel.
#[derive(Clone, Debug)]
pub struct PanelKernel {
    pub panel: Panel,
    /// Measure weights `w_i x_i^{m-1}`.
    pub measure: Vec<f64>,
    /// Rows `ẑ(x_i)` (`n × p`), `ĉ(x_i)` (`n × p`), `v̂(x_i)` (`n × q`), `d̂(x_i)` (`n × q`).
    pub z: DMatrix<Complex64>,
    pub c: DMatrix<Complex64>,
    pub v: DMatrix<Complex64>,
    pub d: DMatrix<Complex64>,
    /// `T_k` (`p × p`) and `U_k` (`q × q`).
    pub t: DMatrix<Complex64>,
    pub u: DMatrix<Complex64>,
}

impl PanelKernel {
    /// `G(x_i, x_i)`.
    pub fn diagonal(&self, i: usize) -> Complex64 {
        (0..self.z.ncols()).map(|j| self.z[(i, j)] * self.c[(i, j)]).sum()
    }
}

/// Resolvent kernel of `A_D - λ` on a panel grid.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub lambda: Complex64,
    pub panels: Vec<PanelKernel>,
    pub det: CharDet,
    pub order: usize,
}

impl Kernel {
    pub fn new(problem: &Problem, lambda: Complex64) -> Result<Self, OdeError> {
        let rule = Rule::new(problem.numerics.quad_points);
        let grid = panels(lambda, problem.order(), &problem.numerics, &rule);
        Self::on_panels(problem, lambda, &grid)
    }

    /// Builds the kernel on a prescribed panel grid (shared grids make
    /// kernels at different `λ` composable).
    pub fn on_panels(problem: &Problem, lambda: Complex64, grid: &[Panel]) -> Result<Self, OdeError> {
        let m = problem.order();
        let p = problem.tip_count();
        let q = m - p;
        if p == 0 || q == 0 {
            return Err(OdeError::NotSquare { tip: p, boundary: problem.bc.nrows() });
        }
        let fam = problem.tip_family(lambda)?;
        let field = Companion::new(&problem.op, lambda);
        let mut gbs = Gbs::new(problem.numerics.rel_tol);

        // forward sweep over tip-admissible frames
        let mut zs: Vec<Vec<DMatrix<Complex64>>> = Vec::with_capacity(grid.len());
        let mut ts = Vec::with_capacity(grid.len());
        let mut scale = Scale::new();
        let mut state: Option<DMatrix<Complex64>> = None;
        for panel in grid {
            if state.is_none() && panel.b <= fam.radius {
                zs.push(panel.nodes.iter().map(|&x| fam.jets(x)).collect());
                ts.push(DMatrix::identity(p, p));
                continue;
            }
            let y0 = match state.take() {
                Some(y) => y,
                None => start_state(problem, lambda, &fam, panel.a, &mut gbs)?,
            };
            let (mut y, r) = qr_split(&y0);
            scale.absorb(&r);
            ts.push(r.try_inverse().ok_or(OdeError::NearEigenvalue { lambda })?);
            let mut t = panel.a.ln();
            let mut vals = Vec::with_capacity(panel.nodes.len());
            for &x in &panel.nodes {
                gbs.integrate(&field, t, x.ln(), &mut y)?;
                t = x.ln();
                vals.push(y.clone());
            }
            gbs.integrate(&field, t, panel.b.ln(), &mut y)?;
            zs.push(vals);
            state = Some(y);
        }
        let z1 = match state {
            Some(y) => y,
            None => start_state(problem, lambda, &fam, 1.0, &mut gbs)?,
        };
        let det = finish_det(problem, lambda, &z1, scale);
        if det.normalized < NEAR_EIGENVALUE {
            return Err(OdeError::NearEigenvalue { lambda });
        }

        // backward sweep from the boundary conditions at x = 1
        let mut vs: Vec<Vec<DMatrix<Complex64>>> = vec![Vec::new(); grid.len()];
        let mut us: Vec<DMatrix<Complex64>> = vec![DMatrix::identity(q, q); grid.len()];
        let mut y = problem.boundary_null_space();
        let mut gbs = Gbs::new(problem.numerics.rel_tol);
        for (k, panel) in grid.iter().enumerate().rev() {
            let mut t = panel.b.ln();
            let mut vals = vec![DMatrix::zeros(m, q); panel.nodes.len()];
            for (i, &x) in panel.nodes.iter().enumerate().rev() {
                gbs.integrate(&field, t, x.ln(), &mut y)?;
                t = x.ln();
                vals[i] = y.clone();
            }
            gbs.integrate(&field, t, panel.a.ln(), &mut y)?;
            let (qm, r) = qr_split(&y);
            us[k] = r.try_inverse().ok_or(OdeError::NearEigenvalue { lambda })?;
            y = qm;
            vs[k] = vals;
        }

        // jump conditions at every node
        let mut out = Vec::with_capacity(grid.len());
        for (k, panel) in grid.iter().enumerate() {
            let n = panel.nodes.len();
            let mut pk = PanelKernel {
                panel: panel.clone(),
                measure: panel.nodes.iter().zip(&panel.weights).map(|(x, w)| w * x.powi(m as i32 - 1)).collect(),
                z: DMatrix::zeros(n, p),
                c: DMatrix::zeros(n, p),
                v: DMatrix::zeros(n, q),
                d: DMatrix::zeros(n, q),
                t: ts[k].clone(),
                u: us[k].clone(),
            };
            for (i, &x) in panel.nodes.iter().enumerate() {
                let zm = &zs[k][i];
                let vm = &vs[k][i];
                let mut sys = DMatrix::zeros(m, m);
                for r in 0..m {
                    for j in 0..p {
                        sys[(r, j)] = -zm[(r, j)];
                    }
                    for j in 0..q {
                        sys[(r, p + j)] = vm[(r, j)];
                    }
                }
                let lead = problem.op.coefficient(m, x) * minus_i_pow(m);
                let mut rhs = DMatrix::zeros(m, 1);
                rhs[(m - 1, 0)] = Complex64::new(1.0, 0.0) / lead;
                let sol = sys.lu().solve(&rhs).ok_or(OdeError::NearEigenvalue { lambda })?;
                for j in 0..p {
                    pk.z[(i, j)] = zm[(0, j)];
                    pk.c[(i, j)] = sol[(j, 0)];
                }
                for j in 0..q {
                    pk.v[(i, j)] = vm[(0, j)];
                    pk.d[(i, j)] = sol[(p + j, 0)];
                }
            }
            out.push(pk);
        }
        Ok(Self { lambda, panels: out, det, order: m })
    }

    /// `G(x, y)` between node `i` of panel `a` and node `j` of panel `b`.
    pub fn green(&self, (a, i): (usize, usize), (b, j): (usize, usize)) -> Complex64 {
        let x = self.panels[a].panel.nodes[i];
        let y = self.panels[b].panel.nodes[j];
        if x <= y {
            // z(x) N_a N_b^{-1} c(y), with N_a N_b^{-1} = T_{a+1} ⋯ T_b
            let mut vec = self.panels[b].c.row(j).transpose();
            for k in (a + 1..=b).rev() {
                vec = &self.panels[k].t * vec;
            }
            (self.panels[a].z.row(i) * vec)[(0, 0)]
        } else {
            // v(x) M_a M_b^{-1} d(y), with M_a M_b^{-1} = U_a ⋯ U_{b+1}
            let mut vec = self.panels[b].d.row(j).transpose();
            for k in b + 1..=a {
                vec = &self.panels[k].u * vec;
            }
            (self.panels[a].v.row(i) * vec)[(0, 0)]
        }
    }
}

fn minus_i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

#[allow(dead_code)]
fn zero_matrix(r: usize, c: usize) -> DMatrix<Complex64> {
    DMatrix::from_element(r, c, ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{friedrichs_domain, DomainSpec};
    use crate::indicial::canonical_basis;
    use crate::operator::{ConeOperator, RightBoundary};
    use crate::scalar::c;
    use crate::ode::Numerics;
    use std::f64::consts::PI;

    fn bessel_half() -> ConeOperator<f64> {
        ConeOperator::new(
            2,
            vec![vec![c(0.25, 0.0)], vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap()
    }

    fn neumann(a: &ConeOperator<f64>) -> DomainSpec<f64> {
        let basis = canonical_basis(a).unwrap();
        let w = DMatrix::from_column_slice(2, 1, &[c(0.0, 0.0), c(1.0, 0.0)]);
        DomainSpec::with_basis(basis, "x^-1/2", w).unwrap()
    }

    #[test]
    fn determinant_vanishes_at_eigenvalues() {
        let a = bessel_half();
        let f = Problem::new(&a, &friedrichs_domain(&a).unwrap(), Numerics::default()).unwrap();
        assert!(characteristic_det(&f, c(PI * PI, 0.0)).unwrap().normalized < 1e-8);
        assert!(characteristic_det(&f, c(-1.0, 0.0)).unwrap().normalized > 1e-2);
        let n = Problem::new(&a, &neumann(&a), Numerics::default()).unwrap();
        assert!(characteristic_det(&n, c(PI * PI / 4.0, 0.0)).unwrap().normalized < 1e-8);
    }

    #[test]
    fn propagated_solution_matches_sinh() {
        // Z(1) for Friedrichs at λ = -1 is x^{-1/2} sinh x: det(B Z(1)) = sinh 1
        let a = bessel_half();
        let f = Problem::new(&a, &friedrichs_domain(&a).unwrap(), Numerics::default()).unwrap();
        let d = characteristic_det(&f, c(-1.0, 0.0)).unwrap();
        assert!((d.value().re - 1f64.sinh()).abs() < 1e-11);
        let k = Kernel::new(&f, c(-1.0, 0.0)).unwrap();
        assert!((k.det.value().re - 1f64.sinh()).abs() < 1e-11);
    }

    #[test]
    fn kernel_is_hermitian_and_matches_closed_form() {
        let a = bessel_half();
        let f = Problem::new(&a, &friedrichs_domain(&a).unwrap(), Numerics::default()).unwrap();
        let k = Kernel::new(&f, c(-4.0, 0.0)).unwrap();
        let np = k.panels.len();
        let pts = [(np - 1, 3), (np - 3, 10), (np / 2, 0)];
        for &pa in &pts {
            for &pb in &pts {
                let g = k.green(pa, pb);
                let gt = k.green(pb, pa).conj();
                assert!((g - gt).norm() < 1e-10 * (1.0 + g.norm()));
            }
        }
        // -v'' + 4v, v(0) = v(1) = 0: g(x,y) = sinh(2x) sinh(2(1-y)) / (2 sinh 2), x < y
        let x = k.panels[np - 3].panel.nodes[10];
        let y = k.panels[np - 1].panel.nodes[3];
        let g = (2.0 * x).sinh() * (2.0 * (1.0 - y)).sinh() / (2.0 * 2f64.sinh());
        let val = k.green((np - 3, 10), (np - 1, 3)) * (x * y).sqrt();
        assert!((val.re - g).abs() < 1e-11, "{val} vs {g}");
    }
}
