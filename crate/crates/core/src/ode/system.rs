//! The companion system of `A - λ` in `t = log x`, boundary rows at `x = 1`
//! and the tip-admissible solution family.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::frobenius::{fit_radius, frobenius_series, FrobeniusSolution};
use super::integrator::LinearField;
use super::{Numerics, OdeError};
use crate::domain::DomainSpec;
use crate::indicial::{boundary_spectrum, root_order, IndicialRoot};
use crate::operator::{ConeOperator, LogPowerFunction};
use crate::theta::ThetaSession;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `-i` to the power `k`.
fn minus_i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => ONE,
        1 => -I,
        2 => -ONE,
        _ => I,
    }
}

/// `(A - λ)u = 0` as `y' = C(t) y` for the jet `y = (u, ∂_t u, …)`.
pub struct Companion<'a> {
    op: &'a ConeOperator<f64>,
    lambda: Complex64,
}

impl<'a> Companion<'a> {
    pub fn new(op: &'a ConeOperator<f64>, lambda: Complex64) -> Self {
        Self { op, lambda }
    }
}

impl LinearField for Companion<'_> {
    fn dim(&self) -> usize {
        self.op.order()
    }

    fn matrix(&self, t: f64, out: &mut DMatrix<Complex64>) {
        let m = self.op.order();
        let x = t.exp();
        out.fill(ZERO);
        for j in 0..m - 1 {
            out[(j, j + 1)] = ONE;
        }
        let lead = self.op.coefficient(m, x) * minus_i_pow(m);
        for k in 0..m {
            let mut a = self.op.coefficient(k, x) * minus_i_pow(k);
            if k == 0 {
                a -= self.lambda * x.powi(m as i32);
            }
            out[(m - 1, k)] = -a / lead;
        }
    }
}

/// Advances a `t`-jet of a solution of `(A - λ)u = 0` from `x0` to `x1`.
/// Returns the jet and a relative error estimate.
pub fn propagate(
    op: &ConeOperator<f64>,
    lambda: Complex64,
    jet: &[Complex64],
    x0: f64,
    x1: f64,
    rel_tol: f64,
) -> Result<(Vec<Complex64>, f64), OdeError> {
    let mut y = DMatrix::from_column_slice(jet.len(), 1, jet);
    let mut gbs = super::integrator::Gbs::new(rel_tol);
    gbs.integrate(&Companion::new(op, lambda), x0.ln(), x1.ln(), &mut y)?;
    Ok((y.iter().copied().collect(), rel_tol * (gbs.steps_taken.max(1) as f64).sqrt()))
}

/// Signed Stirling numbers of the first kind, `s(n, k)` for `n, k < size`.
pub fn stirling_first(size: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; size]; size];
    if size == 0 {
        return s;
    }
    s[0][0] = 1.0;
    for n in 0..size - 1 {
        for k in 1..size {
            s[n + 1][k] = s[n][k - 1] - n as f64 * s[n][k];
        }
    }
    s
}

/// Converts a jet in `∂_t` at `x = 1` into ordinary derivatives.
pub fn t_jet_to_x_jet(jet: &[Complex64]) -> Vec<Complex64> {
    let s = stirling_first(jet.len());
    (0..jet.len())
        .map(|n| (0..=n).map(|k| jet[k] * s[n][k]).sum())
        .collect()
}

/// Everything about `A_D - λ` that does not depend on `λ`.
#[derive(Clone, Debug)]
pub struct Problem {
    pub op: ConeOperator<f64>,
    pub domain: DomainSpec<f64>,
    pub numerics: Numerics,
    /// Boundary functionals at `x = 1` acting on `t`-jets (`b × m`).
    pub bc: DMatrix<Complex64>,
    /// Roots with `Im σ ≤ -m/2` (behaviours in the minimal domain).
    pub min_roots: Vec<IndicialRoot<f64>>,
    /// `θ^{-1}` of each canonical basis element.
    pub tails: Vec<LogPowerFunction<f64>>,
}

impl Problem {
    pub fn new(
        op: &ConeOperator<f64>,
        domain: &DomainSpec<f64>,
        numerics: Numerics,
    ) -> Result<Self, OdeError> {
        let m = op.order();
        let mut session = ThetaSession::new(op)?;
        if session.basis().len() != domain.ambient() {
            return Err(OdeError::DomainMismatch { expected: session.basis().len(), got: domain.ambient() });
        }
        let tails = (0..domain.ambient())
            .map(|i| session.tail(i, 0).map(|t| t.total))
            .collect::<Result<Vec<_>, _>>()?;
        let half = m as f64 / 2.0;
        let min_roots: Vec<_> = boundary_spectrum(op)?
            .into_iter()
            .filter(|r| r.sigma.im <= -half + 1e-12 * (1.0 + r.sigma.norm()))
            .collect();
        let s = stirling_first(m);
        let rows = op.right_bc().rows(m);
        let mut bc = DMatrix::zeros(rows.len(), m);
        for (r, row) in rows.iter().enumerate() {
            for k in 0..m {
                bc[(r, k)] = (k..m).map(|n| row[n] * s[n][k]).sum();
            }
        }
        let p = min_roots.iter().map(|r| r.multiplicity).sum::<usize>() + domain.dimension();
        if p != bc.nrows() {
            return Err(OdeError::NotSquare { tip: p, boundary: bc.nrows() });
        }
        Ok(Self { op: op.clone(), domain: domain.clone(), numerics, bc, min_roots, tails })
    }

    pub fn order(&self) -> usize {
        self.op.order()
    }

    /// Number of tip-admissible solutions (= number of boundary conditions).
    pub fn tip_count(&self) -> usize {
        self.bc.nrows()
    }

    /// Orthonormal basis of initial jets at `x = 1` satisfying the boundary conditions.
    pub fn boundary_null_space(&self) -> DMatrix<Complex64> {
        let m = self.order();
        let b = self.bc.nrows();
        if b == 0 {
            return DMatrix::identity(m, m);
        }
        // pad to square so the thin SVD still spans the whole space
        let mut padded = DMatrix::zeros(m.max(b), m);
        padded.view_mut((0, 0), (b, m)).copy_from(&self.bc);
        let svd = padded.svd(false, true);
        let v_t = svd.v_t.expect("V^T requested");
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&a, &c| svd.singular_values[c].partial_cmp(&svd.singular_values[a]).unwrap());
        let rows = &idx[b..];
        let mut out = DMatrix::zeros(m, rows.len());
        for (c, &r) in rows.iter().enumerate() {
            for j in 0..m {
                out[(j, c)] = v_t[(r, j)].conj();
            }
        }
        out
    }

    fn series(&self, lambda: Complex64, sigma: Complex64, leading: &[Complex64], order: usize) -> Result<FrobeniusSolution, OdeError> {
        frobenius_series(&self.op, lambda, sigma, leading, order, self.numerics.max_log_depth)
    }

    /// Frobenius solution whose part outside the minimal domain equals `θ^{-1}` of basis element `index`.
    pub fn corrected_basis_solution(&self, lambda: Complex64, index: usize) -> Result<FrobeniusSolution, OdeError> {
        let label = self.domain.basis[index];
        let order = self.numerics.series_order;
        let mut lead = vec![ZERO; label.log_power + 1];
        lead[label.log_power] = ONE;
        let mut f = self.series(lambda, label.sigma, &lead, order)?;
        let half = self.order() as f64 / 2.0;
        let strip_count = ((label.sigma.im + half + 1e-9).floor() as i64 + 1).max(0) as usize;
        let target = &self.tails[index];
        for _ in 0..=2 * strip_count + 2 {
            let diff = (target - &f.truncated(strip_count)).trimmed(1e-12 * (1.0 + target.max_abs_coeff()));
            let Some(lead_term) = diff.terms().last() else {
                return Ok(f);
            };
            let offset = (label.sigma.im - lead_term.exponent.im).round();
            if offset < 0.0 || (label.sigma.im - lead_term.exponent.im - offset).abs() > 1e-9 {
                return Err(OdeError::TailMismatch);
            }
            let offset = offset as usize;
            let mult = root_order(&self.op, lead_term.exponent)?;
            if lead_term.coeffs.len() > mult {
                return Err(OdeError::TailMismatch);
            }
            let sigma = label.sigma - I * offset as f64;
            let g = self.series(lambda, sigma, &lead_term.coeffs, order - offset)?;
            f.add_shifted(&g, offset, ONE);
        }
        Err(OdeError::TailMismatch)
    }

    /// Tip-admissible solutions as weighted sums of series.
    pub fn tip_family(&self, lambda: Complex64) -> Result<TipFamily, OdeError> {
        let order = self.numerics.series_order;
        let mut series = Vec::new();
        let mut columns: Vec<Vec<(Complex64, usize)>> = Vec::new();
        for r in &self.min_roots {
            for k in 0..r.multiplicity {
                let mut lead = vec![ZERO; k + 1];
                lead[k] = ONE;
                series.push(self.series(lambda, r.sigma, &lead, order)?);
                columns.push(vec![(ONE, series.len() - 1)]);
            }
        }
        let w = &self.domain.w;
        let mut basis_series = vec![None; w.nrows()];
        for c in 0..w.ncols() {
            let mut col = Vec::new();
            for i in 0..w.nrows() {
                if w[(i, c)] == ZERO {
                    continue;
                }
                if basis_series[i].is_none() {
                    series.push(self.corrected_basis_solution(lambda, i)?);
                    basis_series[i] = Some(series.len() - 1);
                }
                col.push((w[(i, c)], basis_series[i].unwrap()));
            }
            columns.push(col);
        }
        let radius = fit_radius(&mut series, self.order(), &self.numerics)?;
        Ok(TipFamily { series, columns, radius, order: self.order() })
    }
}

/// Tip-admissible solutions near `x = 0`.
#[derive(Clone, Debug)]
pub struct TipFamily {
    pub series: Vec<FrobeniusSolution>,
    pub columns: Vec<Vec<(Complex64, usize)>>,
    pub radius: f64,
    order: usize,
}

impl TipFamily {
    pub fn count(&self) -> usize {
        self.columns.len()
    }

    /// `m × p` jets at `x ≤ radius`.
    pub fn jets(&self, x: f64) -> DMatrix<Complex64> {
        let m = self.order;
        let cache: Vec<Vec<Complex64>> = self.series.iter().map(|s| s.jet(x, m)).collect();
        let mut out = DMatrix::zeros(m, self.columns.len());
        for (c, col) in self.columns.iter().enumerate() {
            for &(w, s) in col {
                for j in 0..m {
                    out[(j, c)] += w * cache[s][j];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::friedrichs_domain;
    use crate::operator::RightBoundary;
    use crate::scalar::c;

    #[test]
    fn stirling_values() {
        let s = stirling_first(4);
        assert_eq!(s[3], vec![0.0, 2.0, -3.0, 1.0]);
        // x = 1 jets of u = x²: ∂_t-jet (1, 2, 4) → x-jet (1, 2, 2)
        let x = t_jet_to_x_jet(&[c(1.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert_eq!(x, vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn propagation_round_trip_and_oracle() {
        let a = ConeOperator::new(
            2,
            vec![vec![c(0.25, 0.0)], vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap();
        let lam = c(-1.0, 0.0);
        // u = x^{-1/2} sinh x, t-jet (u, x u')
        let exact = |x: f64| [c(x.sinh() / x.sqrt(), 0.0), c(x * (x.cosh() / x.sqrt() - 0.5 * x.sinh() / x.powf(1.5)), 0.0)];
        let (j1, _) = propagate(&a, lam, &exact(0.05), 0.05, 1.0, 1e-12).unwrap();
        for (u, v) in j1.iter().zip(exact(1.0)) {
            assert!((u - v).norm() < 1e-11);
        }
        let (back, _) = propagate(&a, lam, &j1, 1.0, 0.05, 1e-12).unwrap();
        for (u, v) in back.iter().zip(exact(0.05)) {
            assert!((u - v).norm() < 1e-11 * 10.0);
        }
        let (zero, _) = propagate(&a, lam, &[c(0.0, 0.0); 2], 0.1, 0.9, 1e-12).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn square_problem_for_bessel() {
        let a = ConeOperator::new(
            2,
            vec![vec![c(0.25, 0.0)], vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap();
        let f = friedrichs_domain(&a).unwrap();
        let p = Problem::new(&a, &f, Numerics::default()).unwrap();
        assert_eq!(p.tip_count(), 1);
        let fam = p.tip_family(c(-1.0, 0.0)).unwrap();
        assert_eq!(fam.count(), 1);
        let jet = fam.jets(fam.radius);
        let x = fam.radius;
        assert!((jet[(0, 0)].re - x.sinh() / x.sqrt()).abs() < 1e-13 * x.sqrt());
        let max = crate::domain::DomainSpec::maximal(&a).unwrap();
        assert!(matches!(
            Problem::new(&a, &max, Numerics::default()),
            Err(OdeError::NotSquare { tip: 2, boundary: 1 })
        ));
    }
}
