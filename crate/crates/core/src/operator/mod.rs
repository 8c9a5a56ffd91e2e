//! One-dimensional cone operators `x^{-m} Σ_k a_k(x) (xD_x)^k` on `(0, 1]`,
//! their Taylor components, conormal symbols and exact action on log-power
//! functions.
//!
//! Coefficients are truncated Taylor tables `a[k][ν]`, so that
//! `a_k(x) = Σ_ν a[k][ν] x^ν`. The Taylor coefficients stand to the left of
//! `(xD_x)^k`. With `D_x = -i ∂_x` one has
//! `(xD_x)(x^{iσ} log^j x) = σ x^{iσ} log^j x - i j x^{iσ} log^{j-1} x`.

mod logpower;

pub use logpower::{LogPowerFunction, LogPowerTerm};

use num_complex::Complex;
use thiserror::Error;

use crate::poly::Polynomial;
use crate::scalar::{cabs, cone, czero, factorial, imag_unit, imag_unit_pow, lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("inconsistent coefficient table: {0}")]
    BadShape(String),
    #[error("leading coefficient a_m vanishes at x = {x}")]
    DegenerateLeadingCoefficient { x: f64 },
    #[error("Taylor index {index} exceeds truncation depth {depth}")]
    OutOfRange { index: usize, depth: usize },
    #[error("truncation order {requested} exceeds stored depth {depth}")]
    TruncationExceeded { requested: usize, depth: usize },
    #[error("invalid boundary condition at x = 1: {0}")]
    InvalidBoundaryCondition(String),
}

/// Classical boundary condition at the regular endpoint `x = 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum RightBoundary<T: Real> {
    /// `u(1) = u'(1) = ... = u^{(m/2-1)}(1) = 0`; even orders only.
    Dirichlet,
    /// Rows of functionals acting on the jet `(u, u', ..., u^{(m-1)})` at `x = 1`.
    Functionals(Vec<Vec<Complex<T>>>),
}

impl<T: Real> RightBoundary<T> {
    /// The functional rows, resolving `Dirichlet` for order `m`.
    pub fn rows(&self, m: usize) -> Vec<Vec<Complex<T>>> {
        match self {
            RightBoundary::Dirichlet => (0..m / 2)
                .map(|r| {
                    let mut row = vec![czero(); m];
                    row[r] = cone();
                    row
                })
                .collect(),
            RightBoundary::Functionals(rows) => rows.clone(),
        }
    }

    pub fn count(&self, m: usize) -> usize {
        match self {
            RightBoundary::Dirichlet => m / 2,
            RightBoundary::Functionals(rows) => rows.len(),
        }
    }
}

/// A closed sector `{λ : |arg λ - θ₀| ≤ halfwidth}` in the spectral plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sector<T: Real> {
    pub theta0: T,
    pub halfwidth: T,
}

impl<T: Real> Sector<T> {
    pub fn new(theta0: T, halfwidth: T) -> Self {
        Self { theta0, halfwidth }
    }

    /// Whether the direction `arg` lies in the closed sector.
    pub fn contains_direction(&self, arg: T) -> bool {
        let two_pi = T::two_pi();
        let mut delta = (arg - self.theta0) % two_pi;
        if delta > T::pi() {
            delta -= two_pi;
        }
        if delta < -T::pi() {
            delta += two_pi;
        }
        delta.abs() <= self.halfwidth
    }
}

/// `Σ_k b_k (xD_x)^k` with constant coefficients (one Taylor component `P_ν`).
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenOperator<T: Real> {
    order: usize,
    coeff0: Vec<Complex<T>>,
}

impl<T: Real> FrozenOperator<T> {
    pub fn new(coeff0: Vec<Complex<T>>) -> Result<Self, OperatorError> {
        if coeff0.is_empty() {
            return Err(OperatorError::BadShape("frozen operator needs at least one coefficient".into()));
        }
        Ok(Self { order: coeff0.len() - 1, coeff0 })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeff0
    }

    pub fn symbol(&self) -> Polynomial<T> {
        Polynomial::new(self.coeff0.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.coeff0.iter().all(|c| *c == czero())
    }

    /// Operator product; constant-coefficient operators in `xD_x` commute.
    pub fn compose(&self, other: &Self) -> Self {
        let prod = &self.symbol() * &other.symbol();
        let mut coeffs = prod.coeffs().to_vec();
        coeffs.resize(self.order + other.order + 1, czero());
        Self { order: self.order + other.order, coeff0: coeffs }
    }
}

/// Exact action on log-power functions.
pub trait SymbolicAction<T: Real> {
    /// Applies the operator to `f`; for cone operators only Taylor components
    /// `ν ≤ trunc` participate (all stored ones when `trunc` is `None`).
    fn apply_symbolic(
        &self,
        f: &LogPowerFunction<T>,
        trunc: Option<usize>,
    ) -> Result<LogPowerFunction<T>, OperatorError>;
}

/// `p(σ - i∂_L) q(L)` for a polynomial symbol `p` and log polynomial `q`.
pub(crate) fn symbol_on_log_block<T: Real>(
    symbol: &Polynomial<T>,
    exponent: Complex<T>,
    q: &[Complex<T>],
) -> Vec<Complex<T>> {
    let shifted = symbol.taylor_shift(exponent);
    let mut out = vec![czero(); q.len()];
    for (j, &cj) in shifted.iter().enumerate() {
        if cj == czero() || j >= q.len() {
            continue;
        }
        let factor = cj * imag_unit_pow::<T>(3 * j % 4);
        for k in j..q.len() {
            let falling = factorial::<T>(k) / factorial::<T>(k - j);
            out[k - j] += factor * q[k] * falling;
        }
    }
    out
}

impl<T: Real> SymbolicAction<T> for FrozenOperator<T> {
    fn apply_symbolic(
        &self,
        f: &LogPowerFunction<T>,
        _trunc: Option<usize>,
    ) -> Result<LogPowerFunction<T>, OperatorError> {
        let symbol = self.symbol();
        let mut out = LogPowerFunction::zero();
        for t in f.terms() {
            let block = symbol_on_log_block(&symbol, t.exponent, &t.coeffs);
            out.accumulate(t.exponent, &block, cone());
        }
        Ok(out)
    }
}

/// Scalar cone differential operator of order `m` on `[0, 1]`, tip at `x = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeOperator<T: Real> {
    order: usize,
    depth: usize,
    coeff: Vec<Vec<Complex<T>>>,
    right_bc: RightBoundary<T>,
}

const VALIDATION_GRID: usize = 200;

impl<T: Real> ConeOperator<T> {
    /// Validates and stores the table `coeff[k][ν]`, `0 ≤ k ≤ m`.
    ///
    /// The table is zero-padded in `ν` up to depth `m`.
    pub fn new(
        m: usize,
        coeff: Vec<Vec<Complex<T>>>,
        right_bc: RightBoundary<T>,
    ) -> Result<Self, OperatorError> {
        if m == 0 {
            return Err(OperatorError::BadShape("order must be at least 1".into()));
        }
        if coeff.len() != m + 1 {
            return Err(OperatorError::BadShape(format!(
                "expected {} coefficient rows for order {m}, got {}",
                m + 1,
                coeff.len()
            )));
        }
        let width = coeff[0].len();
        if width == 0 || coeff.iter().any(|row| row.len() != width) {
            return Err(OperatorError::BadShape("coefficient rows must share a non-zero length".into()));
        }
        let depth = (width - 1).max(m);
        let coeff: Vec<Vec<Complex<T>>> = coeff
            .into_iter()
            .map(|mut row| {
                row.resize(depth + 1, czero());
                row
            })
            .collect();
        match &right_bc {
            RightBoundary::Dirichlet if m % 2 == 1 => {
                return Err(OperatorError::InvalidBoundaryCondition(
                    "Dirichlet preset needs an even order".into(),
                ))
            }
            RightBoundary::Functionals(rows) => {
                if rows.len() > m || rows.iter().any(|r| r.len() != m) {
                    return Err(OperatorError::InvalidBoundaryCondition(format!(
                        "expected at most {m} rows of length {m}"
                    )));
                }
            }
            _ => {}
        }
        let op = Self { order: m, depth, coeff, right_bc };
        op.validate_leading()?;
        Ok(op)
    }

    fn validate_leading(&self) -> Result<(), OperatorError> {
        let scale = self.coeff[self.order]
            .iter()
            .map(|&c| cabs(c))
            .fold(T::zero(), |a, b| a.max(b));
        let tol = scale * lit::<T>(1e-12);
        if cabs(self.coeff[self.order][0]) <= tol {
            return Err(OperatorError::DegenerateLeadingCoefficient { x: 0.0 });
        }
        for i in 0..=VALIDATION_GRID {
            let x = lit::<T>(i as f64 / VALIDATION_GRID as f64);
            if cabs(self.coefficient(self.order, x)) <= tol {
                return Err(OperatorError::DegenerateLeadingCoefficient {
                    x: i as f64 / VALIDATION_GRID as f64,
                });
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `a[k][ν]`, zero beyond the stored depth.
    pub fn coeff(&self, k: usize, nu: usize) -> Complex<T> {
        self.coeff
            .get(k)
            .and_then(|row| row.get(nu))
            .copied()
            .unwrap_or_else(czero)
    }

    pub fn coeff_table(&self) -> &[Vec<Complex<T>>] {
        &self.coeff
    }

    pub fn right_bc(&self) -> &RightBoundary<T> {
        &self.right_bc
    }

    /// Weight `μ` of the reference space `x^μ L²_b`; always `-m/2`.
    pub fn weight(&self) -> T {
        -lit::<T>(self.order as f64) / lit(2.0)
    }

    /// `a_k(x)` for real `x`.
    pub fn coefficient(&self, k: usize, x: T) -> Complex<T> {
        self.coeff[k]
            .iter()
            .rev()
            .fold(czero(), |acc, &c| acc * x + c)
    }

    pub fn taylor_component(&self, nu: usize) -> Result<FrozenOperator<T>, OperatorError> {
        if nu > self.depth {
            return Err(OperatorError::OutOfRange { index: nu, depth: self.depth });
        }
        FrozenOperator::new((0..=self.order).map(|k| self.coeff[k][nu]).collect())
    }

    /// `P̂_ν(σ) = Σ_k a[k][ν] σ^k`.
    pub fn conormal_symbol(&self, nu: usize) -> Result<Polynomial<T>, OperatorError> {
        Ok(self.taylor_component(nu)?.symbol())
    }

    /// Coefficients frozen at the tip.
    pub fn model_operator(&self) -> Self {
        let coeff = self
            .coeff
            .iter()
            .map(|row| {
                let mut r = vec![czero(); row.len()];
                r[0] = row[0];
                r
            })
            .collect();
        Self {
            order: self.order,
            depth: self.depth,
            coeff,
            right_bc: self.right_bc.clone(),
        }
    }

    pub fn has_x_independent_coefficients(&self) -> bool {
        self.coeff
            .iter()
            .all(|row| row.iter().skip(1).all(|c| *c == czero()))
    }

    /// `A - λ`, with `-λ` entering the table at `a[0][m]`.
    pub fn with_spectral_shift(&self, lambda: Complex<T>) -> Self {
        let mut out = self.clone();
        out.coeff[0][self.order] -= lambda;
        out
    }

    /// Same operator with a different condition at `x = 1`.
    pub fn with_right_bc(&self, right_bc: RightBoundary<T>) -> Result<Self, OperatorError> {
        Self::new(self.order, self.coeff.clone(), right_bc)
    }

    /// Whether the rays `{a_m(x) ξ^m t : t > 0}`, `ξ = ±1`, avoid the closed sector
    /// for every `x` of the validation grid.
    pub fn check_parameter_ellipticity(&self, sector: &Sector<T>) -> bool {
        (0..=VALIDATION_GRID).all(|i| {
            let x = lit::<T>(i as f64 / VALIDATION_GRID as f64);
            let am = self.coefficient(self.order, x);
            [T::one(), -T::one()].iter().all(|&xi| {
                let s = am * xi.powi(self.order as i32);
                cabs(s) > T::zero() && !sector.contains_direction(s.im.atan2(s.re))
            })
        })
    }

    /// Formal symmetry in `x^{-m/2} L²_b`: `Σ_k (xD)^k conj(a_k) = Σ_k a_k (xD)^k`,
    /// checked Taylor component by Taylor component.
    pub fn is_formally_symmetric(&self, tol: T) -> bool {
        // (xD)^k x^ν = x^ν (xD - iν)^k, so component ν of the adjoint has
        // symbol Σ_k conj(a[k][ν]) (σ - iν)^k.
        (0..=self.depth).all(|nu| {
            let shift = -imag_unit::<T>() * lit::<T>(nu as f64);
            let conj_symbol = Polynomial::new(
                (0..=self.order).map(|k| self.coeff[k][nu].conj()).collect(),
            );
            let adjoint = conj_symbol.taylor_shift(shift);
            (0..=self.order).all(|k| {
                let own = self.coeff[k][nu];
                let adj = adjoint.get(k).copied().unwrap_or_else(czero);
                cabs(own - adj) <= tol * (T::one() + cabs(own))
            })
        })
    }
}

impl<T: Real> SymbolicAction<T> for ConeOperator<T> {
    fn apply_symbolic(
        &self,
        f: &LogPowerFunction<T>,
        trunc: Option<usize>,
    ) -> Result<LogPowerFunction<T>, OperatorError> {
        let last = match trunc {
            Some(t) if t > self.depth => {
                return Err(OperatorError::TruncationExceeded { requested: t, depth: self.depth })
            }
            Some(t) => t,
            None => self.depth,
        };
        let i = imag_unit::<T>();
        let m = lit::<T>(self.order as f64);
        let mut out = LogPowerFunction::zero();
        for nu in 0..=last {
            let symbol = self.conormal_symbol(nu)?;
            if symbol.is_zero() {
                continue;
            }
            for t in f.terms() {
                let block = symbol_on_log_block(&symbol, t.exponent, &t.coeffs);
                // x^{-m} x^ν x^{iσ} = x^{i(σ + i(m - ν))}
                let exponent = t.exponent + i * (m - lit::<T>(nu as f64));
                out.accumulate(exponent, &block, cone());
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    fn bessel(nu: f64) -> ConeOperator<f64> {
        ConeOperator::new(
            2,
            vec![vec![c(nu * nu, 0.0)], vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap()
    }

    fn perturbed(cx: f64) -> ConeOperator<f64> {
        ConeOperator::new(
            2,
            vec![
                vec![c(0.25, 0.0), c(cx, 0.0)],
                vec![c(0.0, 0.0), c(0.0, 0.0)],
                vec![c(1.0, 0.0), c(0.0, 0.0)],
            ],
            RightBoundary::Dirichlet,
        )
        .unwrap()
    }

    #[test]
    fn builds_bessel_half() {
        let a = bessel(0.5);
        assert_eq!(a.order(), 2);
        assert_eq!(a.depth(), 2);
        assert_eq!(a.weight(), -1.0);
    }

    #[test]
    fn rejects_vanishing_leading_coefficient_at_tip() {
        // a_2(x) = x
        let err = ConeOperator::<f64>::new(
            2,
            vec![
                vec![c(1.0, 0.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), c(1.0, 0.0)],
            ],
            RightBoundary::Dirichlet,
        )
        .unwrap_err();
        assert_eq!(err, OperatorError::DegenerateLeadingCoefficient { x: 0.0 });
    }

    #[test]
    fn rejects_vanishing_leading_coefficient_inside() {
        // a_2(x) = 1 - 2x vanishes at 1/2
        let err = ConeOperator::<f64>::new(
            2,
            vec![
                vec![c(1.0, 0.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), c(0.0, 0.0)],
                vec![c(1.0, 0.0), c(-2.0, 0.0)],
            ],
            RightBoundary::Dirichlet,
        )
        .unwrap_err();
        assert!(matches!(err, OperatorError::DegenerateLeadingCoefficient { .. }));
    }

    #[test]
    fn rejects_bad_shape() {
        let err = ConeOperator::<f64>::new(
            2,
            vec![vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap_err();
        assert!(matches!(err, OperatorError::BadShape(_)));
        assert!(ConeOperator::<f64>::new(2, vec![vec![c(1.0, 0.0)]], RightBoundary::Dirichlet).is_err());
    }

    #[test]
    fn straight_laplacian_symbol() {
        let a = ConeOperator::<f64>::new(
            2,
            vec![vec![c(0.0, 0.0)], vec![c(0.0, 1.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap();
        let p = a.conormal_symbol(0).unwrap();
        assert_eq!(p.coeffs(), &[c(0.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)]);
    }

    #[test]
    fn taylor_components() {
        let a = bessel(0.5);
        assert_eq!(a.taylor_component(0).unwrap().coeffs(), &[c(0.25, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(a.taylor_component(1).unwrap().is_zero());
        assert!(matches!(a.taylor_component(3), Err(OperatorError::OutOfRange { .. })));
        let p = perturbed(0.7);
        assert_eq!(p.conormal_symbol(1).unwrap().coeffs(), &[c(0.7, 0.0)]);
        assert_eq!(p.conormal_symbol(0).unwrap().eval(c(0.0, 0.5)), c(0.0, 0.0));
    }

    #[test]
    fn model_operator_drops_higher_taylor_terms() {
        assert_eq!(bessel(0.5).model_operator(), bessel(0.5));
        assert_eq!(perturbed(1.0).model_operator(), bessel(0.5));
        assert!(bessel(0.5).has_x_independent_coefficients());
        assert!(!perturbed(1.0).has_x_independent_coefficients());
    }

    #[test]
    fn symbolic_action_examples() {
        let model = bessel(0.5);
        let sqrt_x = LogPowerFunction::monomial(c(0.0, -0.5), 0);
        assert!(model.apply_symbolic(&sqrt_x, None).unwrap().trimmed(1e-15).is_zero());

        let xd = FrozenOperator::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let log_x = LogPowerFunction::monomial(c(0.0, 0.0), 1);
        let r = xd.apply_symbolic(&log_x, None).unwrap();
        assert_eq!(r.coeff(c(0.0, 0.0), 0), c(0.0, -1.0));
        assert_eq!(r.log_depth(), 0);

        let a0 = bessel(0.0);
        assert!(a0.apply_symbolic(&log_x, None).unwrap().is_zero());
    }

    #[test]
    fn truncation_beyond_depth_rejected() {
        let a = bessel(0.5);
        let f = LogPowerFunction::monomial(c(0.0, -0.5), 0);
        assert!(matches!(
            a.apply_symbolic(&f, Some(5)),
            Err(OperatorError::TruncationExceeded { .. })
        ));
    }

    #[test]
    fn parameter_ellipticity_examples() {
        let a = bessel(0.5);
        let neg = Sector::new(std::f64::consts::PI, std::f64::consts::FRAC_PI_4);
        let pos = Sector::new(0.0, std::f64::consts::FRAC_PI_4);
        assert!(a.check_parameter_ellipticity(&neg));
        assert!(!a.check_parameter_ellipticity(&pos));
        let minus = ConeOperator::new(
            2,
            vec![vec![c(-0.25, 0.0)], vec![c(0.0, 0.0)], vec![c(-1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap();
        assert!(minus.check_parameter_ellipticity(&pos));
    }

    #[test]
    fn formal_symmetry() {
        assert!(bessel(0.5).is_formally_symmetric(1e-12));
        assert!(perturbed(1.0).is_formally_symmetric(1e-12));
        let straight = ConeOperator::<f64>::new(
            2,
            vec![vec![c(0.0, 0.0)], vec![c(0.0, 1.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap();
        assert!(!straight.is_formally_symmetric(1e-12));
    }
}
