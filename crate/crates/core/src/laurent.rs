//! Truncated Laurent expansions at a point and the Mellin transforms of
//! cut-off log-power functions.
//!
//! The cut-off is the indicator of `[0, 1]`, which changes Mellin transforms
//! only by entire functions; singular parts are cut-off independent. With
//! `f^(σ) = ∫₀^∞ x^{-iσ} f(x) dx/x`,
//!
//! ```text
//! (1_{[0,1]} x^{iσ₀} log^k x)^(σ) = k! (-1)^k i^{k+1} (σ - σ₀)^{-(k+1)},   Im σ > Im σ₀.
//! ```

use std::ops::{Add, Mul, Neg};

use num_complex::Complex;
use thiserror::Error;

use crate::operator::LogPowerTerm;
use crate::poly::Polynomial;
use crate::scalar::{cabs, cluster_tol, czero, factorial, imag_unit_pow, same_point, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaurentError {
    #[error("cannot invert the zero polynomial")]
    ZeroPolynomial,
    #[error("Laurent expansions centred at different points")]
    CenterMismatch,
}

/// `Σ_{n ≥ lo} c_n (σ - center)^n`, known through degree `order`
/// (`None`: a finite Laurent polynomial, every omitted coefficient is zero).
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentExpansion<T: Real> {
    center: Complex<T>,
    lo: i32,
    coeffs: Vec<Complex<T>>,
    order: Option<i32>,
}

impl<T: Real> LaurentExpansion<T> {
    /// Finite Laurent polynomial starting at degree `lo`.
    pub fn exact(center: Complex<T>, lo: i32, coeffs: Vec<Complex<T>>) -> Self {
        Self { center, lo, coeffs, order: None }.canonical()
    }

    /// Series known through degree `lo + coeffs.len() - 1`.
    pub fn truncated(center: Complex<T>, lo: i32, coeffs: Vec<Complex<T>>) -> Self {
        let order = lo + coeffs.len() as i32 - 1;
        Self { center, lo, coeffs, order: Some(order) }.canonical()
    }

    pub fn zero(center: Complex<T>) -> Self {
        Self { center, lo: 0, coeffs: Vec::new(), order: None }
    }

    /// Expansion of a polynomial about `center` (exact).
    pub fn from_polynomial(p: &Polynomial<T>, center: Complex<T>) -> Self {
        Self::exact(center, 0, p.taylor_shift(center))
    }

    // Exactly vanishing low coefficients are dropped so that a negative `lo`
    // always carries a non-zero coefficient.
    fn canonical(mut self) -> Self {
        let lead_zeros = self.coeffs.iter().take_while(|c| **c == czero()).count();
        if lead_zeros == self.coeffs.len() {
            self.coeffs.clear();
            self.lo = self.order.map_or(0, |o| o.min(0));
            if let Some(o) = self.order {
                // keep the known range representable
                self.lo = o + 1;
            }
            return self;
        }
        self.coeffs.drain(..lead_zeros);
        self.lo += lead_zeros as i32;
        if self.order.is_none() {
            while self.coeffs.last().is_some_and(|c| *c == czero()) {
                self.coeffs.pop();
            }
        }
        self
    }

    pub fn center(&self) -> Complex<T> {
        self.center
    }

    /// Lowest stored degree.
    pub fn lo(&self) -> i32 {
        self.lo
    }

    /// Degree through which the expansion is known; `None` for exact data.
    pub fn order(&self) -> Option<i32> {
        self.order
    }

    pub fn is_exact(&self) -> bool {
        self.order.is_none()
    }

    pub fn pole_order(&self) -> usize {
        if self.coeffs.is_empty() || self.lo >= 0 {
            0
        } else {
            (-self.lo) as usize
        }
    }

    /// Coefficient of `(σ - center)^n`.
    pub fn coeff(&self, n: i32) -> Complex<T> {
        if n < self.lo {
            return czero();
        }
        self.coeffs
            .get((n - self.lo) as usize)
            .copied()
            .unwrap_or_else(czero)
    }

    fn last_degree(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }

    /// Degrees `< 0` only; always exact.
    pub fn singular_part(&self) -> Self {
        if self.lo >= 0 {
            return Self::zero(self.center);
        }
        let coeffs = (self.lo..0).map(|n| self.coeff(n)).collect();
        Self::exact(self.center, self.lo, coeffs)
    }

    /// Re-expresses `g(σ) = f(σ + shift)` about `center - shift`.
    pub fn shift_argument(&self, shift: Complex<T>) -> Self {
        Self { center: self.center - shift, ..self.clone() }
    }

    /// Replaces the center by `target` when both name the same point.
    pub fn recentered(&self, target: Complex<T>) -> Result<Self, LaurentError> {
        if !same_point(self.center, target) {
            return Err(LaurentError::CenterMismatch);
        }
        Ok(Self { center: target, ..self.clone() })
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
            ..self.clone()
        }
        .canonical()
    }

    /// Value at `σ` from the stored coefficients.
    pub fn eval(&self, sigma: Complex<T>) -> Complex<T> {
        let tau = sigma - self.center;
        let mut acc = czero();
        for (j, &c) in self.coeffs.iter().enumerate() {
            acc += c * tau.powi(self.lo + j as i32);
        }
        acc
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self, LaurentError> {
        if !same_point(self.center, rhs.center) {
            return Err(LaurentError::CenterMismatch);
        }
        let order = match (self.order, rhs.order) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => None,
        };
        let lo = self.lo.min(rhs.lo);
        let hi = order.unwrap_or_else(|| self.last_degree().max(rhs.last_degree()));
        if hi < lo {
            return Ok(Self { center: self.center, lo: hi + 1, coeffs: Vec::new(), order });
        }
        let coeffs = (lo..=hi).map(|n| self.coeff(n) + rhs.coeff(n)).collect();
        Ok(Self { center: self.center, lo, coeffs, order }.canonical())
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, LaurentError> {
        if !same_point(self.center, rhs.center) {
            return Err(LaurentError::CenterMismatch);
        }
        if (self.coeffs.is_empty() && self.is_exact()) || (rhs.coeffs.is_empty() && rhs.is_exact()) {
            return Ok(Self::zero(self.center));
        }
        let lo = self.lo + rhs.lo;
        let order = match (self.order, rhs.order) {
            (Some(a), Some(b)) => Some((a + rhs.lo).min(b + self.lo)),
            (Some(a), None) => Some(a + rhs.lo),
            (None, Some(b)) => Some(b + self.lo),
            (None, None) => None,
        };
        let hi = order.unwrap_or_else(|| self.last_degree() + rhs.last_degree());
        if hi < lo {
            return Ok(Self { center: self.center, lo: hi + 1, coeffs: Vec::new(), order });
        }
        let mut coeffs = vec![czero(); (hi - lo + 1) as usize];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                let n = self.lo + rhs.lo + (i + j) as i32;
                if n <= hi {
                    coeffs[(n - lo) as usize] += a * b;
                }
            }
        }
        Ok(Self { center: self.center, lo, coeffs, order }.canonical())
    }
}

impl<T: Real> Add for &LaurentExpansion<T> {
    type Output = LaurentExpansion<T>;
    /// Panics on mismatched centers; see [`LaurentExpansion::try_add`].
    fn add(self, rhs: Self) -> LaurentExpansion<T> {
        self.try_add(rhs).expect("Laurent addition with equal centers")
    }
}

impl<T: Real> Mul for &LaurentExpansion<T> {
    type Output = LaurentExpansion<T>;
    fn mul(self, rhs: Self) -> LaurentExpansion<T> {
        self.try_mul(rhs).expect("Laurent product with equal centers")
    }
}

impl<T: Real> Neg for &LaurentExpansion<T> {
    type Output = LaurentExpansion<T>;
    fn neg(self) -> LaurentExpansion<T> {
        self.scale(-Complex::new(T::one(), T::zero()))
    }
}

/// `k! (-1)^k i^{k+1}`: the only coefficient of the Mellin singular part of `x^{iσ₀} log^k x`.
fn mellin_weight<T: Real>(k: usize) -> Complex<T> {
    let sign = if k % 2 == 0 { T::one() } else { -T::one() };
    imag_unit_pow::<T>(k + 1) * (factorial::<T>(k) * sign)
}

/// Singular part at `σ₀` of the Mellin transform of `1_{[0,1]} x^{iσ₀} log^k x`.
pub fn mellin_cutoff<T: Real>(sigma0: Complex<T>, k: usize) -> LaurentExpansion<T> {
    let mut coeffs = vec![czero(); k + 1];
    coeffs[0] = mellin_weight(k);
    LaurentExpansion::exact(sigma0, -(k as i32 + 1), coeffs)
}

/// Singular part of the Mellin transform of one log-power block, at its own exponent.
pub fn mellin_of_block<T: Real>(term: &LogPowerTerm<T>) -> LaurentExpansion<T> {
    let n = term.coeffs.len();
    let mut coeffs = vec![czero(); n];
    for (k, &ck) in term.coeffs.iter().enumerate() {
        // (σ-σ₀)^{-(k+1)} sits at index n-1-k of a vector starting at degree -n
        coeffs[n - 1 - k] = ck * mellin_weight(k);
    }
    LaurentExpansion::exact(term.exponent, -(n as i32), coeffs)
}

/// Log coefficients `c_k` of the unique block at `center` whose Mellin singular part is `sing`.
pub fn block_from_singular_part<T: Real>(sing: &LaurentExpansion<T>) -> Vec<Complex<T>> {
    let poles = sing.pole_order();
    (0..poles)
        .map(|k| sing.coeff(-(k as i32) - 1) / mellin_weight::<T>(k))
        .collect()
}

/// Multiplicity of `center` as a root of `p`, using the clustering tolerance
/// relative to the coefficient scale.
pub fn root_multiplicity<T: Real>(p: &Polynomial<T>, center: Complex<T>) -> usize {
    let shifted = p.taylor_shift(center);
    let scale = shifted.iter().map(|&c| cabs(c)).fold(T::zero(), |a, b| a.max(b));
    let tol = cluster_tol::<T>() * scale;
    shifted.iter().take_while(|&&c| cabs(c) <= tol).count()
}

/// Laurent expansion of `1/P(σ)` at `center`, known through degree `hi`.
pub fn laurent_inverse_of_polynomial<T: Real>(
    p: &Polynomial<T>,
    center: Complex<T>,
    hi: i32,
) -> Result<LaurentExpansion<T>, LaurentError> {
    if p.is_zero() {
        return Err(LaurentError::ZeroPolynomial);
    }
    let mu = root_multiplicity(p, center);
    let shifted = p.taylor_shift(center);
    let q = &shifted[mu..];
    let lo = -(mu as i32);
    if hi < lo {
        return Ok(LaurentExpansion::truncated(center, hi + 1, Vec::new()));
    }
    let count = (hi - lo + 1) as usize;
    let mut b = Vec::with_capacity(count);
    b.push(q[0].inv());
    for n in 1..count {
        let mut acc = czero::<T>();
        for j in 1..=n.min(q.len() - 1) {
            acc += q[j] * b[n - j];
        }
        b.push(-acc / q[0]);
    }
    Ok(LaurentExpansion::truncated(center, lo, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn cutoff_transforms_closed_form() {
        let s0 = c(0.3, -0.5);
        assert_eq!(mellin_cutoff(s0, 0).coeff(-1), c(0.0, 1.0));
        assert_eq!(mellin_cutoff(s0, 1).coeff(-2), c(1.0, 0.0));
        assert_eq!(mellin_cutoff(s0, 2).coeff(-3), c(0.0, -2.0));
        assert_eq!(mellin_cutoff::<f64>(s0, 2).coeff(-2), c(0.0, 0.0));
    }

    #[test]
    fn inverse_examples() {
        let p = Polynomial::<f64>::new(vec![c(0.25, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let inv = laurent_inverse_of_polynomial(&p, c(0.0, -1.5), 0).unwrap();
        assert!((inv.coeff(0) - c(-0.5, 0.0)).norm() < 1e-15);
        assert_eq!(inv.pole_order(), 0);

        let sigma = Polynomial::<f64>::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let inv = laurent_inverse_of_polynomial(&sigma, c(0.0, 0.0), 0).unwrap();
        assert_eq!(inv.pole_order(), 1);
        assert_eq!(inv.coeff(-1), c(1.0, 0.0));
        assert_eq!(inv.coeff(0), c(0.0, 0.0));

        let sq = Polynomial::<f64>::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let inv = laurent_inverse_of_polynomial(&sq, c(0.0, 0.0), 1).unwrap();
        assert_eq!(inv.pole_order(), 2);
        assert_eq!(inv.coeff(-2), c(1.0, 0.0));
        assert_eq!(inv.coeff(-1), c(0.0, 0.0));
        assert_eq!(inv.coeff(1), c(0.0, 0.0));

        assert_eq!(
            laurent_inverse_of_polynomial(&Polynomial::<f64>::zero(), c(0.0, 0.0), 0),
            Err(LaurentError::ZeroPolynomial)
        );
    }

    #[test]
    fn singular_part_and_products() {
        let s0 = c(0.0, -0.5);
        // i/(σ-σ₀) + 5 + (σ - σ₀)
        let f = LaurentExpansion::<f64>::exact(s0, -1, vec![c(0.0, 1.0), c(5.0, 0.0), c(1.0, 0.0)]);
        let sing = f.singular_part();
        assert_eq!(sing, LaurentExpansion::exact(s0, -1, vec![c(0.0, 1.0)]));

        let pole = LaurentExpansion::<f64>::exact(s0, -1, vec![c(1.0, 0.0)]);
        let zero = LaurentExpansion::<f64>::exact(s0, 1, vec![c(1.0, 0.0)]);
        assert_eq!(&pole * &zero, LaurentExpansion::exact(s0, 0, vec![c(1.0, 0.0)]));

        let other = LaurentExpansion::<f64>::exact(c(1.0, 0.0), 0, vec![c(1.0, 0.0)]);
        assert_eq!(pole.try_mul(&other), Err(LaurentError::CenterMismatch));
    }

    #[test]
    fn shift_recenters_pole() {
        let s0 = c(0.2, 0.4);
        let f = LaurentExpansion::<f64>::exact(s0, -1, vec![c(0.0, 1.0)]);
        let g = f.shift_argument(c(0.0, 1.0));
        assert_eq!(g.center(), s0 - c(0.0, 1.0));
        for &sigma in &[c(0.7, 0.1), c(-1.0, 2.0), c(0.3, -0.9)] {
            let lhs = g.eval(sigma);
            let rhs = f.eval(sigma + c(0.0, 1.0));
            assert!((lhs - rhs).norm() < 1e-13);
            let direct = c::<f64>(0.0, 1.0) / (sigma - (s0 - c(0.0, 1.0)));
            assert!((lhs - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn block_round_trip() {
        let term = LogPowerTerm::<f64>::new(c(0.1, -0.3), vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.25, 0.75)]);
        let sing = mellin_of_block(&term);
        let back = block_from_singular_part(&sing);
        for (a, b) in back.iter().zip(&term.coeffs) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
