//! Dense complex polynomials in one variable, stored by ascending degree.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex;

use crate::scalar::{cabs, czero, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T: Real> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Polynomial<T> {
    /// Builds a polynomial from ascending coefficients; exact trailing zeros are dropped.
    pub fn new(mut coeffs: Vec<Complex<T>>) -> Self {
        while coeffs.last().is_some_and(|c| *c == czero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex<T>) -> Self {
        Self::new(vec![c])
    }

    /// `(σ - root)`.
    pub fn linear(root: Complex<T>) -> Self {
        Self::new(vec![-root, Complex::new(T::one(), T::zero())])
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex<T> {
        self.coeffs.get(k).copied().unwrap_or_else(czero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs.iter().rev().fold(czero(), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * T::from_usize(k).unwrap())
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Largest coefficient modulus; the reference scale for relative tolerances.
    pub fn coefficient_scale(&self) -> T {
        self.coeffs
            .iter()
            .map(|&c| cabs(c))
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Coefficients of `p(center + h)` as a polynomial in `h`.
    pub fn taylor_shift(&self, center: Complex<T>) -> Vec<Complex<T>> {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let upper = a[j + 1];
                a[j] += center * upper;
            }
        }
        a
    }

    /// All complex roots with repetition, from the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Option<Vec<Complex<T>>> {
        let deg = self.degree()?;
        if deg == 0 {
            return Some(Vec::new());
        }
        let lead = self.coeffs[deg];
        let mut companion = DMatrix::<Complex<T>>::zeros(deg, deg);
        for i in 1..deg {
            companion[(i, i - 1)] = Complex::new(T::one(), T::zero());
        }
        for i in 0..deg {
            companion[(i, deg - 1)] = -self.coeffs[i] / lead;
        }
        let schur = Schur::try_new(companion, T::default_epsilon(), 10_000)?;
        let (_, tri) = schur.unpack();
        Some((0..deg).map(|i| tri[(i, i)]).collect())
    }
}

impl<T: Real> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<T: Real> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<T: Real> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: Self) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![czero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl<T: Real> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        Polynomial::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn taylor_shift_matches_evaluation() {
        let p = Polynomial::<f64>::new(vec![c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 1.0), c(0.5, 0.0)]);
        let center = c(0.3, -0.7);
        let shifted = p.taylor_shift(center);
        let h = c(0.11, 0.05);
        let via_shift = shifted.iter().rev().fold(c::<f64>(0.0, 0.0), |acc, &a| acc * h + a);
        assert!((via_shift - p.eval(center + h)).norm() < 1e-14);
    }

    #[test]
    fn roots_of_quarter_bessel_symbol() {
        let p = Polynomial::<f64>::new(vec![c(0.25, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let mut r = p.roots().unwrap();
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((r[0] - c(0.0, -0.5)).norm() < 1e-14);
        assert!((r[1] - c(0.0, 0.5)).norm() < 1e-14);
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = Polynomial::<f64>::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.degree(), Some(0));
        assert!(Polynomial::<f64>::new(vec![c(0.0, 0.0)]).is_zero());
    }
}
