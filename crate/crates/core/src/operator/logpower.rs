use std::ops::{Add, Neg, Sub};

use num_complex::Complex;

use crate::scalar::{cabs, czero, lit, real_pow, same_point, Real};

/// One exponent block `x^{iσ} Σ_k c_k log^k x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogPowerTerm<T: Real> {
    pub exponent: Complex<T>,
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> LogPowerTerm<T> {
    pub fn new(exponent: Complex<T>, mut coeffs: Vec<Complex<T>>) -> Self {
        while coeffs.last().is_some_and(|c| *c == czero()) {
            coeffs.pop();
        }
        Self { exponent, coeffs }
    }

    pub fn coeff(&self, k: usize) -> Complex<T> {
        self.coeffs.get(k).copied().unwrap_or_else(czero)
    }

    /// Highest log power present, `None` when the block vanishes.
    pub fn log_degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Real power `a` in `x^a`, i.e. `-Im σ`.
    pub fn real_power(&self) -> T {
        -self.exponent.im
    }
}

/// Finite sum of log-power blocks with pairwise distinct exponents.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LogPowerFunction<T: Real> {
    terms: Vec<LogPowerTerm<T>>,
}

impl<T: Real> LogPowerFunction<T> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    /// `x^{iσ} log^k x`.
    pub fn monomial(exponent: Complex<T>, log_power: usize) -> Self {
        let mut coeffs = vec![czero(); log_power + 1];
        coeffs[log_power] = Complex::new(T::one(), T::zero());
        Self::from_term(exponent, coeffs)
    }

    pub fn from_term(exponent: Complex<T>, coeffs: Vec<Complex<T>>) -> Self {
        let mut f = Self::zero();
        f.accumulate(exponent, &coeffs, Complex::new(T::one(), T::zero()));
        f
    }

    pub fn terms(&self) -> &[LogPowerTerm<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_at(&self, exponent: Complex<T>) -> Option<&LogPowerTerm<T>> {
        self.terms.iter().find(|t| same_point(t.exponent, exponent))
    }

    /// Coefficient of `x^{iσ} log^k x`.
    pub fn coeff(&self, exponent: Complex<T>, k: usize) -> Complex<T> {
        self.term_at(exponent).map_or_else(czero, |t| t.coeff(k))
    }

    /// Adds `scale · x^{iσ} Σ c_k log^k x` in place, merging equal exponents.
    pub fn accumulate(&mut self, exponent: Complex<T>, coeffs: &[Complex<T>], scale: Complex<T>) {
        if coeffs.iter().all(|c| *c == czero()) {
            return;
        }
        let pos = self.terms.iter().position(|t| same_point(t.exponent, exponent));
        let idx = match pos {
            Some(i) => i,
            None => {
                self.terms.push(LogPowerTerm { exponent, coeffs: Vec::new() });
                self.terms.len() - 1
            }
        };
        let term = &mut self.terms[idx];
        if term.coeffs.len() < coeffs.len() {
            term.coeffs.resize(coeffs.len(), czero());
        }
        for (dst, &src) in term.coeffs.iter_mut().zip(coeffs) {
            *dst += src * scale;
        }
        while term.coeffs.last().is_some_and(|c| *c == czero()) {
            term.coeffs.pop();
        }
        if term.coeffs.is_empty() {
            self.terms.remove(idx);
        }
        self.sort();
    }

    fn sort(&mut self) {
        self.terms.sort_by(|a, b| {
            a.exponent
                .im
                .partial_cmp(&b.exponent.im)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(
                    a.exponent
                        .re
                        .partial_cmp(&b.exponent.re)
                        .unwrap_or(std::cmp::Ordering::Equal),
                )
        });
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = Self::zero();
        for t in &self.terms {
            out.accumulate(t.exponent, &t.coeffs, s);
        }
        out
    }

    /// Drops coefficients of modulus at most `tol` (and blocks that become empty).
    pub fn trimmed(&self, tol: T) -> Self {
        let mut out = Self::zero();
        for t in &self.terms {
            let coeffs: Vec<_> = t
                .coeffs
                .iter()
                .map(|&c| if cabs(c) <= tol { czero() } else { c })
                .collect();
            out.accumulate(t.exponent, &coeffs, Complex::new(T::one(), T::zero()));
        }
        out
    }

    /// Largest coefficient modulus.
    pub fn max_abs_coeff(&self) -> T {
        self.terms
            .iter()
            .flat_map(|t| t.coeffs.iter())
            .map(|&c| cabs(c))
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Highest log power over all blocks.
    pub fn log_depth(&self) -> usize {
        self.terms
            .iter()
            .filter_map(|t| t.log_degree())
            .max()
            .unwrap_or(0)
    }

    /// Point evaluation for `x > 0`.
    pub fn eval(&self, x: T) -> Complex<T> {
        let log_x = x.ln();
        self.terms.iter().fold(czero(), |acc, t| {
            let poly = t
                .coeffs
                .iter()
                .rev()
                .fold(czero::<T>(), |p, &c| p * log_x + c);
            acc + poly * real_pow(x, t.exponent * Complex::new(T::zero(), T::one()))
        })
    }

    /// Keeps only the blocks whose real power `-Im σ` is strictly below `bound`.
    pub fn below_real_power(&self, bound: T) -> Self {
        let tol = lit::<T>(1e-9);
        Self {
            terms: self
                .terms
                .iter()
                .filter(|t| t.real_power() < bound - tol)
                .cloned()
                .collect(),
        }
    }
}

impl<T: Real> Add for &LogPowerFunction<T> {
    type Output = LogPowerFunction<T>;
    fn add(self, rhs: Self) -> LogPowerFunction<T> {
        let mut out = self.clone();
        for t in &rhs.terms {
            out.accumulate(t.exponent, &t.coeffs, Complex::new(T::one(), T::zero()));
        }
        out
    }
}

impl<T: Real> Sub for &LogPowerFunction<T> {
    type Output = LogPowerFunction<T>;
    fn sub(self, rhs: Self) -> LogPowerFunction<T> {
        let mut out = self.clone();
        for t in &rhs.terms {
            out.accumulate(t.exponent, &t.coeffs, -Complex::new(T::one(), T::zero()));
        }
        out
    }
}

impl<T: Real> Neg for &LogPowerFunction<T> {
    type Output = LogPowerFunction<T>;
    fn neg(self) -> LogPowerFunction<T> {
        self.scale(-Complex::new(T::one(), T::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    #[test]
    fn merging_cancels_to_zero() {
        let f = LogPowerFunction::<f64>::monomial(c(0.0, -0.5), 1);
        let g = &f - &f;
        assert!(g.is_zero());
    }

    #[test]
    fn eval_sqrt_times_log() {
        // x^{1/2} log x at x = 4
        let f = LogPowerFunction::<f64>::monomial(c(0.0, -0.5), 1);
        let v = f.eval(4.0);
        assert!((v - c(2.0 * 4f64.ln(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn terms_sorted_by_imaginary_part() {
        let mut f = LogPowerFunction::<f64>::monomial(c(0.0, 0.5), 0);
        f.accumulate(c(0.0, -0.5), &[c(1.0, 0.0)], c(1.0, 0.0));
        assert!(f.terms()[0].exponent.im < f.terms()[1].exponent.im);
    }
}
