//! Convergent series solutions of `(A - λ)u = 0` at the cone tip.
//!
//! With `σ_N = σ₀ - iN` the solution is `Σ_N x^{iσ_N} q_N(log x)`, where
//! `P̂₀(σ_N - i∂_L) q_N = -Σ_{μ≥1} P̂_μ(σ_{N-μ} - i∂_L) q_{N-μ}` and `λ` enters
//! the depth-`m` component. At a resonant order the kernel of `P̂₀(σ_N - i∂_L)`
//! (log polynomials of degree below the root multiplicity) is normalized away.

use num_complex::Complex64;

use super::{Numerics, OdeError};
use crate::laurent::root_multiplicity;
use crate::operator::{symbol_on_log_block, ConeOperator, LogPowerFunction};
use crate::poly::Polynomial;
use crate::scalar::{factorial, imag_unit_pow};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct FrobeniusSolution {
    pub sigma0: Complex64,
    pub lambda: Complex64,
    /// `q_N`, log coefficients ascending, for `N = 0..=series_order`.
    pub terms: Vec<Vec<Complex64>>,
    /// Largest `x` at which the series is used.
    pub radius: f64,
}

/// Solves `p(σ - i∂_L) q = r` for a log polynomial `q`, zeroing the kernel.
pub(crate) fn solve_log_block(
    p: &Polynomial<f64>,
    sigma: Complex64,
    r: &[Complex64],
) -> Vec<Complex64> {
    if r.iter().all(|z| *z == ZERO) {
        return Vec::new();
    }
    let mu = root_multiplicity(p, sigma);
    let shifted = p.taylor_shift(sigma);
    let g = &shifted[mu..];
    // g(-i∂) s = r, triangular from the top log power down
    let n = r.len();
    let mut s = vec![ZERO; n];
    for k in (0..n).rev() {
        let mut acc = r[k];
        for j in 1..g.len() {
            if k + j >= n {
                break;
            }
            let falling = factorial::<f64>(k + j) / factorial::<f64>(k);
            acc -= g[j] * imag_unit_pow::<f64>(3 * j % 4) * falling * s[k + j];
        }
        s[k] = acc / g[0];
    }
    // (-i∂)^μ q = s  ⇔  ∂^μ q = i^μ s
    let mut q = vec![ZERO; n + mu];
    let factor = imag_unit_pow::<f64>(mu);
    for (k, &sk) in s.iter().enumerate() {
        q[k + mu] = factor * sk * factorial::<f64>(k) / factorial::<f64>(k + mu);
    }
    while q.last().is_some_and(|z| *z == ZERO) {
        q.pop();
    }
    q
}

/// Series coefficients of the solution with leading block `leading` at `σ₀`.
pub fn frobenius_series(
    op: &ConeOperator<f64>,
    lambda: Complex64,
    sigma0: Complex64,
    leading: &[Complex64],
    order: usize,
    max_log_depth: usize,
) -> Result<FrobeniusSolution, OdeError> {
    let shifted = op.with_spectral_shift(lambda);
    let symbols: Vec<Polynomial<f64>> = (0..=shifted.depth())
        .map(|nu| shifted.conormal_symbol(nu))
        .collect::<Result<_, _>>()?;
    let mut terms: Vec<Vec<Complex64>> = vec![leading.to_vec()];
    for n in 1..=order {
        let sigma_n = sigma0 - I * n as f64;
        let mut rhs: Vec<Complex64> = Vec::new();
        for (mu, p) in symbols.iter().enumerate().skip(1).take(n) {
            let q = &terms[n - mu];
            if q.is_empty() || p.is_zero() {
                continue;
            }
            let block = symbol_on_log_block(p, sigma0 - I * (n - mu) as f64, q);
            if rhs.len() < block.len() {
                rhs.resize(block.len(), ZERO);
            }
            for (dst, src) in rhs.iter_mut().zip(block) {
                *dst -= src;
            }
        }
        let q = solve_log_block(&symbols[0], sigma_n, &rhs);
        if q.len() > max_log_depth + 1 {
            return Err(OdeError::ResonanceOverflow { order: n, depth: q.len() - 1 });
        }
        terms.push(q);
    }
    Ok(FrobeniusSolution { sigma0, lambda, terms, radius: 0.0 })
}

fn poly_eval(q: &[Complex64], l: f64) -> Complex64 {
    q.iter().rev().fold(ZERO, |acc, &c| acc * l + c)
}

impl FrobeniusSolution {
    pub fn log_depth(&self) -> usize {
        self.terms.iter().map(|q| q.len().saturating_sub(1)).max().unwrap_or(0)
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    fn sigma(&self, n: usize) -> Complex64 {
        self.sigma0 - I * n as f64
    }

    /// Per-order contributions to the `t = log x` jet of length `m`.
    fn term_jets(&self, x: f64, m: usize) -> Vec<Vec<Complex64>> {
        let l = x.ln();
        self.terms
            .iter()
            .enumerate()
            .map(|(n, q)| {
                if q.is_empty() {
                    return vec![ZERO; m];
                }
                let s = I * self.sigma(n);
                let base = (s * l).exp();
                let mut poly = q.clone();
                let mut jet = Vec::with_capacity(m);
                for _ in 0..m {
                    jet.push(base * poly_eval(&poly, l));
                    // (iσ + ∂_L) on the polynomial
                    let mut next: Vec<Complex64> = poly.iter().map(|&c| c * s).collect();
                    for k in 1..poly.len() {
                        next[k - 1] += poly[k] * k as f64;
                    }
                    poly = next;
                }
                jet
            })
            .collect()
    }

    /// Derivatives `∂_t^j u`, `j < m`, at `x` (with `t = log x`).
    pub fn jet(&self, x: f64, m: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; m];
        for tj in self.term_jets(x, m) {
            for (o, v) in out.iter_mut().zip(tj) {
                *o += v;
            }
        }
        out
    }

    /// Size of the last `window` orders relative to the whole jet.
    pub fn tail_ratio(&self, x: f64, m: usize, window: usize) -> f64 {
        let jets = self.term_jets(x, m);
        let mag: Vec<f64> = jets
            .iter()
            .map(|j| j.iter().fold(0.0f64, |a, z| a.max(z.norm())))
            .collect();
        let total = mag.iter().cloned().fold(0.0f64, f64::max);
        if total == 0.0 {
            return 0.0;
        }
        let start = mag.len().saturating_sub(window);
        mag[start..].iter().sum::<f64>() / total
    }

    /// Adds `other` (which starts at `σ₀ - i·offset`) into this series.
    pub fn add_shifted(&mut self, other: &FrobeniusSolution, offset: usize, weight: Complex64) {
        for (k, q) in other.terms.iter().enumerate() {
            let n = k + offset;
            if n >= self.terms.len() {
                break;
            }
            let dst = &mut self.terms[n];
            if dst.len() < q.len() {
                dst.resize(q.len(), ZERO);
            }
            for (d, &s) in dst.iter_mut().zip(q) {
                *d += weight * s;
            }
        }
    }

    /// Orders `N < count` as a log-power function.
    pub fn truncated(&self, count: usize) -> LogPowerFunction<f64> {
        let mut f = LogPowerFunction::zero();
        for (n, q) in self.terms.iter().enumerate().take(count) {
            f.accumulate(self.sigma(n), q, Complex64::new(1.0, 0.0));
        }
        f
    }
}

/// One series per leading behaviour `x^{iσ} log^k x` (`k` below the root
/// multiplicity), over all roots of the conormal symbol: `m` solutions.
pub fn frobenius_basis(
    op: &ConeOperator<f64>,
    lambda: Complex64,
    numerics: &Numerics,
) -> Result<Vec<FrobeniusSolution>, OdeError> {
    let mut out = Vec::with_capacity(op.order());
    for root in crate::indicial::boundary_spectrum(op)? {
        for k in 0..root.multiplicity {
            let mut lead = vec![ZERO; k + 1];
            lead[k] = Complex64::new(1.0, 0.0);
            out.push(frobenius_series(op, lambda, root.sigma, &lead, numerics.series_order, numerics.max_log_depth)?);
        }
    }
    fit_radius(&mut out, op.order(), numerics)?;
    Ok(out)
}

/// Largest `x ≤ numerics.x_match` (by halving) at which every series has a
/// negligible tail; sets `radius` on each.
pub fn fit_radius(
    series: &mut [FrobeniusSolution],
    m: usize,
    numerics: &Numerics,
) -> Result<f64, OdeError> {
    let mut x = numerics.x_match;
    let window = m + 1;
    while x >= 1e-9 {
        let ok = series
            .iter()
            .all(|s| s.tail_ratio(x, m, window) <= numerics.rel_tol);
        if ok {
            for s in series.iter_mut() {
                s.radius = x;
            }
            return Ok(x);
        }
        x *= 0.5;
    }
    Err(OdeError::SeriesDivergence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{RightBoundary, SymbolicAction};
    use crate::scalar::c;

    fn bessel(nu: f64) -> ConeOperator<f64> {
        ConeOperator::new(
            2,
            vec![vec![c(nu * nu, 0.0)], vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap()
    }

    #[test]
    fn exact_solutions_at_zero_lambda() {
        let a = bessel(0.5);
        for s in [c(0.0, -0.5), c(0.0, 0.5)] {
            let f = frobenius_series(&a, ZERO, s, &[c(1.0, 0.0)], 20, 8).unwrap();
            assert!(f.terms.iter().skip(1).all(|q| q.is_empty()));
        }
        let a0 = bessel(0.0);
        let f = frobenius_series(&a0, ZERO, ZERO, &[c(0.0, 0.0), c(1.0, 0.0)], 10, 8).unwrap();
        assert_eq!(f.log_depth(), 1);
    }

    #[test]
    fn basis_has_m_members() {
        let b = frobenius_basis(&bessel(0.0), ZERO, &Numerics::default()).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.iter().map(|s| s.log_depth()).max(), Some(1));
    }

    #[test]
    fn sinh_oracle() {
        // u = x^{-1/2} sinh x solves A_{1/2} u = -u with leading x^{1/2}
        let a = bessel(0.5);
        let mut f = frobenius_series(&a, c(-1.0, 0.0), c(0.0, -0.5), &[c(1.0, 0.0)], 40, 8).unwrap();
        let numerics = Numerics::default();
        let x = fit_radius(std::slice::from_mut(&mut f), 2, &numerics).unwrap();
        for &xx in &[x, x / 3.0] {
            let jet = f.jet(xx, 2);
            let exact = xx.sinh() / xx.sqrt();
            // t-derivative: x d/dx
            let dexact = xx * (xx.cosh() / xx.sqrt() - 0.5 * xx.sinh() / xx.powf(1.5));
            assert!((jet[0].re - exact).abs() < 1e-13 * exact);
            assert!((jet[1].re - dexact).abs() < 1e-12 * dexact.abs());
        }
    }

    #[test]
    fn series_satisfies_equation_symbolically() {
        let mut a0 = vec![c(0.25, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        a0[2] = c(0.3, 0.0);
        let a = ConeOperator::new(2, vec![a0, vec![c(0.0, 0.0); 3], vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]], RightBoundary::Dirichlet)
            .unwrap();
        let lambda = c(-2.0, 0.5);
        let f = frobenius_series(&a, lambda, c(0.0, 0.5), &[c(1.0, 0.0)], 12, 8).unwrap();
        // resonance at N = 1 hits the other root
        assert!(f.log_depth() >= 1);
        let shifted = a.with_spectral_shift(lambda);
        let u = f.truncated(13);
        let image = shifted.apply_symbolic(&u, None).unwrap();
        // every exponent below the truncation front must cancel
        for t in image.terms() {
            let n_eff = (0.5 - t.exponent.im + 2.0).round() as i64;
            if n_eff <= 12 {
                for z in &t.coeffs {
                    assert!(z.norm() < 1e-11, "order {n_eff}: {z}");
                }
            }
        }
    }
}
