//! The correction maps `e_{σ₀,ϑ}` and the tails of `θ^{-1}`.
//!
//! For `ψ ∈ E_{∧,σ₀}` the corrections live at the exponents `σ₀ - iϑ`. Each one
//! is the unique log-power block whose (cut-off) Mellin transform cancels the
//! singular part of
//!
//! ```text
//! P̂₀(σ)^{-1} Σ_{k=1}^{ϑ} P̂_k(σ + ik) (e_{σ₀,ϑ-k} ψ)^(σ + ik)
//! ```
//!
//! at `σ = σ₀ - iϑ`. The cut-off transforms are pure principal parts, so the
//! condition fixes the block even when `σ₀ - iϑ` is itself an indicial root.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex;
use thiserror::Error;

use crate::indicial::{canonical_basis, BasisLabel, IndicialError};
use crate::laurent::{
    block_from_singular_part, laurent_inverse_of_polynomial, mellin_of_block, LaurentError,
    LaurentExpansion,
};
use crate::operator::{ConeOperator, LogPowerFunction, OperatorError};
use crate::scalar::{czero, imag_unit, lit, Real};

/// Largest log power a single correction may carry.
pub const MAX_LOG_DEPTH: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThetaError {
    #[error("input must be a single-exponent log-power block")]
    NotSingleExponent,
    #[error("correction at step {step} needs log depth {depth}, above the cap {cap}")]
    LogDepthExceeded { step: usize, depth: usize, cap: usize },
    #[error("missing prior corrections: got {got}, step {step} needs {needed}")]
    MissingPrior { step: usize, got: usize, needed: usize },
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Indicial(#[from] IndicialError),
}

/// `θ_ℓ^{-1}ψ` together with its individual corrections.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaTail<T: Real> {
    pub source: LogPowerFunction<T>,
    pub steps: Vec<(usize, LogPowerFunction<T>)>,
    pub total: LogPowerFunction<T>,
}

fn single_exponent<T: Real>(psi: &LogPowerFunction<T>) -> Result<Option<Complex<T>>, ThetaError> {
    match psi.terms() {
        [] => Ok(None),
        [t] => Ok(Some(t.exponent)),
        _ => Err(ThetaError::NotSingleExponent),
    }
}

/// `σ₀ - iϑ`.
pub fn step_exponent<T: Real>(sigma0: Complex<T>, step: usize) -> Complex<T> {
    sigma0 - imag_unit::<T>() * lit::<T>(step as f64)
}

/// Mellin singular part of `f` at `center` (zero when `f` has no block there).
fn mellin_at<T: Real>(
    f: &LogPowerFunction<T>,
    center: Complex<T>,
) -> Result<LaurentExpansion<T>, ThetaError> {
    match f.term_at(center) {
        None => Ok(LaurentExpansion::zero(center)),
        Some(t) => Ok(mellin_of_block(t).recentered(center)?),
    }
}

/// `e_{σ₀,ϑ}(ψ)` given `prior = [e_{σ₀,0}ψ, …, e_{σ₀,ϑ-1}ψ]`.
pub fn e_step<T: Real>(
    a: &ConeOperator<T>,
    sigma0: Complex<T>,
    step: usize,
    prior: &[LogPowerFunction<T>],
) -> Result<LogPowerFunction<T>, ThetaError> {
    if step == 0 {
        return Ok(prior.first().cloned().unwrap_or_else(LogPowerFunction::zero));
    }
    if prior.len() < step {
        return Err(ThetaError::MissingPrior { step, got: prior.len(), needed: step });
    }
    let i = imag_unit::<T>();
    let target = step_exponent(sigma0, step);
    let mut rhs = LaurentExpansion::zero(target);
    for k in 1..=step.min(a.depth()) {
        let pk = a.conormal_symbol(k)?;
        let earlier = &prior[step - k];
        if pk.is_zero() || earlier.is_zero() {
            continue;
        }
        let shift = i * lit::<T>(k as f64);
        // P̂_k(σ + ik) about the target
        let symbol = LaurentExpansion::exact(target, 0, pk.taylor_shift(target + shift));
        let moved = mellin_at(earlier, step_exponent(sigma0, step - k))?
            .shift_argument(shift)
            .recentered(target)?;
        rhs = rhs.try_add(&symbol.try_mul(&moved)?)?;
    }
    let poles = rhs.pole_order();
    if poles == 0 {
        return Ok(LogPowerFunction::zero());
    }
    let inverse = laurent_inverse_of_polynomial(&a.conormal_symbol(0)?, target, poles as i32 - 1)?;
    let sing = inverse.try_mul(&rhs)?.singular_part();
    let depth = sing.pole_order();
    if depth > MAX_LOG_DEPTH + 1 {
        return Err(ThetaError::LogDepthExceeded { step, depth: depth - 1, cap: MAX_LOG_DEPTH });
    }
    let minus_one = -Complex::new(T::one(), T::zero());
    let coeffs = block_from_singular_part(&sing);
    Ok(LogPowerFunction::from_term(target, coeffs).scale(minus_one))
}

/// Corrections `e_{σ₀,0..=last}(ψ)` for a single-exponent `ψ`.
pub fn tail_steps<T: Real>(
    a: &ConeOperator<T>,
    psi: &LogPowerFunction<T>,
    last: usize,
) -> Result<Vec<LogPowerFunction<T>>, ThetaError> {
    let Some(sigma0) = single_exponent(psi)? else {
        return Ok(vec![LogPowerFunction::zero(); last + 1]);
    };
    let mut out = vec![psi.clone()];
    for step in 1..=last {
        let e = e_step(a, sigma0, step, &out)?;
        out.push(e);
    }
    Ok(out)
}

/// Number of correction steps in `J_{σ₀,ℓ} = {k ≥ 1 : Im σ₀ - k ≥ -m/2 - ℓ}`.
pub fn tail_length<T: Real>(a: &ConeOperator<T>, sigma0: Complex<T>, ell: usize) -> usize {
    let bound = sigma0.im + lit::<T>(a.order() as f64 / 2.0 + ell as f64);
    let slack = lit::<T>(1e-9);
    let n = (bound + slack).floor();
    if n < T::one() {
        0
    } else {
        n.to_subset().map_or(0, |v: f64| v as usize)
    }
}

/// `θ_ℓ^{-1}ψ = ψ + Σ_{k ∈ J_{σ₀,ℓ}} e_{σ₀,k}ψ`.
pub fn theta_inverse<T: Real>(
    a: &ConeOperator<T>,
    psi: &LogPowerFunction<T>,
    ell: usize,
) -> Result<ThetaTail<T>, ThetaError> {
    let Some(sigma0) = single_exponent(psi)? else {
        return Ok(ThetaTail { source: psi.clone(), steps: Vec::new(), total: psi.clone() });
    };
    let len = tail_length(a, sigma0, ell);
    let all = tail_steps(a, psi, len)?;
    Ok(assemble(psi, &all))
}

fn assemble<T: Real>(psi: &LogPowerFunction<T>, all: &[LogPowerFunction<T>]) -> ThetaTail<T> {
    let mut total = psi.clone();
    let mut steps = Vec::new();
    for (k, e) in all.iter().enumerate().skip(1) {
        total = &total + e;
        steps.push((k, e.clone()));
    }
    ThetaTail { source: psi.clone(), steps, total }
}

/// Correction tails for every canonical basis element, memoized per session.
///
/// A session belongs to one operator and one thread; it only ever grows.
#[derive(Debug)]
pub struct ThetaSession<T: Real> {
    op: ConeOperator<T>,
    basis: Vec<BasisLabel<T>>,
    memo: BTreeMap<usize, Vec<LogPowerFunction<T>>>,
}

impl<T: Real> ThetaSession<T> {
    pub fn new(op: &ConeOperator<T>) -> Result<Self, ThetaError> {
        Ok(Self { op: op.clone(), basis: canonical_basis(op)?, memo: BTreeMap::new() })
    }

    pub fn operator(&self) -> &ConeOperator<T> {
        &self.op
    }

    pub fn basis(&self) -> &[BasisLabel<T>] {
        &self.basis
    }

    /// Corrections `e_{σ₀,0..=last}` of basis element `index`.
    pub fn steps(&mut self, index: usize, last: usize) -> Result<&[LogPowerFunction<T>], ThetaError> {
        let label = self.basis[index];
        let cached = self.memo.get(&index).map_or(0, |v| v.len());
        if cached <= last {
            let mut v = self
                .memo
                .remove(&index)
                .unwrap_or_else(|| vec![label.function()]);
            for step in v.len()..=last {
                let e = e_step(&self.op, label.sigma, step, &v)?;
                v.push(e);
            }
            self.memo.insert(index, v);
        }
        Ok(&self.memo[&index][..=last])
    }

    /// `θ_ℓ^{-1}` of basis element `index`.
    pub fn tail(&mut self, index: usize, ell: usize) -> Result<ThetaTail<T>, ThetaError> {
        let label = self.basis[index];
        let len = tail_length(&self.op, label.sigma, ell);
        let psi = label.function();
        let all = self.steps(index, len)?.to_vec();
        Ok(assemble(&psi, &all))
    }

    /// Tails of all basis elements through `ϑ ≤ max(m, ℓ)`.
    pub fn theta_map(&mut self, ell: usize) -> Result<ThetaMap<T>, ThetaError> {
        let last = self.op.order().max(ell);
        let mut tails = Vec::with_capacity(self.basis.len());
        for index in 0..self.basis.len() {
            let psi = self.basis[index].function();
            let all = self.steps(index, last)?.to_vec();
            tails.push(assemble(&psi, &all));
        }
        Ok(ThetaMap { basis: self.basis.clone(), tails })
    }
}

/// The basis correspondence of `θ`: identity on the canonical basis, with the
/// tails that `θ^{-1}` attaches.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaMap<T: Real> {
    pub basis: Vec<BasisLabel<T>>,
    pub tails: Vec<ThetaTail<T>>,
}

impl<T: Real> ThetaMap<T> {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Matrix of `θ` in the canonical basis (the identity).
    pub fn matrix(&self) -> DMatrix<Complex<T>> {
        DMatrix::identity(self.basis.len(), self.basis.len())
    }

    /// `θ^{-1}` applied to the coordinate vector `w`.
    pub fn inverse_apply(&self, w: &[Complex<T>]) -> LogPowerFunction<T> {
        let mut out = LogPowerFunction::zero();
        for (tail, &wi) in self.tails.iter().zip(w) {
            if wi != czero() {
                out = &out + &tail.total.scale(wi);
            }
        }
        out
    }

    pub fn has_corrections(&self) -> bool {
        self.tails.iter().any(|t| t.steps.iter().any(|(_, e)| !e.is_zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{RightBoundary, SymbolicAction};
    use crate::scalar::c;

    fn perturbed(nu: f64, cpert: f64, depth: usize) -> ConeOperator<f64> {
        let mut a0 = vec![c(0.0, 0.0); depth + 1];
        a0[0] = c(nu * nu, 0.0);
        if depth >= 1 {
            a0[1] = c(cpert, 0.0);
        }
        let mut a2 = vec![c(0.0, 0.0); depth + 1];
        a2[0] = c(1.0, 0.0);
        ConeOperator::new(2, vec![a0, vec![c(0.0, 0.0); depth + 1], a2], RightBoundary::Dirichlet)
            .unwrap()
    }

    #[test]
    fn step_zero_is_identity() {
        let a = perturbed(0.5, 1.0, 3);
        let psi = LogPowerFunction::monomial(c(0.0, -0.5), 0);
        assert_eq!(e_step(&a, c(0.0, -0.5), 0, &[psi.clone()]).unwrap(), psi);
    }

    #[test]
    fn x_independent_tails_vanish() {
        let a = perturbed(0.5, 0.0, 4);
        for sigma in [c(0.0, -0.5), c(0.0, 0.5)] {
            let psi = LogPowerFunction::monomial(sigma, 0);
            for e in tail_steps(&a, &psi, 4).unwrap().iter().skip(1) {
                assert!(e.is_zero());
            }
        }
        let tail = theta_inverse(&a, &LogPowerFunction::monomial(c(0.0, -0.5), 0), 0).unwrap();
        assert!(tail.steps.is_empty());
    }

    #[test]
    fn first_correction_matches_frobenius() {
        for &(nu, cc) in &[(0.5, 1.0), (0.5, -0.3), (0.25, 2.0)] {
            let a = perturbed(nu, cc, 3);
            let sigma0 = c(0.0, -nu);
            let psi = LogPowerFunction::monomial(sigma0, 0);
            let steps = tail_steps(&a, &psi, 1).unwrap();
            let expect = cc / (2.0 * nu + 1.0);
            let got = steps[1].coeff(c(0.0, -nu - 1.0), 0);
            assert!((got - c(expect, 0.0)).norm() < 1e-12, "{got} vs {expect}");
            assert_eq!(steps[1].log_depth(), 0);
        }
    }

    #[test]
    fn ell_one_tail_for_perturbed_operator() {
        let a = perturbed(0.5, 1.0, 3);
        let tail = theta_inverse(&a, &LogPowerFunction::monomial(c(0.0, -0.5), 0), 1).unwrap();
        assert_eq!(tail.steps.len(), 1);
        assert!((tail.total.coeff(c(0.0, -1.5), 0) - c(0.5, 0.0)).norm() < 1e-12);
        assert!((tail.total.coeff(c(0.0, -0.5), 0) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn resonant_step_produces_log() {
        // x^{-1/2} → correction at x^{1/2}, itself an indicial root
        let a = perturbed(0.5, 1.0, 3);
        let psi = LogPowerFunction::monomial(c(0.0, 0.5), 0);
        let steps = tail_steps(&a, &psi, 1).unwrap();
        let e1 = &steps[1];
        assert_eq!(e1.log_depth(), 1);
        assert!((e1.coeff(c(0.0, -0.5), 1) - c(1.0, 0.0)).norm() < 1e-12);
        assert!((e1.coeff(c(0.0, -0.5), 0) - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn residual_gain_through_three_steps() {
        let a = perturbed(0.5, 1.0, 4);
        for sigma0 in [c(0.0, -0.5), c(0.0, 0.5)] {
            let psi = LogPowerFunction::monomial(sigma0, 0);
            let steps = tail_steps(&a, &psi, 3).unwrap();
            let mut u = LogPowerFunction::zero();
            for e in &steps {
                u = &u + e;
            }
            let image = a.apply_symbolic(&u, None).unwrap();
            for theta in 0..=3 {
                let exponent = step_exponent(sigma0, theta) + c(0.0, 2.0);
                if let Some(t) = image.term_at(exponent) {
                    for &v in &t.coeffs {
                        assert!(v.norm() < 1e-12, "ϑ={theta}: {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_tail() {
        let a = perturbed(0.5, 1.0, 3);
        let tail = theta_inverse(&a, &LogPowerFunction::zero(), 2).unwrap();
        assert!(tail.total.is_zero());
    }

    #[test]
    fn session_matches_free_functions() {
        let a = perturbed(0.5, 1.0, 3);
        let mut s = ThetaSession::new(&a).unwrap();
        let map = s.theta_map(0).unwrap();
        assert_eq!(map.dimension(), 2);
        assert!(map.has_corrections());
        assert_eq!(map.matrix(), DMatrix::identity(2, 2));
        let direct = tail_steps(&a, &map.basis[0].function(), 2).unwrap();
        assert_eq!(map.tails[0].steps.last().unwrap().1, direct[2]);

        let plain = perturbed(0.5, 0.0, 3);
        let map = ThetaSession::new(&plain).unwrap().theta_map(0).unwrap();
        assert!(!map.has_corrections());
    }
}
