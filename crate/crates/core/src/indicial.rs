//! Boundary spectrum, the strip `|Im σ| < m/2` and the wedge singular functions.

use num_complex::Complex;
use thiserror::Error;

use crate::operator::{ConeOperator, LogPowerFunction, OperatorError, SymbolicAction};
use crate::poly::Polynomial;
use crate::scalar::{cabs, factorial, lit, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndicialError {
    #[error("indicial root finding failed: residual {residual:.3e} exceeds tolerance")]
    RootFindingFailed { residual: f64 },
    #[error("indicial root {re:+.6e}{im:+.6e}i lies within {distance:.1e} of the strip boundary Im σ = ±m/2")]
    BoundaryProximity { re: f64, im: f64, distance: f64 },
    #[error("σ₀ = {re:+.6e}{im:+.6e}i is not a root of the indicial polynomial")]
    NotARoot { re: f64, im: f64 },
    #[error("singular function fails to solve the model equation (residual {residual:.3e})")]
    VerificationFailed { residual: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// A root `σ₀` of the indicial polynomial together with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndicialRoot<T: Real> {
    pub sigma: Complex<T>,
    pub multiplicity: usize,
}

impl<T: Real> IndicialRoot<T> {
    /// Real power `-Im σ₀` of the leading behaviour `x^{iσ₀}`.
    pub fn real_power(&self) -> T {
        -self.sigma.im
    }
}

/// Basis of the kernel of the model operator at one exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularBasis<T: Real> {
    pub sigma: Complex<T>,
    pub basis: Vec<LogPowerFunction<T>>,
}

/// One element `x^{iσ₀} log^k x` of the canonical basis of the maximal quotient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisLabel<T: Real> {
    pub sigma: Complex<T>,
    pub log_power: usize,
}

impl<T: Real> BasisLabel<T> {
    pub fn function(&self) -> LogPowerFunction<T> {
        LogPowerFunction::monomial(self.sigma, self.log_power)
    }
}

/// Distance below which a root is considered to sit on the strip boundary.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// Distance at which a root counts as lying exactly on a boundary line.
pub const ON_LINE_TOL: f64 = 1e-12;

fn residual_tol<T: Real>() -> T {
    lit::<T>(1e-10).max(T::default_epsilon() * lit(1e3))
}

fn merge_distance<T: Real>() -> T {
    T::default_epsilon().powf(lit(0.25))
}

fn newton<T: Real>(p: &Polynomial<T>, mut z: Complex<T>) -> Complex<T> {
    let dp = p.derivative();
    for _ in 0..50 {
        let d = dp.eval(z);
        if cabs(d) == T::zero() {
            break;
        }
        let step = p.eval(z) / d;
        z -= step;
        if cabs(step) <= T::default_epsilon() * (T::one() + cabs(z)) {
            break;
        }
    }
    z
}

/// `|p^{(j)}(z)| / j!` relative to the coefficient scale and `|z|`.
fn scaled_derivative<T: Real>(p: &Polynomial<T>, z: Complex<T>, j: usize) -> T {
    let mut q = p.clone();
    for _ in 0..j {
        q = q.derivative();
    }
    let deg = p.degree().unwrap_or(0) as i32;
    let scale = p.coefficient_scale() * (T::one() + cabs(z)).powi(deg);
    cabs(q.eval(z)) / factorial::<T>(j) / scale
}

/// Roots of `p` with multiplicities, clustered and refined.
pub fn polynomial_roots<T: Real>(p: &Polynomial<T>) -> Result<Vec<IndicialRoot<T>>, IndicialError> {
    let raw = p
        .roots()
        .ok_or(IndicialError::RootFindingFailed { residual: f64::INFINITY })?;
    // single-linkage clustering of the companion eigenvalues
    let mut clusters: Vec<Vec<Complex<T>>> = Vec::new();
    for z in raw {
        let hit = clusters.iter().position(|cl| {
            cl.iter()
                .any(|&w| cabs(w - z) <= merge_distance::<T>() * (T::one() + cabs(z)))
        });
        match hit {
            Some(i) => clusters[i].push(z),
            None => clusters.push(vec![z]),
        }
    }
    let tol = residual_tol::<T>();
    let mut out = Vec::new();
    for cl in clusters {
        let mu = cl.len();
        let mean = cl.iter().fold(Complex::new(T::zero(), T::zero()), |a, &b| a + b)
            / lit::<T>(mu as f64);
        let mut dmu = p.clone();
        for _ in 0..mu - 1 {
            dmu = dmu.derivative();
        }
        let z = newton(&dmu, mean);
        let worst = (0..mu)
            .map(|j| scaled_derivative(p, z, j))
            .fold(T::zero(), |a, b| a.max(b));
        if worst <= tol {
            out.push(IndicialRoot { sigma: z, multiplicity: mu });
            continue;
        }
        // not a genuine multiple root: refine members separately
        for w in cl {
            let z = newton(p, w);
            let r = scaled_derivative(p, z, 0);
            if r > tol {
                return Err(IndicialError::RootFindingFailed {
                    residual: r.to_subset().unwrap_or(f64::NAN),
                });
            }
            out.push(IndicialRoot { sigma: z, multiplicity: 1 });
        }
    }
    sort_roots(&mut out);
    Ok(out)
}

fn sort_roots<T: Real>(roots: &mut [IndicialRoot<T>]) {
    roots.sort_by(|a, b| {
        a.sigma
            .im
            .partial_cmp(&b.sigma.im)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.sigma.re.partial_cmp(&b.sigma.re).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// All roots of the indicial polynomial `P̂₀`, ordered by `Im σ`, then `Re σ`.
pub fn boundary_spectrum<T: Real>(a: &ConeOperator<T>) -> Result<Vec<IndicialRoot<T>>, IndicialError> {
    polynomial_roots(&a.conormal_symbol(0)?)
}

/// Roots strictly inside the strip `|Im σ| < m/2`.
///
/// Roots on a boundary line up to rounding are excluded (the strip is open).
/// A root off the line but closer than [`BOUNDARY_TOL`] is an error: it
/// changes the dimension of the maximal quotient and cannot be classified
/// reliably.
pub fn strip_sigma<T: Real>(a: &ConeOperator<T>) -> Result<Vec<IndicialRoot<T>>, IndicialError> {
    let half = lit::<T>(a.order() as f64 / 2.0);
    let mut out = Vec::new();
    for r in boundary_spectrum(a)? {
        let distance = (r.sigma.im.abs() - half).abs();
        let on_line = distance <= lit::<T>(ON_LINE_TOL) * (T::one() + cabs(r.sigma));
        if on_line {
            continue;
        }
        if distance < lit(BOUNDARY_TOL) {
            return Err(IndicialError::BoundaryProximity {
                re: r.sigma.re.to_subset().unwrap_or(f64::NAN),
                im: r.sigma.im.to_subset().unwrap_or(f64::NAN),
                distance: distance.to_subset().unwrap_or(f64::NAN),
            });
        }
        if r.sigma.im.abs() < half {
            out.push(r);
        }
    }
    Ok(out)
}

/// Kernel of the model operator at `root`: `{x^{iσ₀} log^k x : k < μ}`, verified symbolically.
pub fn wedge_singular_basis<T: Real>(
    a: &ConeOperator<T>,
    root: &IndicialRoot<T>,
) -> Result<SingularBasis<T>, IndicialError> {
    let p0 = a.conormal_symbol(0)?;
    if scaled_derivative(&p0, root.sigma, 0) > residual_tol::<T>() {
        return Err(IndicialError::NotARoot {
            re: root.sigma.re.to_subset().unwrap_or(f64::NAN),
            im: root.sigma.im.to_subset().unwrap_or(f64::NAN),
        });
    }
    let model = a.model_operator();
    let mut basis = Vec::with_capacity(root.multiplicity);
    for k in 0..root.multiplicity {
        let psi = LogPowerFunction::monomial(root.sigma, k);
        let image = model.apply_symbolic(&psi, Some(0))?;
        let scale = p0.coefficient_scale() * (T::one() + cabs(root.sigma)).powi(p0.degree().unwrap_or(0) as i32);
        let residual = image.max_abs_coeff() / scale;
        if residual > residual_tol::<T>() * lit(10.0) {
            return Err(IndicialError::VerificationFailed {
                residual: residual.to_subset().unwrap_or(f64::NAN),
            });
        }
        basis.push(psi);
    }
    Ok(SingularBasis { sigma: root.sigma, basis })
}

/// `dim D_max / D_min`: total multiplicity of the strip roots.
pub fn max_domain_dimension<T: Real>(a: &ConeOperator<T>) -> Result<usize, IndicialError> {
    Ok(strip_sigma(a)?.iter().map(|r| r.multiplicity).sum())
}

/// Canonical ordered basis of the maximal quotient: strip roots by `Im σ₀`,
/// then `Re σ₀`, then log power.
pub fn canonical_basis<T: Real>(a: &ConeOperator<T>) -> Result<Vec<BasisLabel<T>>, IndicialError> {
    let mut out = Vec::new();
    for r in strip_sigma(a)? {
        for k in 0..r.multiplicity {
            out.push(BasisLabel { sigma: r.sigma, log_power: k });
        }
    }
    Ok(out)
}

/// Whether `σ` is (numerically) a root of `P̂₀`; returns the multiplicity.
pub fn root_order<T: Real>(a: &ConeOperator<T>, sigma: Complex<T>) -> Result<usize, IndicialError> {
    let p0 = a.conormal_symbol(0)?;
    let deg = p0.degree().unwrap_or(0);
    let tol = residual_tol::<T>();
    Ok((0..=deg)
        .take_while(|&j| scaled_derivative(&p0, sigma, j) <= tol)
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::RightBoundary;
    use crate::scalar::c;

    fn op(p0: [f64; 3], p0_im: [f64; 3]) -> ConeOperator<f64> {
        ConeOperator::new(
            2,
            (0..3).map(|k| vec![c(p0[k], p0_im[k])]).collect(),
            RightBoundary::Dirichlet,
        )
        .unwrap()
    }

    #[test]
    fn bessel_half_roots() {
        let a = op([0.25, 0.0, 1.0], [0.0; 3]);
        let r = boundary_spectrum(&a).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].sigma - c(0.0, -0.5)).norm() < 1e-14);
        assert!((r[1].sigma - c(0.0, 0.5)).norm() < 1e-14);
        assert_eq!(max_domain_dimension(&a).unwrap(), 2);
        let basis = canonical_basis(&a).unwrap();
        assert_eq!(basis[0].sigma.im, r[0].sigma.im);
    }

    #[test]
    fn double_root_at_zero() {
        let a = op([0.0, 0.0, 1.0], [0.0; 3]);
        let r = boundary_spectrum(&a).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        let sb = wedge_singular_basis(&a, &r[0]).unwrap();
        assert_eq!(sb.basis.len(), 2);
        assert_eq!(max_domain_dimension(&a).unwrap(), 2);
    }

    #[test]
    fn straight_laplacian_strip() {
        // σ² + iσ
        let a = op([0.0, 0.0, 1.0], [0.0, 1.0, 0.0]);
        let all = boundary_spectrum(&a).unwrap();
        assert_eq!(all.len(), 2);
        assert!((all[0].sigma - c(0.0, -1.0)).norm() < 1e-14);
        let strip = strip_sigma(&a).unwrap();
        assert_eq!(strip.len(), 1);
        assert!(strip[0].sigma.norm() < 1e-14);
    }

    #[test]
    fn three_halves_empty_strip() {
        let a = op([2.25, 0.0, 1.0], [0.0; 3]);
        assert!(strip_sigma(&a).unwrap().is_empty());
        assert_eq!(max_domain_dimension(&a).unwrap(), 0);
    }

    #[test]
    fn near_boundary_root_aborts() {
        // roots ±i(1 - 1e-10): inside the strip, but indistinguishable from the line
        let r = 1.0 - 1e-10;
        let a = op([r * r, 0.0, 1.0], [0.0; 3]);
        assert!(matches!(strip_sigma(&a), Err(IndicialError::BoundaryProximity { .. })));
        // exactly on the line: excluded
        let a = op([1.0, 0.0, 1.0], [0.0; 3]);
        assert!(strip_sigma(&a).unwrap().is_empty());
    }

    #[test]
    fn non_root_rejected() {
        let a = op([0.25, 0.0, 1.0], [0.0; 3]);
        let fake = IndicialRoot { sigma: c(0.0, 0.3), multiplicity: 1 };
        assert!(matches!(wedge_singular_basis(&a, &fake), Err(IndicialError::NotARoot { .. })));
    }

    #[test]
    fn triple_root_clustered() {
        // (σ - 0.1i)^3 as a third-order operator
        let s = c::<f64>(0.0, 0.1);
        let p = &(&Polynomial::linear(s) * &Polynomial::linear(s)) * &Polynomial::linear(s);
        let a = ConeOperator::new(
            3,
            p.coeffs().iter().map(|&z| vec![z]).collect(),
            RightBoundary::Functionals(vec![vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]]),
        )
        .unwrap();
        let r = boundary_spectrum(&a).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 3);
        assert!((r[0].sigma - s).norm() < 1e-10);
        assert_eq!(root_order(&a, s).unwrap(), 3);
    }
}
