//! Domains as subspaces of the maximal quotient, the scaling action `κ_ρ`
//! and stationarity.

use nalgebra::{DMatrix, Schur, SVD};
use num_complex::Complex;
use thiserror::Error;

use crate::indicial::{canonical_basis, BasisLabel, IndicialError};
use crate::operator::{ConeOperator, OperatorError};
use crate::scalar::{binomial, cabs, cone, czero, imag_unit, lit, real_pow, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("domain matrix has {rows} rows, the maximal quotient has dimension {dim}")]
    DimensionMismatch { rows: usize, dim: usize },
    #[error("domain columns are linearly dependent (rank {rank} < {cols})")]
    DependentColumns { rank: usize, cols: usize },
    #[error("rank undecidable: singular value {value:.3e} too close to the threshold {tol:.3e}")]
    RankIndeterminate { value: f64, tol: f64 },
    #[error("generator and sampled scaling disagree on stationarity")]
    CrossCheckDisagreement,
    #[error("operator is not formally symmetric")]
    NotSymmetric,
    #[error("operator is not semibounded")]
    NotSemibounded,
    #[error("Friedrichs selection ambiguous at the real indicial root {re:+.6e} (multiplicity {multiplicity})")]
    SelectionAmbiguous { re: f64, multiplicity: usize },
    #[error("constructed domain failed the stationarity postcondition")]
    NotStationary,
    #[error("requested dimension {requested} outside 0..={dim}")]
    BadDimension { requested: usize, dim: usize },
    #[error(transparent)]
    Indicial(#[from] IndicialError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Relative threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-8;

/// Singular values within this factor of the threshold make a rank undecidable.
const RANK_BAND: f64 = 1e3;

/// `W ⊂ E_{∧,max}`: columns in the canonical basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec<T: Real> {
    pub basis: Vec<BasisLabel<T>>,
    pub w: DMatrix<Complex<T>>,
    pub label: String,
}

impl<T: Real> DomainSpec<T> {
    pub fn from_columns(
        a: &ConeOperator<T>,
        label: impl Into<String>,
        w: DMatrix<Complex<T>>,
    ) -> Result<Self, DomainError> {
        let basis = canonical_basis(a)?;
        Self::with_basis(basis, label, w)
    }

    pub fn with_basis(
        basis: Vec<BasisLabel<T>>,
        label: impl Into<String>,
        w: DMatrix<Complex<T>>,
    ) -> Result<Self, DomainError> {
        if w.nrows() != basis.len() {
            return Err(DomainError::DimensionMismatch { rows: w.nrows(), dim: basis.len() });
        }
        let rank = rank(&w, lit(RANK_TOL))?;
        if rank < w.ncols() {
            return Err(DomainError::DependentColumns { rank, cols: w.ncols() });
        }
        Ok(Self { basis, w, label: label.into() })
    }

    /// `D_min`: the zero subspace.
    pub fn minimal(a: &ConeOperator<T>) -> Result<Self, DomainError> {
        let d = canonical_basis(a)?.len();
        Self::from_columns(a, "min", DMatrix::zeros(d, 0))
    }

    /// `D_max`: the whole quotient.
    pub fn maximal(a: &ConeOperator<T>) -> Result<Self, DomainError> {
        let d = canonical_basis(a)?.len();
        Self::from_columns(a, "max", DMatrix::identity(d, d))
    }

    /// `d` (ambient) dimension.
    pub fn ambient(&self) -> usize {
        self.basis.len()
    }

    /// `d″`.
    pub fn dimension(&self) -> usize {
        self.w.ncols()
    }
}

/// Numerical rank with relative threshold `rel_tol · s_max`; errors when a
/// singular value falls in the undecidable band around the threshold.
pub fn rank<T: Real>(m: &DMatrix<Complex<T>>, rel_tol: T) -> Result<usize, DomainError> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Ok(0);
    }
    let sv = SVD::new(m.clone(), false, false).singular_values;
    let smax = sv.iter().fold(T::zero(), |a, &b| a.max(b));
    if smax == T::zero() {
        return Ok(0);
    }
    let tol = rel_tol * smax;
    let band = lit::<T>(RANK_BAND);
    let mut r = 0;
    for &s in sv.iter() {
        if s > tol / band && s < tol * band {
            return Err(DomainError::RankIndeterminate {
                value: s.to_subset().unwrap_or(f64::NAN),
                tol: tol.to_subset().unwrap_or(f64::NAN),
            });
        }
        if s >= tol * band {
            r += 1;
        }
    }
    Ok(r)
}

fn normalized_columns<T: Real>(w: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let mut out = w.clone();
    for mut col in out.column_iter_mut() {
        let n = col.iter().fold(T::zero(), |a, &z| a + z.norm_sqr()).sqrt();
        if n > T::zero() {
            col.iter_mut().for_each(|z| *z /= Complex::new(n, T::zero()));
        }
    }
    out
}

/// Matrix of `κ_ρ` on a basis.
pub fn kappa_on_basis<T: Real>(basis: &[BasisLabel<T>], m: usize, rho: T) -> DMatrix<Complex<T>> {
    let d = basis.len();
    let half = lit::<T>(m as f64 / 2.0);
    let log_rho = rho.ln();
    let mut out = DMatrix::zeros(d, d);
    for (col, b) in basis.iter().enumerate() {
        let lead = real_pow(rho, Complex::new(half, T::zero()) + imag_unit::<T>() * b.sigma);
        for (row, r) in basis.iter().enumerate() {
            if r.sigma == b.sigma && r.log_power <= b.log_power {
                let j = r.log_power;
                let k = b.log_power;
                out[(row, col)] =
                    lead * binomial::<T>(k, j) * log_rho.powi((k - j) as i32);
            }
        }
    }
    out
}

/// Infinitesimal generator of `κ` on a basis.
pub fn generator_on_basis<T: Real>(basis: &[BasisLabel<T>], m: usize) -> DMatrix<Complex<T>> {
    let d = basis.len();
    let half = lit::<T>(m as f64 / 2.0);
    let mut out = DMatrix::zeros(d, d);
    for (col, b) in basis.iter().enumerate() {
        out[(col, col)] = Complex::new(half, T::zero()) + imag_unit::<T>() * b.sigma;
        for (row, r) in basis.iter().enumerate() {
            if r.sigma == b.sigma && r.log_power + 1 == b.log_power {
                out[(row, col)] = Complex::new(lit(b.log_power as f64), T::zero());
            }
        }
    }
    out
}

/// `κ_ρ` on the canonical basis of `E_{∧,max}`.
pub fn kappa_matrix<T: Real>(a: &ConeOperator<T>, rho: T) -> Result<DMatrix<Complex<T>>, DomainError> {
    Ok(kappa_on_basis(&canonical_basis(a)?, a.order(), rho))
}

/// Generator `T` together with the group it exponentiates to.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaData<T: Real> {
    pub basis: Vec<BasisLabel<T>>,
    pub order: usize,
    pub t: DMatrix<Complex<T>>,
}

impl<T: Real> KappaData<T> {
    pub fn kappa(&self, rho: T) -> DMatrix<Complex<T>> {
        kappa_on_basis(&self.basis, self.order, rho)
    }

    /// `exp((log ρ) T)` by scaling and squaring with a Taylor core.
    pub fn exp_generator(&self, rho: T) -> DMatrix<Complex<T>> {
        matrix_exp(&(self.t.clone() * Complex::new(rho.ln(), T::zero())))
    }
}

pub fn generator<T: Real>(a: &ConeOperator<T>) -> Result<KappaData<T>, DomainError> {
    let basis = canonical_basis(a)?;
    let t = generator_on_basis(&basis, a.order());
    Ok(KappaData { basis, order: a.order(), t })
}

/// Matrix exponential (scaling and squaring, degree-18 Taylor core).
pub fn matrix_exp<T: Real>(x: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let n = x.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = x.iter().fold(T::zero(), |a, &z| a + cabs(z));
    let mut squarings = 0;
    let mut scale = T::one();
    while norm * scale > lit(0.5) {
        scale /= lit(2.0);
        squarings += 1;
    }
    let y = x * Complex::new(scale, T::zero());
    let mut term = DMatrix::<Complex<T>>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=18 {
        term = &term * &y * Complex::new(T::one() / lit::<T>(k as f64), T::zero());
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Sample points of the κ cross-check.
pub const CROSS_CHECK_RHO: [f64; 3] = [2.0, std::f64::consts::E, 10.0];

/// `W` is `κ`-invariant iff `rank [W | T W] = rank W`; cross-checked against
/// `κ_ρ` for `ρ ∈ {2, e, 10}`.
pub fn is_stationary<T: Real>(
    a: &ConeOperator<T>,
    w: &DomainSpec<T>,
    tol: T,
) -> Result<bool, DomainError> {
    is_invariant(&generator(a)?, &w.w, tol)
}

/// Invariance test against given generator data.
pub fn is_invariant<T: Real>(
    data: &KappaData<T>,
    w: &DMatrix<Complex<T>>,
    tol: T,
) -> Result<bool, DomainError> {
    if w.ncols() == 0 || w.ncols() == w.nrows() {
        return Ok(true);
    }
    let w = normalized_columns(w);
    let base = rank(&w, tol)?;
    let stacked = |image: DMatrix<Complex<T>>| {
        let mut m = DMatrix::zeros(w.nrows(), 2 * w.ncols());
        m.columns_mut(0, w.ncols()).copy_from(&w);
        m.columns_mut(w.ncols(), w.ncols()).copy_from(&normalized_columns(&image));
        m
    };
    let by_generator = rank(&stacked(&data.t * &w), tol)? == base;
    for &rho in &CROSS_CHECK_RHO {
        let by_kappa = rank(&stacked(data.kappa(lit(rho)) * &w), tol)? == base;
        if by_kappa != by_generator {
            return Err(DomainError::CrossCheckDisagreement);
        }
    }
    Ok(by_generator)
}

/// Outcome of enumerating invariant subspaces.
#[derive(Clone, Debug, PartialEq)]
pub enum StationaryDomains<T: Real> {
    Finite(Vec<DomainSpec<T>>),
    ContinuumOfInvariantSubspaces,
}

/// All `κ`-invariant subspaces of dimension `d″`.
///
/// Distinct exponents give distinct generator eigenvalues with one Jordan
/// chain each, so the invariant subspaces are the sums of initial segments of
/// the chains.
pub fn stationary_domains<T: Real>(
    a: &ConeOperator<T>,
    dim: usize,
) -> Result<StationaryDomains<T>, DomainError> {
    let data = generator(a)?;
    let d = data.basis.len();
    if dim > d {
        return Err(DomainError::BadDimension { requested: dim, dim: d });
    }
    invariant_subspaces(&data.basis, &data.t, dim)
}

/// Invariant subspaces of dimension `dim` of an arbitrary `T`, expressed in `basis`.
pub fn invariant_subspaces<T: Real>(
    basis: &[BasisLabel<T>],
    t: &DMatrix<Complex<T>>,
    dim: usize,
) -> Result<StationaryDomains<T>, DomainError> {
    let d = t.nrows();
    if dim > d {
        return Err(DomainError::BadDimension { requested: dim, dim: d });
    }
    if d == 0 {
        return Ok(StationaryDomains::Finite(vec![DomainSpec {
            basis: basis.to_vec(),
            w: DMatrix::zeros(0, 0),
            label: "invariant[]".into(),
        }]));
    }
    // eigenvalue clusters with algebraic multiplicities
    let schur = Schur::try_new(t.clone(), T::default_epsilon(), 10_000)
        .ok_or(DomainError::RankIndeterminate { value: f64::NAN, tol: f64::NAN })?;
    let (_, tri) = schur.unpack();
    let scale = T::one() + t.iter().fold(T::zero(), |a, &z| a.max(cabs(z)));
    let merge = T::default_epsilon().powf(lit(0.25)) * scale;
    let mut clusters: Vec<(Complex<T>, usize)> = Vec::new();
    for i in 0..d {
        let z = tri[(i, i)];
        match clusters.iter_mut().find(|(c, _)| cabs(*c - z) <= merge) {
            Some(entry) => entry.1 += 1,
            None => clusters.push((z, 1)),
        }
    }
    let eye = DMatrix::<Complex<T>>::identity(d, d);
    let tol = lit::<T>(RANK_TOL);
    let mut chains = Vec::new();
    for &(lambda, mu) in &clusters {
        let shifted = t - &eye * lambda;
        let geometric = d - rank(&shifted, tol)?;
        if geometric > 1 && dim > 0 && dim < d {
            return Ok(StationaryDomains::ContinuumOfInvariantSubspaces);
        }
        // nested kernels ker (T - λ)^j, j = 0..=μ
        let mut kernels = vec![DMatrix::zeros(d, 0)];
        let mut power = eye.clone();
        for _ in 0..mu {
            power = &power * &shifted;
            kernels.push(null_space(&power, tol)?);
        }
        chains.push(kernels);
    }
    let mut out = Vec::new();
    let mut counts = vec![0usize; chains.len()];
    enumerate(&chains, &clusters, 0, dim, &mut counts, &mut |counts| {
        let cols: usize = counts.iter().sum();
        let mut w = DMatrix::zeros(d, cols);
        let mut at = 0;
        for (chain, &j) in chains.iter().zip(counts) {
            let k = &chain[j];
            w.columns_mut(at, k.ncols()).copy_from(k);
            at += k.ncols();
        }
        let label = format!("invariant{counts:?}");
        out.push(DomainSpec { basis: basis.to_vec(), w, label });
    });
    Ok(StationaryDomains::Finite(out))
}

fn enumerate<T: Real>(
    chains: &[Vec<DMatrix<Complex<T>>>],
    clusters: &[(Complex<T>, usize)],
    at: usize,
    remaining: usize,
    counts: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if at == chains.len() {
        if remaining == 0 {
            emit(counts);
        }
        return;
    }
    for j in 0..=clusters[at].1.min(remaining) {
        counts[at] = j;
        enumerate(chains, clusters, at + 1, remaining - j, counts, emit);
    }
    counts[at] = 0;
}

/// Orthonormal basis of the null space, with canonical phases for unit-vector
/// kernels so that coordinate subspaces come out as coordinate columns.
fn null_space<T: Real>(m: &DMatrix<Complex<T>>, tol: T) -> Result<DMatrix<Complex<T>>, DomainError> {
    let n = m.ncols();
    let r = rank(m, tol)?;
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("requested V^T");
    // order singular values descending
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut rows: Vec<usize> = idx[r..].to_vec();
    // rows of V^T beyond the reported singular values (wide matrices)
    rows.extend(svd.singular_values.len()..v_t.nrows());
    let mut out = DMatrix::zeros(n, rows.len());
    for (c, &row) in rows.iter().enumerate() {
        for j in 0..n {
            out[(j, c)] = v_t[(row, j)].conj();
        }
    }
    Ok(canonicalize(out))
}

// Row-reduce the columns so the span is represented by a reduced echelon basis.
fn canonicalize<T: Real>(mut w: DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let (n, k) = w.shape();
    let mut pivot_row = 0;
    let tiny = lit::<T>(1e-12);
    for col in 0..k {
        // choose the first row (from pivot_row on) with a substantial entry
        let mut best = None;
        for row in pivot_row..n {
            let v = (0..k).skip(col).map(|c| cabs(w[(row, c)])).fold(T::zero(), |a, b| a.max(b));
            if v > tiny {
                best = Some(row);
                break;
            }
        }
        let Some(row) = best else { break };
        // bring the largest entry of this row into column `col`
        let mut piv = col;
        for c in col..k {
            if cabs(w[(row, c)]) > cabs(w[(row, piv)]) {
                piv = c;
            }
        }
        w.swap_columns(col, piv);
        let p = w[(row, col)];
        for j in 0..n {
            w[(j, col)] /= p;
        }
        for c in 0..k {
            if c != col {
                let f = w[(row, c)];
                for j in 0..n {
                    let v = w[(j, col)];
                    w[(j, c)] -= f * v;
                }
            }
        }
        pivot_row = row + 1;
    }
    w.iter_mut().for_each(|z| {
        if cabs(*z) < tiny {
            *z = czero();
        }
    });
    w
}

/// Friedrichs extension.
///
/// Keeps the strip functions with `Im σ₀ < 0` (the larger real power) and,
/// for a real root of even multiplicity `μ`, its log powers `k < μ/2`.
/// Requires a formally symmetric operator whose indicial polynomial is
/// non-negative on the real line with positive leading coefficient.
pub fn friedrichs_domain<T: Real>(a: &ConeOperator<T>) -> Result<DomainSpec<T>, DomainError> {
    if !a.is_formally_symmetric(lit(1e-12)) {
        return Err(DomainError::NotSymmetric);
    }
    if !is_semibounded(a)? {
        return Err(DomainError::NotSemibounded);
    }
    let basis = canonical_basis(a)?;
    let tiny = lit::<T>(1e-10);
    let mut cols = Vec::new();
    for (i, b) in basis.iter().enumerate() {
        if b.sigma.im < -tiny {
            cols.push(i);
        } else if b.sigma.im.abs() <= tiny {
            let mu = basis.iter().filter(|c| c.sigma == b.sigma).count();
            if mu % 2 == 1 {
                return Err(DomainError::SelectionAmbiguous {
                    re: b.sigma.re.to_subset().unwrap_or(f64::NAN),
                    multiplicity: mu,
                });
            }
            if 2 * b.log_power < mu {
                cols.push(i);
            }
        }
    }
    let mut w = DMatrix::zeros(basis.len(), cols.len());
    for (c, &i) in cols.iter().enumerate() {
        w[(i, c)] = cone();
    }
    let spec = DomainSpec::with_basis(basis, "friedrichs", w)?;
    if !is_stationary(a, &spec, lit(RANK_TOL))? {
        return Err(DomainError::NotStationary);
    }
    Ok(spec)
}

/// Numerical semiboundedness screen: `a_m` real positive on `[0, 1]` and
/// `P̂₀` real non-negative on a grid of the real line.
pub fn is_semibounded<T: Real>(a: &ConeOperator<T>) -> Result<bool, DomainError> {
    let m = a.order();
    let tol = lit::<T>(1e-12);
    for i in 0..=200 {
        let x = lit::<T>(i as f64 / 200.0);
        let am = a.coefficient(m, x);
        if am.re <= T::zero() || am.im.abs() > tol * (T::one() + am.re) {
            return Ok(false);
        }
    }
    let p0 = a.conormal_symbol(0)?;
    let scale = p0.coefficient_scale();
    for i in -400..=400 {
        // dense near 0, reaching |σ| = 1e3
        let s = lit::<T>((i as f64 / 400.0).powi(3) * 1e3);
        let v = p0.eval(Complex::new(s, T::zero()));
        let mag = scale * (T::one() + s.abs()).powi(m as i32);
        if v.im.abs() > tol * mag || v.re < -tol * mag {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::RightBoundary;
    use crate::scalar::c;

    fn bessel(nu: f64) -> ConeOperator<f64> {
        ConeOperator::new(
            2,
            vec![vec![c(nu * nu, 0.0)], vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap()
    }

    fn close(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>, tol: f64) -> bool {
        a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn kappa_examples() {
        let k = kappa_matrix(&bessel(0.5), 4.0).unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(8.0, 0.0), c(2.0, 0.0)]));
        assert!(close(&k, &expect, 1e-13));
        assert!(close(&kappa_matrix(&bessel(0.5), 1.0).unwrap(), &DMatrix::identity(2, 2), 0.0));
        let e = std::f64::consts::E;
        let k0 = kappa_matrix(&bessel(0.0), e).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[c(e, 0.0), c(e, 0.0), c(0.0, 0.0), c(e, 0.0)]);
        assert!(close(&k0, &expect, 1e-13));
    }

    #[test]
    fn generator_examples() {
        let g = generator(&bessel(0.5)).unwrap();
        assert!(close(
            &g.t,
            &DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]),
            1e-14
        ));
        let g0 = generator(&bessel(0.0)).unwrap();
        assert!(close(
            &g0.t,
            &DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
            1e-14
        ));
        assert_eq!(generator(&bessel(1.5)).unwrap().t.shape(), (0, 0));
        for g in [&g, &g0] {
            for rho in [2.0, std::f64::consts::E] {
                assert!(close(&g.exp_generator(rho), &g.kappa(rho), 1e-8));
            }
        }
    }

    #[test]
    fn stationarity_examples() {
        let a = bessel(0.5);
        let col = |v: [f64; 2]| DMatrix::from_column_slice(2, 1, &[c(v[0], 0.0), c(v[1], 0.0)]);
        let dir = DomainSpec::from_columns(&a, "dir", col([1.0, 0.0])).unwrap();
        assert!(is_stationary(&a, &dir, RANK_TOL).unwrap());
        let robin = DomainSpec::from_columns(&a, "robin", col([1.0, 1.0])).unwrap();
        assert!(!is_stationary(&a, &robin, RANK_TOL).unwrap());
        let max = DomainSpec::maximal(&a).unwrap();
        assert!(is_stationary(&a, &max, RANK_TOL).unwrap());
        assert!(is_stationary(&a, &DomainSpec::minimal(&a).unwrap(), RANK_TOL).unwrap());
    }

    #[test]
    fn enumerate_stationary_lines() {
        let StationaryDomains::Finite(lines) = stationary_domains(&bessel(0.5), 1).unwrap() else {
            panic!("finite expected")
        };
        assert_eq!(lines.len(), 2);
        let StationaryDomains::Finite(lines0) = stationary_domains(&bessel(0.0), 1).unwrap() else {
            panic!("finite expected")
        };
        assert_eq!(lines0.len(), 1);
        // the invariant line of a Jordan block is span{1}
        let w = &lines0[0].w;
        assert!(w[(1, 0)].norm() < 1e-12 && w[(0, 0)].norm() > 0.5);

        let basis = canonical_basis(&bessel(0.5)).unwrap();
        let scalar: DMatrix<Complex<f64>> = DMatrix::identity(2, 2) * c(0.7, 0.0);
        assert_eq!(
            invariant_subspaces(&basis, &scalar, 1).unwrap(),
            StationaryDomains::ContinuumOfInvariantSubspaces
        );
    }

    #[test]
    fn friedrichs_examples() {
        let f = friedrichs_domain(&bessel(0.5)).unwrap();
        assert_eq!(f.dimension(), 1);
        assert!((f.w[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(f.basis[0].sigma.im < 0.0);

        let f0 = friedrichs_domain(&bessel(0.0)).unwrap();
        assert_eq!(f0.dimension(), 1);
        assert_eq!(f0.basis[0].log_power, 0);
        assert!((f0.w[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);

        let f3 = friedrichs_domain(&bessel(1.5)).unwrap();
        assert_eq!((f3.ambient(), f3.dimension()), (0, 0));
    }

    #[test]
    fn friedrichs_rejects_nonsymmetric() {
        let a = ConeOperator::<f64>::new(
            2,
            vec![vec![c(0.0, 0.0)], vec![c(0.0, 1.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap();
        assert_eq!(friedrichs_domain(&a), Err(DomainError::NotSymmetric));
        // symmetric but indefinite indicial polynomial σ² - 1/4
        let b = ConeOperator::<f64>::new(
            2,
            vec![vec![c(-0.25, 0.0)], vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]],
            RightBoundary::Dirichlet,
        )
        .unwrap();
        assert_eq!(friedrichs_domain(&b), Err(DomainError::NotSemibounded));
    }

    #[test]
    fn dependent_columns_rejected() {
        let a = bessel(0.5);
        let w = DMatrix::from_column_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0)]);
        assert!(matches!(
            DomainSpec::from_columns(&a, "bad", w),
            Err(DomainError::DependentColumns { .. })
        ));
    }
}
