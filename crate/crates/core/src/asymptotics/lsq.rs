//! Column-scaled weighted least squares through the SVD.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct LsSolution {
    pub coeffs: Vec<Complex64>,
    pub std_errors: Vec<f64>,
    /// Unweighted residuals `y_i - model_i`.
    pub residuals: Vec<Complex64>,
    /// RMS of the weighted residuals.
    pub residual_norm: f64,
    /// Condition number of the column-scaled design matrix.
    pub condition: f64,
}

/// Minimizes `Σ w_i² |y_i - Σ_j c_j B_ij|²`, where `design[i][j] = B_ij`.
pub fn weighted_lsq(design: &[Vec<Complex64>], y: &[Complex64], weights: &[f64]) -> Option<LsSolution> {
    let n = y.len();
    let p = design.first().map_or(0, |r| r.len());
    if p == 0 || n < p {
        return None;
    }
    let mut a = DMatrix::from_fn(n, p, |i, j| design[i][j] * weights[i]);
    let b = DVector::from_fn(n, |i, _| y[i] * weights[i]);
    let scales: Vec<f64> = (0..p)
        .map(|j| {
            let s = a.column(j).norm();
            if s > 0.0 { 1.0 / s } else { 1.0 }
        })
        .collect();
    for j in 0..p {
        a.column_mut(j).scale_mut(scales[j]);
    }
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let z = svd.solve(&b, smax * 1e-15).ok()?;
    let coeffs: Vec<Complex64> = (0..p).map(|j| z[j] * scales[j]).collect();
    let residuals: Vec<Complex64> = (0..n)
        .map(|i| y[i] - design[i].iter().zip(&coeffs).map(|(bij, c)| bij * c).sum::<Complex64>())
        .collect();
    let wres: f64 = residuals.iter().zip(weights).map(|(r, w)| (r * w).norm_sqr()).sum();
    let residual_norm = (wres / n as f64).sqrt();
    let dof = (n - p).max(1) as f64;
    let sigma2 = wres / dof;
    let v_t = svd.v_t.as_ref()?;
    let std_errors = (0..p)
        .map(|j| {
            let var: f64 = (0..sv.len())
                .filter(|&k| sv[k] > smax * 1e-15)
                .map(|k| v_t[(k, j)].norm_sqr() / (sv[k] * sv[k]))
                .sum();
            (sigma2 * var).sqrt() * scales[j]
        })
        .collect();
    Some(LsSolution { coeffs, std_errors, residuals, residual_norm, condition })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_model() {
        let xs: Vec<f64> = (1..30).map(|i| i as f64 / 7.0).collect();
        let design: Vec<Vec<Complex64>> = xs.iter().map(|&x| vec![Complex64::new(1.0, 0.0), Complex64::new(x, 0.0), Complex64::new(x.ln(), 0.0)]).collect();
        let y: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(2.0 - 0.5 * x + 0.25 * x.ln(), x)).collect();
        let s = weighted_lsq(&design, &y, &vec![1.0; xs.len()]).unwrap();
        assert!((s.coeffs[0] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((s.coeffs[1] - Complex64::new(-0.5, 1.0)).norm() < 1e-12);
        assert!((s.coeffs[2] - Complex64::new(0.25, 0.0)).norm() < 1e-12);
        assert!(s.residual_norm < 1e-13);
    }
}
