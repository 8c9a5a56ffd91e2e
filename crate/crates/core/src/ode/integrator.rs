//! Adaptive Gragg–Bulirsch–Stoer extrapolation for complex linear systems
//! `y' = C(t) y` with matrix-valued state.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::OdeError;

/// Right-hand side `C(t)`.
pub trait LinearField {
    fn dim(&self) -> usize;
    fn matrix(&self, t: f64, out: &mut DMatrix<Complex64>);
}

const SEQUENCE: [usize; 9] = [2, 4, 6, 8, 10, 12, 14, 16, 18];

/// Integrator state kept between calls so the step size carries over.
#[derive(Clone, Debug)]
pub struct Gbs {
    pub rel_tol: f64,
    pub abs_tol: f64,
    step: Option<f64>,
    pub steps_taken: usize,
}

impl Gbs {
    pub fn new(rel_tol: f64) -> Self {
        Self { rel_tol, abs_tol: 1e-300, step: None, steps_taken: 0 }
    }

    /// Advances `y` from `t0` to `t1` (either direction).
    pub fn integrate<F: LinearField>(
        &mut self,
        field: &F,
        t0: f64,
        t1: f64,
        y: &mut DMatrix<Complex64>,
    ) -> Result<(), OdeError> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let mut t = t0;
        let mut h = self.step.map_or(span.abs().min(0.1), |s| s.abs()).min(span.abs());
        let mut c = DMatrix::zeros(field.dim(), field.dim());
        let min_step = 1e-14 * (1.0 + t0.abs().max(t1.abs()));
        while (t1 - t) * dir > 0.0 {
            if h < min_step {
                return Err(OdeError::StepSizeUnderflow { t });
            }
            let remaining = (t1 - t).abs();
            let last = h >= remaining;
            let hh = if last { remaining } else { h };
            match self.attempt(field, t, hh * dir, y, &mut c) {
                Some((next, factor)) => {
                    *y = next;
                    t = if last { t1 } else { t + hh * dir };
                    self.steps_taken += 1;
                    h = hh * factor;
                    if !last {
                        self.step = Some(h);
                    }
                }
                None => h = hh * 0.25,
            }
        }
        Ok(())
    }

    fn midpoint<F: LinearField>(
        field: &F,
        t: f64,
        big_h: f64,
        n: usize,
        y: &DMatrix<Complex64>,
        c: &mut DMatrix<Complex64>,
    ) -> DMatrix<Complex64> {
        let h = big_h / n as f64;
        let hc = Complex64::new(h, 0.0);
        field.matrix(t, c);
        let mut z0 = y.clone();
        let mut z1 = y.clone();
        z1.gemm(hc, c, y, Complex64::new(1.0, 0.0));
        for i in 1..n {
            field.matrix(t + i as f64 * h, c);
            z0.gemm(hc * 2.0, c, &z1, Complex64::new(1.0, 0.0));
            std::mem::swap(&mut z0, &mut z1);
        }
        field.matrix(t + big_h, c);
        let mut out = z1.clone();
        out += &z0;
        out.gemm(hc, c, &z1, Complex64::new(1.0, 0.0));
        out * Complex64::new(0.5, 0.0)
    }

    /// One extrapolated step; returns the new state and a step-size factor.
    fn attempt<F: LinearField>(
        &self,
        field: &F,
        t: f64,
        big_h: f64,
        y: &DMatrix<Complex64>,
        c: &mut DMatrix<Complex64>,
    ) -> Option<(DMatrix<Complex64>, f64)> {
        let scale = y.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let mut table: Vec<DMatrix<Complex64>> = Vec::with_capacity(SEQUENCE.len());
        for (j, &n) in SEQUENCE.iter().enumerate() {
            let mut row = vec![Self::midpoint(field, t, big_h, n, y, c)];
            for k in 1..=j {
                let ratio = (n as f64 / SEQUENCE[j - k] as f64).powi(2) - 1.0;
                let next = &row[k - 1] + (&row[k - 1] - &table[k - 1]) / Complex64::new(ratio, 0.0);
                row.push(next);
            }
            if j >= 2 {
                let est = &row[j] - &row[j - 1];
                let out_scale = row[j].iter().fold(scale, |a, z| a.max(z.norm()));
                let tol = self.abs_tol + self.rel_tol * out_scale;
                let err = est.iter().fold(0.0f64, |a, z| a.max(z.norm())) / tol;
                if err <= 1.0 {
                    let expo = 1.0 / (2 * j + 1) as f64;
                    let mut factor = 0.94 * (0.65 / err.max(1e-10)).powf(expo);
                    // converging early means the step can grow beyond the order heuristic
                    if j <= 3 {
                        factor *= 1.5;
                    }
                    return Some((row.pop().unwrap(), factor.clamp(0.2, 4.0)));
                }
            }
            table = row;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation;
    impl LinearField for Rotation {
        fn dim(&self) -> usize {
            2
        }
        fn matrix(&self, _t: f64, out: &mut DMatrix<Complex64>) {
            out.fill(Complex64::new(0.0, 0.0));
            out[(0, 1)] = Complex64::new(1.0, 0.0);
            out[(1, 0)] = Complex64::new(-1.0, 0.0);
        }
    }

    #[test]
    fn harmonic_oscillator() {
        let mut y = DMatrix::from_column_slice(2, 1, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let mut g = Gbs::new(1e-13);
        g.integrate(&Rotation, 0.0, 10.0, &mut y).unwrap();
        assert!((y[(0, 0)].re - 10f64.cos()).abs() < 1e-11);
        assert!((y[(1, 0)].re + 10f64.sin()).abs() < 1e-11);
        g.integrate(&Rotation, 10.0, 0.0, &mut y).unwrap();
        assert!((y[(0, 0)].re - 1.0).abs() < 1e-11);
    }

    #[test]
    fn zero_state_stays_zero() {
        let mut y = DMatrix::zeros(2, 1);
        Gbs::new(1e-12).integrate(&Rotation, 0.0, 3.0, &mut y).unwrap();
        assert!(y.iter().all(|z| z.norm() == 0.0));
    }
}
