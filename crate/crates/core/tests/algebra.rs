//! Property tests for the symbolic layer.

use conetrace_core::domain::kappa_matrix;
use conetrace_core::indicial::{max_domain_dimension, polynomial_roots, strip_sigma};
use conetrace_core::laurent::laurent_inverse_of_polynomial;
use conetrace_core::{
    Complex64, ConeOperator64, LaurentExpansion64, LogPowerFunction64, Polynomial64, RightBoundary, SymbolicAction,
};
use proptest::prelude::*;

fn cx() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn bessel(nu: f64, perturbation: f64) -> ConeOperator64 {
    ConeOperator64::new(
        2,
        vec![vec![c(nu * nu), c(perturbation)], vec![c(0.0), c(0.0)], vec![c(1.0), c(0.0)]],
        RightBoundary::Dirichlet,
    )
    .unwrap()
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #[test]
    fn laurent_product_evaluates_pointwise(
        a in prop::collection::vec(cx(), 1..5),
        b in prop::collection::vec(cx(), 1..5),
        lo_a in -3i32..2,
        lo_b in -3i32..2,
        center in cx(),
        offset in cx(),
    ) {
        prop_assume!(offset.norm() > 0.2);
        let fa = LaurentExpansion64::exact(center, lo_a, a);
        let fb = LaurentExpansion64::exact(center, lo_b, b);
        let s = center + offset;
        prop_assert!(close((&fa * &fb).eval(s), fa.eval(s) * fb.eval(s), 1e-10));
        prop_assert!(close((&fa + &fb).eval(s), fa.eval(s) + fb.eval(s), 1e-12));
    }

    #[test]
    fn inverse_times_polynomial_is_one(roots in prop::collection::vec(cx(), 1..4), pick in 0usize..4) {
        let p = roots.iter().fold(Polynomial64::constant(c(1.0)), |acc, &r| {
            let lin = Polynomial64::linear(r);
            let mut out = vec![Complex64::new(0.0, 0.0); acc.coeffs().len() + 1];
            for (i, &x) in acc.coeffs().iter().enumerate() {
                for (j, &y) in lin.coeffs().iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            Polynomial64::new(out)
        });
        let center = roots[pick % roots.len()];
        let inv = laurent_inverse_of_polynomial(&p, center, 4).unwrap();
        let prod = &inv * &LaurentExpansion64::from_polynomial(&p, center);
        prop_assert!(close(prod.coeff(0), c(1.0), 1e-6));
        for n in 1..=4 {
            prop_assert!(prod.coeff(n).norm() < 1e-5, "coefficient {} = {}", n, prod.coeff(n));
        }
    }

    #[test]
    fn symbolic_action_is_linear(
        nu in 0.05..2.0f64,
        pert in -1.0..1.0f64,
        e1 in cx(), e2 in cx(),
        k1 in 0usize..3, k2 in 0usize..3,
        alpha in cx(), beta in cx(),
    ) {
        let a = bessel(nu, pert);
        let f = LogPowerFunction64::monomial(e1, k1);
        let g = LogPowerFunction64::monomial(e2, k2);
        let h = &f.scale(alpha) + &g.scale(beta);
        let lhs = a.apply_symbolic(&h, None).unwrap();
        let rhs = &a.apply_symbolic(&f, None).unwrap().scale(alpha) + &a.apply_symbolic(&g, None).unwrap().scale(beta);
        let diff = &lhs - &rhs;
        prop_assert!(diff.max_abs_coeff() <= 1e-10 * (1.0 + lhs.max_abs_coeff()));
    }

    #[test]
    fn kappa_is_a_group_action(nu in 0.05..0.95f64, r1 in 0.2..5.0f64, r2 in 0.2..5.0f64) {
        let a = bessel(nu, 0.0);
        let k1 = kappa_matrix(&a, r1).unwrap();
        let k2 = kappa_matrix(&a, r2).unwrap();
        let k12 = kappa_matrix(&a, r1 * r2).unwrap();
        prop_assert!((&k1 * &k2 - &k12).norm() <= 1e-10 * k12.norm());
        let id = kappa_matrix(&a, 1.0).unwrap();
        prop_assert!((id.clone() - nalgebra::DMatrix::identity(id.nrows(), id.ncols())).norm() < 1e-12);
    }

    #[test]
    fn bessel_roots_are_symmetric(nu in 0.05..3.0f64) {
        prop_assume!((nu - 1.0).abs() > 1e-3);
        let roots = polynomial_roots(&bessel(nu, 0.0).conormal_symbol(0).unwrap()).unwrap();
        prop_assert_eq!(roots.len(), 2);
        for r in &roots {
            prop_assert!(roots.iter().any(|s| close(s.sigma, -r.sigma.conj(), 1e-10)));
            prop_assert!(roots.iter().any(|s| close(s.sigma, -r.sigma, 1e-10)));
            prop_assert!((r.sigma.im.abs() - nu).abs() < 1e-10);
        }
        let d = max_domain_dimension(&bessel(nu, 0.0)).unwrap();
        prop_assert_eq!(d, if nu < 1.0 { 2 } else { 0 });
    }
}

#[test]
fn double_root_at_zero() {
    let strip = strip_sigma(&bessel(0.0, 0.0)).unwrap();
    assert_eq!(strip.len(), 1);
    assert_eq!(strip[0].multiplicity, 2);
    assert!(strip[0].sigma.norm() < 1e-8);
}
