//! Round trips of the ray fitting on synthetic traces with known coefficients.

use conetrace_core::asymptotics::{detect_logs, fit_expansion, fit_model, ray_grid, ExpansionModel, FitOptions, RaySamples};
use conetrace_core::Complex64;
use proptest::prelude::*;

fn synthetic(coeffs: &[f64], log_amp: f64) -> RaySamples {
    let rs = ray_grid(1e2, 1e6, 40);
    // m = 2, ℓ = 1: r^{-1/2}, r^{-1}, ...; the injected log sits at j = 1
    let model = ExpansionModel::with_caps(2, 1, coeffs.len() - 1, &[]);
    let cs: Vec<Complex64> = coeffs.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    RaySamples::synthetic(std::f64::consts::PI, 1, 2, &rs, |r| model.eval(&cs, r) + log_amp * r.ln() / r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recovers_lattice_coefficients(coeffs in prop::collection::vec(-1.0..1.0f64, 5)) {
        prop_assume!(coeffs[0].abs() > 0.05);
        let fit = fit_expansion(&synthetic(&coeffs, 0.0), 4, &[], FitOptions::default()).unwrap();
        for (j, a) in coeffs.iter().enumerate() {
            let got = fit.coefficient(j, 0).unwrap();
            prop_assert!((got.re - a).abs() < 1e-7, "j={} got {} want {}", j, got, a);
        }
    }

    #[test]
    fn injected_log_is_detected(coeffs in prop::collection::vec(-1.0..1.0f64, 5), amp in 0.02..1.0f64, sign in prop::bool::ANY) {
        prop_assume!(coeffs[0].abs() > 0.05);
        let amp = if sign { amp } else { -amp };
        prop_assert_eq!(detect_logs(&synthetic(&coeffs, 0.0), 1, 10.0, 4, &[]).unwrap(), 0);
        prop_assert_eq!(detect_logs(&synthetic(&coeffs, amp), 1, 10.0, 4, &[]).unwrap(), 1);
    }
}

#[test]
fn lattice_shift_degrades_fit() {
    let samples = synthetic(&[0.5, -0.5, 0.3, 0.1, -0.2], 0.0);
    let opts = FitOptions { window: usize::MAX, ..FitOptions::default() };
    let model = ExpansionModel::with_caps(2, 1, 4, &[]);
    let good = fit_model(&samples, &model, opts).unwrap().residual_norm;
    let bad = fit_model(&samples, &model.clone().shifted(0.1), opts).unwrap().residual_norm;
    assert!(bad >= 10.0 * good.max(1e-16), "shifted {bad:e} vs lattice {good:e}");
}
