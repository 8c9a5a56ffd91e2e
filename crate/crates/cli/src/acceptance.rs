//! The acceptance suite behind `conetrace selftest`: closed-form Bessel
//! oracles for `A_ν = x^{-2}((xD_x)² + ν²)` on `(0, 1]`, Dirichlet at `x = 1`.

use std::f64::consts::{E, PI};
use std::sync::OnceLock;
use std::time::Instant;

use conetrace_core::asymptotics::{
    detect_logs, fit_expansion, fit_heat, fit_model, heat_trace, ray_grid, residual_decay, sample_ray, zeta_report,
    ExpansionModel, FitOptions, PoleStatus, RaySamples,
};
use conetrace_core::domain::{friedrichs_domain, generator, is_stationary, stationary_domains, DomainSpec, StationaryDomains};
use conetrace_core::indicial::canonical_basis;
use conetrace_core::ode::eigen::{eigen_trace, eigenvalues, Region};
use conetrace_core::ode::frobenius::frobenius_series;
use conetrace_core::ode::system::Problem;
use conetrace_core::ode::trace::{composed_trace, green_trace};
use conetrace_core::ode::Numerics;
use conetrace_core::operator::{LogPowerFunction, SymbolicAction};
use conetrace_core::theta::{step_exponent, tail_steps};
use conetrace_core::{ConeOperator, Polynomial, RightBoundary, Sector};
use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Observed values; free of timings so reports stay byte-stable.
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{}] {}: {} ({:.2} s)", self.id, self.name, self.detail, self.seconds)
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `A_ν` plus an optional `c·x^{-2}·x` perturbation, Taylor depth `depth`.
pub fn bessel(nu: f64, perturbation: f64, depth: usize) -> ConeOperator<f64> {
    let mut a0 = vec![c(0.0); depth + 1];
    a0[0] = c(nu * nu);
    if depth >= 1 {
        a0[1] = c(perturbation);
    }
    let mut a2 = vec![c(0.0); depth + 1];
    a2[0] = c(1.0);
    ConeOperator::new(2, vec![a0, vec![c(0.0); depth + 1], a2], RightBoundary::Dirichlet).expect("valid operator")
}

/// `W = span{a·x^{1/2} + b·x^{-1/2}}` for `A_{1/2}`.
pub fn half_domain(a: f64, b: f64, label: &str) -> DomainSpec<f64> {
    let op = bessel(0.5, 0.0, 2);
    let basis = canonical_basis(&op).expect("basis");
    // canonical order puts x^{1/2} (σ = -i/2) first
    assert!(basis[0].sigma.im < 0.0);
    DomainSpec::with_basis(basis, label, DMatrix::from_column_slice(2, 1, &[c(a), c(b)])).expect("domain")
}

fn half_problem(domain: &DomainSpec<f64>) -> Problem {
    Problem::new(&bessel(0.5, 0.0, 2), domain, Numerics::default()).expect("problem")
}

fn friedrichs() -> Problem {
    half_problem(&half_domain(1.0, 0.0, "friedrichs"))
}

fn neumann() -> Problem {
    half_problem(&half_domain(0.0, 1.0, "span{x^-1/2}"))
}

fn robin() -> Problem {
    half_problem(&half_domain(1.0, 1.0, "span{x^-1/2 + x^1/2}"))
}

fn one() -> Polynomial<f64> {
    Polynomial::constant(c(1.0))
}

pub const RAY_MIN: f64 = 1e2;
pub const RAY_MAX: f64 = 1e6;
pub const RAY_POINTS: usize = 40;
const HEAT_EIGENVALUES: usize = 200;

fn ray(p: &Problem) -> RaySamples {
    sample_ray(p, 1, &one(), &Sector::new(PI, PI / 4.0), RAY_MIN, RAY_MAX, RAY_POINTS).expect("admissible ray")
}

fn friedrichs_ray() -> &'static RaySamples {
    static CELL: OnceLock<RaySamples> = OnceLock::new();
    CELL.get_or_init(|| ray(&friedrichs()))
}

fn friedrichs_spectrum() -> &'static Result<Vec<f64>, String> {
    static CELL: OnceLock<Result<Vec<f64>, String>> = OnceLock::new();
    CELL.get_or_init(|| {
        eigenvalues(&friedrichs(), Region::Interval { lo: 0.0, hi: f64::MAX }, HEAT_EIGENVALUES)
            .map(|e| e.iter().map(|v| v.value.re).collect())
            .map_err(|e| e.to_string())
    })
}

struct Checks {
    ok: bool,
    notes: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self { ok: true, notes: Vec::new() }
    }

    fn check(&mut self, pass: bool, note: String) {
        if !pass {
            self.ok = false;
            self.notes.push(format!("FAILED {note}"));
        } else {
            self.notes.push(note);
        }
    }

    fn near(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, format!("{what}={got:.9} (want {want} ± {tol:.0e})"));
    }

    fn error(&mut self, what: &str, e: impl std::fmt::Display) {
        self.check(false, format!("{what}: {e}"));
    }

    fn finish(self, id: u8, name: &'static str, start: Instant, limit: Option<f64>) -> Criterion {
        let seconds = start.elapsed().as_secs_f64();
        let mut ok = self.ok;
        let mut notes = self.notes;
        if let Some(l) = limit {
            if seconds > l {
                ok = false;
                notes.push(format!("FAILED runtime above {l} s"));
            }
        }
        Criterion { id, name, passed: ok, detail: notes.join("; "), seconds }
    }
}

pub fn eigenvalue_oracles() -> Criterion {
    let start = Instant::now();
    let mut ch = Checks::new();
    for (p, shift, name) in [(friedrichs(), 0.0, "friedrichs"), (neumann(), 0.5, "span{x^-1/2}")] {
        match eigenvalues(&p, Region::Interval { lo: 0.0, hi: f64::MAX }, 10) {
            Ok(e) if e.len() == 10 => {
                let worst = e
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let want = ((k as f64 + 1.0 - shift) * PI).powi(2);
                        ((v.value.re - want) / want).abs()
                    })
                    .fold(0.0, f64::max);
                ch.check(worst <= 1e-8, format!("{name} max rel err {worst:.1e}"));
            }
            Ok(e) => ch.check(false, format!("{name}: found {} eigenvalues", e.len())),
            Err(e) => ch.error(name, e),
        }
    }
    ch.finish(1, "eigenvalues", start, Some(10.0))
}

pub fn point_traces() -> Criterion {
    let start = Instant::now();
    let mut ch = Checks::new();
    let cases = [
        (friedrichs(), 1, 0.5 * (1.0 / 1f64.tanh() - 1.0), "friedrichs l=1"),
        (neumann(), 1, 0.5 * 1f64.tanh(), "span{x^-1/2} l=1"),
        // -S'(1)/2 with S(a) = (a coth a - 1)/(2a²)
        (friedrichs(), 2, {
            let (a, coth) = (1.0f64, 1.0 / 1f64.tanh());
            let csch2 = 1.0 / 1f64.sinh().powi(2);
            let ds = ((coth - a * csch2) * a * a - 2.0 * a * (a * coth - 1.0)) / (2.0 * a.powi(4));
            -ds / 2.0
        }, "friedrichs l=2"),
    ];
    let pinned = [0.1565176, 0.3807970, 0.0092743];
    for ((p, ell, exact, name), pin) in cases.into_iter().zip(pinned) {
        let t = Instant::now();
        match green_trace(&p, c(-1.0), ell, &one()) {
            Ok(s) => {
                ch.near(name, s.value.re, pin, 1e-6);
                ch.check((s.value.re - exact).abs() <= 1e-9, format!("closed form diff {:.1e}", (s.value.re - exact).abs()));
                let secs = t.elapsed().as_secs_f64();
                ch.check(secs < 5.0, format!("{secs:.2}s"));
            }
            Err(e) => ch.error(name, e),
        }
    }
    ch.finish(2, "point traces", start, None)
}

pub fn ray_fits() -> Criterion {
    let start = Instant::now();
    let mut ch = Checks::new();
    let opts = FitOptions::default();
    let fr = friedrichs_ray();
    let ne = ray(&neumann());
    for s in [fr, &ne] {
        ch.check(s.failures.is_empty() && s.samples.len() == RAY_POINTS, format!("{}: {} samples", s.domain_label, s.samples.len()));
    }
    match (fit_expansion(fr, 4, &[0, 1], opts), fit_expansion(&ne, 4, &[0, 1], opts)) {
        (Ok(f), Ok(n)) => {
            let a = |fit: &conetrace_core::asymptotics::FitResult, j, k| fit.coefficient(j, k).map_or(f64::NAN, |z| z.re);
            ch.near("F a00", a(&f, 0, 0), 0.5, 1e-3);
            ch.near("F a10", a(&f, 1, 0), -0.5, 1e-2);
            ch.near("F a11", a(&f, 1, 1), 0.0, 1e-3);
            let high = f.terms.iter().filter(|t| t.j >= 2).map(|t| t.alpha.norm()).fold(0.0, f64::max);
            ch.check(high < 1e-3, format!("F max|a_j>=2|={high:.1e}"));
            ch.near("N a00", a(&n, 0, 0), 0.5, 1e-3);
            ch.near("N a10", a(&n, 1, 0), 0.0, 1e-2);
            let delta = (a(&f, 0, 0) - a(&n, 0, 0)).abs();
            ch.check(delta < 2e-3, format!("a00 delta {delta:.1e}"));
        }
        (Err(e), _) | (_, Err(e)) => ch.error("fit", e),
    }
    ch.finish(3, "ray expansion", start, Some(120.0))
}

pub fn log_rules() -> Criterion {
    let start = Instant::now();
    let mut ch = Checks::new();
    let fr = friedrichs_ray();
    for j in 0..=4 {
        match detect_logs(fr, j, 10.0, 4, &[]) {
            Ok(k) => ch.check(k == 0, format!("m_{j}={k}")),
            Err(e) => ch.error(&format!("m_{j}"), e),
        }
    }
    for amp in [0.1, -0.05, 0.5] {
        let injected = fr.map_values(|r, v| v + amp * r.ln() / r);
        match detect_logs(&injected, 1, 10.0, 4, &[]) {
            Ok(k) => ch.check(k == 1, format!("injected {amp}·log r/r: m_1={k}")),
            Err(e) => ch.error("injected", e),
        }
    }
    ch.finish(4, "log placement", start, None)
}

pub fn theta_recursion() -> Criterion {
    let start = Instant::now();
    let mut ch = Checks::new();
    let zero_tails = |op: &ConeOperator<f64>| -> Result<bool, String> {
        for b in canonical_basis(op).map_err(|e| e.to_string())? {
            let steps = tail_steps(op, &b.function(), 4).map_err(|e| e.to_string())?;
            if steps.iter().skip(1).any(|e| !e.is_zero()) {
                return Ok(false);
            }
        }
        Ok(true)
    };
    for (name, op) in [("A_1/2", bessel(0.5, 0.0, 4)), ("A_0", bessel(0.0, 0.0, 4)), ("A_1/4", bessel(0.25, 0.0, 4))] {
        match zero_tails(&op) {
            Ok(z) => ch.check(z, format!("{name} tails vanish")),
            Err(e) => ch.error(name, e),
        }
    }
    let pert = bessel(0.5, 1.0, 4);
    let sigma0 = Complex64::new(0.0, -0.5);
    match tail_steps(&pert, &LogPowerFunction::monomial(sigma0, 0), 3) {
        Ok(steps) => {
            let e1 = &steps[1];
            let got = e1.coeff(Complex64::new(0.0, -1.5), 0);
            let only = e1.terms().len() == 1 && e1.log_depth() == 0;
            ch.check((got - c(0.5)).norm() <= 1e-12 && only, format!("e_1(x^1/2)={:.15}·x^3/2", got.re));
            match frobenius_series(&pert, c(0.0), sigma0, &[c(1.0)], 8, 4) {
                Ok(f) => {
                    let gamma = f.terms[1][0];
                    ch.check((gamma - got).norm() <= 1e-12, format!("Frobenius γ={:.15}", gamma.re));
                }
                Err(e) => ch.error("frobenius", e),
            }
        }
        Err(e) => ch.error("e_1", e),
    }
    let mut worst = 0.0f64;
    for s0 in [sigma0, Complex64::new(0.0, 0.5)] {
        match tail_steps(&pert, &LogPowerFunction::monomial(s0, 0), 3) {
            Ok(steps) => {
                let u = steps.iter().fold(LogPowerFunction::zero(), |acc, e| &acc + e);
                match pert.apply_symbolic(&u, None) {
                    Ok(image) => {
                        for theta in 0..=3 {
                            if let Some(t) = image.term_at(step_exponent(s0, theta) + Complex64::new(0.0, 2.0)) {
                                worst = t.coeffs.iter().map(|z| z.norm()).fold(worst, f64::max);
                            }
                        }
                    }
                    Err(e) => ch.error("residual", e),
                }
            }
            Err(e) => ch.error("tails", e),
        }
    }
    ch.check(worst <= 1e-12, format!("residual gain through 3 steps: max coeff {worst:.1e}"));
    ch.finish(5, "theta recursion", start, None)
}

pub fn stationarity() -> Criterion {
    let start = Instant::now();
    let mut ch = Checks::new();
    for (name, op, want) in [("A_1/2", bessel(0.5, 0.0, 2), 2), ("A_0", bessel(0.0, 0.0, 2), 1)] {
        match stationary_domains(&op, 1) {
            Ok(StationaryDomains::Finite(list)) => ch.check(list.len() == want, format!("{name}: {} stationary lines", list.len())),
            Ok(StationaryDomains::ContinuumOfInvariantSubspaces) => ch.check(false, format!("{name}: continuum")),
            Err(e) => ch.error(name, e),
        }
    }
    let mut friedrichs_ok = true;
    for nu in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9] {
        let op = bessel(nu, 0.0, 2);
        friedrichs_ok &= matches!(friedrichs_domain(&op).and_then(|w| is_stationary(&op, &w, 1e-8)), Ok(true));
    }
    ch.check(friedrichs_ok, "Friedrichs domains stationary for ν ∈ {0, .1, .25, .5, .75, .9}".into());
    let robin_w = half_domain(1.0, 1.0, "robin");
    ch.check(matches!(is_stationary(&bessel(0.5, 0.0, 2), &robin_w, 1e-8), Ok(false)), "mixed line nonstationary".into());
    let (mut group, mut exp) = (0.0f64, 0.0f64);
    for op in [bessel(0.5, 0.0, 2), bessel(0.0, 0.0, 2)] {
        match generator(&op) {
            Ok(data) => {
                for (a, b) in [(0.5, 3.0), (2.0, E), (0.1, 10.0), (7.0, 0.3)] {
                    let d = data.kappa(a) * data.kappa(b) - data.kappa(a * b);
                    group = d.iter().map(|z| z.norm() / (a * b).powf(2.0)).fold(group, f64::max);
                }
                for rho in [2.0, E] {
                    let d = data.exp_generator(rho) - data.kappa(rho);
                    exp = d.iter().map(|z| z.norm()).fold(exp, f64::max);
                }
            }
            Err(e) => ch.error("generator", e),
        }
    }
    ch.check(group <= 1e-8, format!("group law err {group:.1e}"));
    ch.check(exp <= 1e-8, format!("exp generator err {exp:.1e}"));
    ch.finish(6, "stationarity", start, Some(1.0))
}

pub fn robin_signature() -> Criterion {
    let start = Instant::now();
    let mut ch = Checks::new();
    let rb = ray(&robin());
    ch.check(rb.failures.is_empty(), format!("{} samples", rb.samples.len()));
    let partial = ExpansionModel::with_terms(2, 1, vec![(0, 0), (1, 1)]);
    let forced = ExpansionModel::with_terms(2, 1, vec![(0, 0), (1, 0), (1, 1)]);
    let weighted = FitOptions { weight_power: Some(1.0), ..FitOptions::default() };
    match fit_model(&rb, &partial, weighted) {
        Ok(f) => {
            ch.near("a00", f.coefficient(0, 0).map_or(f64::NAN, |z| z.re), 0.5, 2e-3);
            let decay = residual_decay(&f, 1.0);
            // bounded by C r^{-1}: |res|·r must not grow along the ray
            ch.check(decay.slope <= -0.9, format!("partial residual ~ r^{:.2}, C={:.2e}", decay.slope, decay.constant));
        }
        Err(e) => ch.error("partial fit", e),
    }
    match (fit_model(&rb, &forced, FitOptions::default()), fit_model(friedrichs_ray(), &forced, FitOptions::default())) {
        (Ok(r), Ok(f)) => {
            let dr = r.term(1, 0).map_or(f64::NAN, |t| t.drift);
            let df = f.term(1, 0).map_or(f64::NAN, |t| t.drift);
            ch.check(dr >= 10.0 * df, format!("forced a10 drift {dr:.1e} vs Friedrichs {df:.1e} (×{:.0e})", dr / df));
        }
        (Err(e), _) | (_, Err(e)) => ch.error("forced fit", e),
    }
    ch.finish(7, "nonstationary signature", start, None)
}

pub fn heat_and_zeta() -> Criterion {
    let start = Instant::now();
    let mut ch = Checks::new();
    let eigs = match friedrichs_spectrum() {
        Ok(e) => e,
        Err(e) => {
            ch.error("eigenvalues", e);
            return ch.finish(8, "heat and zeta", start, Some(60.0));
        }
    };
    match heat_trace(eigs, 2, &[0.01], 1e-6) {
        Ok(h) => ch.near("heat(0.01)", h[0].value, 2.3209482, 1e-6),
        Err(e) => ch.error("heat", e),
    }
    let samples = heat_trace(eigs, 2, &ray_grid(1e-4, 0.05, 40), 1e-6);
    let fit = samples.and_then(|s| fit_heat(&s, 2, 4, &[]));
    match fit {
        Ok(fit) => {
            ch.near("a0", fit.coefficient(0, 0).unwrap_or(f64::NAN), 0.2820948, 1e-4);
            ch.near("const", fit.coefficient(1, 0).unwrap_or(f64::NAN), -0.5, 1e-3);
            ch.check(fit.probes.iter().all(|p| !p.significant), "no off-lattice terms".into());
            match zeta_report(eigs, &fit, &[1.0], 1e-4) {
                Ok(z) => {
                    ch.near("zeta(1)", z.values[0].value.unwrap_or(f64::NAN), 1.0 / 6.0, 1e-8);
                    let poles: Vec<_> = z.poles.iter().filter(|p| p.status == PoleStatus::Pole).collect();
                    let in_unit: Vec<_> = poles.iter().filter(|p| p.s > 0.0 && p.s <= 1.0).collect();
                    ch.check(in_unit.len() == 1, format!("{} pole(s) in (0,1]", in_unit.len()));
                    if let Some(p) = in_unit.first() {
                        let want = 0.5 / PI;
                        ch.check(
                            (p.s - 0.5).abs() < 1e-12 && ((p.residue - want) / want).abs() <= 0.02,
                            format!("pole s={} residue {:.7}", p.s, p.residue),
                        );
                    }
                    ch.check(poles.len() == 1, format!("{} pole(s) overall", poles.len()));
                }
                Err(e) => ch.error("zeta", e),
            }
        }
        Err(e) => ch.error("heat fit", e),
    }
    ch.finish(8, "heat and zeta", start, Some(60.0))
}

pub fn cross_checks() -> Criterion {
    let start = Instant::now();
    let mut ch = Checks::new();
    let p = friedrichs();
    match friedrichs_spectrum() {
        Ok(eigs) => {
            let (mut worst, mut max_diff, mut min_budget) = (0.0f64, 0.0f64, f64::INFINITY);
            let mut all = true;
            for r in ray_grid(1.0, 1e3, 10) {
                let lambda = c(-r);
                match (green_trace(&p, lambda, 1, &one()), eigen_trace(eigs, 2, lambda, 1, 1e-5)) {
                    (Ok(g), Ok(e)) => {
                        let diff = (g.value - e.value).norm();
                        let budget = g.error_estimate + e.error_estimate;
                        worst = worst.max(diff / budget);
                        max_diff = max_diff.max(diff);
                        min_budget = min_budget.min(budget);
                        all &= diff <= budget;
                    }
                    (Err(e), _) => ch.error("green", e),
                    (_, Err(e)) => ch.error("eigen", e),
                }
            }
            ch.check(all, format!("green vs eigen on 10 points: max diff {max_diff:.1e}, smallest combined error {min_budget:.1e}, worst ratio {worst:.1e}"));
        }
        Err(e) => ch.error("eigenvalues", e),
    }
    let (l1, l2) = (c(-1.0), c(-2.0));
    match (green_trace(&p, l1, 1, &one()), green_trace(&p, l2, 1, &one()), composed_trace(&p, l1, l2, &one())) {
        (Ok(a), Ok(b), Ok(k)) => {
            let lhs = a.value - b.value;
            let rhs = (l1 - l2) * k.value;
            let tol = a.error_estimate + b.error_estimate + k.error_estimate + 1e-12;
            ch.check((lhs - rhs).norm() <= tol, format!("resolvent identity diff {:.1e} (tol {tol:.1e})", (lhs - rhs).norm()));
        }
        _ => ch.error("resolvent identity", "trace failed"),
    }
    let h = 1e-3;
    let at = |l: f64, ell| green_trace(&p, c(l), ell, &one()).map(|s| s.value);
    match (at(-1.0 + h, 1), at(-1.0 - h, 1), at(-1.0, 2)) {
        (Ok(up), Ok(down), Ok(two)) => {
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - two).norm() / two.norm();
            ch.check(rel <= 1e-4, format!("d/dλ vs l=2: rel {rel:.1e}"));
        }
        _ => ch.error("finite difference", "trace failed"),
    }
    ch.finish(9, "cross-checks", start, None)
}

pub fn run_all() -> Vec<Criterion> {
    vec![
        eigenvalue_oracles(),
        point_traces(),
        ray_fits(),
        log_rules(),
        theta_recursion(),
        stationarity(),
        robin_signature(),
        heat_and_zeta(),
        cross_checks(),
    ]
}
