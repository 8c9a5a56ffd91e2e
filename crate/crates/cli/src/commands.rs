//! The subcommands. Each returns a JSON result plus auxiliary files.

use conetrace_core::asymptotics::{
    admissible, compare_domains, detect_logs, fit_heat, fit_model, heat_trace, ray_grid, residual_decay, zeta_report,
    AsymptoticsError, ExpansionModel, FitOptions, FitResult, HeatFit, RaySamples,
};
use conetrace_core::domain::{friedrichs_domain, generator, is_stationary, stationary_domains, DomainSpec, StationaryDomains};
use conetrace_core::indicial::{boundary_spectrum, canonical_basis, strip_sigma, BasisLabel};
use conetrace_core::ode::eigen::{eigenvalues, Region};
use conetrace_core::ode::system::Problem;
use conetrace_core::ode::trace::{green_trace, TraceMethod, TraceSample};
use conetrace_core::theta::ThetaSession;
use conetrace_core::ConeOperator;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::acceptance;
use crate::config::Config;
use crate::plot::{loglog, Series};
use crate::report::{complex, log_power, matrix, num};
use crate::CliError;

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub plot: bool,
    pub threads: Option<usize>,
}

/// Result of a command: the JSON payload, extra files, and whether the run
/// counts as a (numerical or acceptance) failure.
#[derive(Debug)]
pub struct Outcome {
    pub result: Value,
    pub files: Vec<(String, String)>,
    /// Human-readable lines for stderr.
    pub log: Vec<String>,
    pub failed: bool,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Self { result, files: Vec::new(), log: Vec::new(), failed: false }
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn asymptotic(e: AsymptoticsError) -> CliError {
    match e {
        AsymptoticsError::SectorNotAdmissible { .. } => CliError::Config(e.to_string()),
        other => numerical(other),
    }
}

fn label_json(b: &BasisLabel<f64>) -> Value {
    let power = b.sigma * Complex64::i();
    let text = match b.log_power {
        0 => format!("x^({:.6})", power.re),
        k => format!("x^({:.6}) log^{k} x", power.re),
    };
    json!({"sigma": complex(b.sigma), "log_power": b.log_power, "function": text})
}

pub fn domain_json(d: &DomainSpec<f64>) -> Value {
    json!({"label": d.label, "dimension": d.dimension(), "columns": matrix(&d.w.transpose())})
}

fn problem(cfg: &Config, op: &ConeOperator<f64>, domain: &DomainSpec<f64>) -> Result<Problem, CliError> {
    Problem::new(op, domain, cfg.numerics()).map_err(numerical)
}

pub fn analyze(cfg: &Config) -> Result<Outcome, CliError> {
    let op = cfg.operator()?;
    let m = op.order();
    let roots = boundary_spectrum(&op).map_err(numerical)?;
    let strip = strip_sigma(&op).map_err(numerical)?;
    let basis = canonical_basis(&op).map_err(numerical)?;
    let root_json = |r: &conetrace_core::indicial::IndicialRoot<f64>| {
        json!({"sigma": complex(r.sigma), "multiplicity": r.multiplicity, "real_power": num(r.real_power())})
    };
    let mut session = ThetaSession::new(&op).map_err(numerical)?;
    let mut tails = Vec::new();
    for (i, b) in basis.iter().enumerate() {
        let steps = session.steps(i, m).map_err(numerical)?;
        let steps: Vec<Value> = steps
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, e)| !e.is_zero())
            .map(|(k, e)| json!({"step": k, "log_depth": e.log_depth(), "terms": log_power(e)}))
            .collect();
        tails.push(json!({"basis": label_json(b), "corrections": steps}));
    }
    let mut notes = Vec::new();
    if basis.is_empty() {
        notes.push("D_min = D_max");
    }
    Ok(Outcome::ok(json!({
        "order": m,
        "depth": op.depth(),
        "x_independent": op.has_x_independent_coefficients(),
        "formally_symmetric": op.is_formally_symmetric(1e-12),
        "spec_b": roots.iter().map(root_json).collect::<Vec<_>>(),
        "strip": strip.iter().map(root_json).collect::<Vec<_>>(),
        "d": basis.len(),
        "singular_basis": basis.iter().map(label_json).collect::<Vec<_>>(),
        "theta_tails": tails,
        "notes": notes,
    })))
}

fn kappa_checks(op: &ConeOperator<f64>) -> Result<(f64, f64), CliError> {
    let data = generator(op).map_err(numerical)?;
    let mut group = 0.0f64;
    for (a, b) in [(0.5, 3.0), (2.0, std::f64::consts::E), (0.1, 10.0), (7.0, 0.3)] {
        let diff = data.kappa(a) * data.kappa(b) - data.kappa(a * b);
        group = group.max(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let mut exp = 0.0f64;
    for rho in [2.0, std::f64::consts::E] {
        let diff = data.exp_generator(rho) - data.kappa(rho);
        exp = exp.max(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok((group, exp))
}

pub fn domains(cfg: &Config) -> Result<Outcome, CliError> {
    let op = cfg.operator()?;
    let tol = cfg.numerics.rank_tol;
    let data = generator(&op).map_err(numerical)?;
    let d = data.basis.len();
    let verdict = |w: &DomainSpec<f64>| match is_stationary(&op, w, tol) {
        Ok(true) => json!("stationary"),
        Ok(false) => json!("nonstationary"),
        Err(e) => json!({"error": e.to_string()}),
    };
    let with_verdict = |w: &DomainSpec<f64>| {
        let mut v = domain_json(w);
        v["verdict"] = verdict(w);
        v
    };
    let friedrichs = match friedrichs_domain(&op) {
        Ok(f) => with_verdict(&f),
        Err(e) => json!({"error": e.to_string()}),
    };
    let mut configured = vec![with_verdict(&cfg.domain(&op)?)];
    for w in cfg.compare_domains(&op)? {
        configured.push(with_verdict(&w));
    }
    let mut enumeration = Vec::new();
    for dim in 1..d {
        let entry = match stationary_domains(&op, dim).map_err(numerical)? {
            StationaryDomains::Finite(list) => json!({"dimension": dim, "domains": list.iter().map(domain_json).collect::<Vec<_>>()}),
            StationaryDomains::ContinuumOfInvariantSubspaces => json!({"dimension": dim, "continuum": true}),
        };
        enumeration.push(entry);
    }
    let (group, exp) = kappa_checks(&op)?;
    Ok(Outcome::ok(json!({
        "d": d,
        "basis": data.basis.iter().map(label_json).collect::<Vec<_>>(),
        "generator": matrix(&data.t),
        "kappa_checks": {"group_law_error": num(group), "exp_generator_error": num(exp)},
        "friedrichs": friedrichs,
        "configured": configured,
        "stationary_domains": enumeration,
    })))
}

/// Green traces on the configured ray, optionally on `threads` workers.
pub fn sample_ray(cfg: &Config, problem: &Problem, threads: Option<usize>) -> Result<RaySamples, CliError> {
    let sector = cfg.sector();
    admissible(&problem.op, &sector).map_err(asymptotic)?;
    let phi = cfg.phi();
    let grid = ray_grid(cfg.ray.r_min, cfg.ray.r_max, cfg.ray.points);
    let run = || -> Vec<(f64, _)> {
        grid.par_iter().map(|&r| (r, green_trace(problem, Complex64::from_polar(r, sector.theta0), cfg.ray.ell, &phi))).collect()
    };
    let outcomes = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(run),
        None => run(),
    };
    Ok(RaySamples::collect(sector.theta0, cfg.ray.ell, problem.order(), phi, problem.domain.label.clone(), outcomes))
}

fn fmt15(x: f64) -> String {
    num(x).to_string()
}

pub fn samples_csv(s: &RaySamples) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["r", "re_value", "im_value", "error_estimate", "method"]).map_err(io)?;
    for p in &s.samples {
        let v = p.sample.value;
        w.write_record([fmt15(p.r), fmt15(v.re), fmt15(v.im), fmt15(p.sample.error_estimate), p.sample.method.as_str().into()])
            .map_err(io)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?).map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Deserialize)]
struct CsvRow {
    r: f64,
    re_value: f64,
    im_value: f64,
    error_estimate: f64,
    method: String,
}

pub fn read_samples(cfg: &Config, text: &str, order: usize, label: &str) -> Result<RaySamples, CliError> {
    let theta0 = cfg.sector().theta0;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut outcomes = Vec::new();
    for row in rdr.deserialize::<CsvRow>() {
        let row = row.map_err(|e| CliError::Config(format!("samples csv: {e}")))?;
        let method = match row.method.as_str() {
            "green" => TraceMethod::Green,
            "eigen" => TraceMethod::Eigen,
            other => return Err(CliError::Config(format!("samples csv: unknown method {other:?}"))),
        };
        let sample = TraceSample {
            lambda: Complex64::from_polar(row.r, theta0),
            ell: cfg.ray.ell,
            value: Complex64::new(row.re_value, row.im_value),
            method,
            error_estimate: row.error_estimate,
        };
        outcomes.push((row.r, Ok(sample)));
    }
    Ok(RaySamples::collect(theta0, cfg.ray.ell, order, cfg.phi(), label, outcomes))
}

fn ray_plot(title: &str, s: &RaySamples, fit: Option<&FitResult>) -> String {
    let mut series = vec![Series {
        label: "|Tr|".into(),
        points: s.samples.iter().map(|p| (p.r, p.sample.value.norm())).collect(),
        markers: fit.is_some(),
    }];
    if let Some(f) = fit {
        let coeffs: Vec<Complex64> = f.terms.iter().map(|t| t.alpha).collect();
        series.push(Series {
            label: "fit".into(),
            points: s.samples.iter().map(|p| (p.r, f.model.eval(&coeffs, p.r).norm())).collect(),
            markers: false,
        });
        series.push(Series {
            label: "|residual|".into(),
            points: f.residuals.iter().map(|(r, e)| (*r, e.norm())).collect(),
            markers: true,
        });
    }
    loglog(title, "r = |lambda|", "magnitude", &series)
}

fn samples_summary(s: &RaySamples) -> Value {
    json!({
        "domain": s.domain_label,
        "theta0": num(s.theta0),
        "ell": s.ell,
        "count": s.samples.len(),
        "failures": s.failures.iter().map(|f| json!({"r": num(f.r), "message": f.message})).collect::<Vec<_>>(),
    })
}

pub fn trace_ray(cfg: &Config, opts: RunOptions) -> Result<Outcome, CliError> {
    let op = cfg.operator()?;
    let domain = cfg.domain(&op)?;
    let p = problem(cfg, &op, &domain)?;
    let s = sample_ray(cfg, &p, opts.threads)?;
    let rows: Vec<Value> = s
        .samples
        .iter()
        .map(|pt| json!({"r": num(pt.r), "value": complex(pt.sample.value), "error_estimate": num(pt.sample.error_estimate)}))
        .collect();
    let mut files = vec![("samples.csv".to_string(), samples_csv(&s)?)];
    if opts.plot {
        files.push(("trace_ray.svg".into(), ray_plot(&format!("trace along the ray ({})", s.domain_label), &s, None)));
    }
    let failed = s.samples.is_empty();
    Ok(Outcome { result: json!({"samples": samples_summary(&s), "values": rows}), files, log: Vec::new(), failed })
}

pub fn fit_json(f: &FitResult) -> Value {
    json!({
        "terms": f.terms.iter().map(|t| json!({
            "j": t.j, "k": t.k, "alpha": complex(t.alpha), "std_error": num(t.std_error), "window_drift": num(t.drift),
            "exponent": num(f.model.exponent(t.j)),
        })).collect::<Vec<_>>(),
        "log_caps": f.caps,
        "residual_norm": num(f.residual_norm),
        "condition": num(f.condition),
        "peeled": f.peeled,
    })
}

fn fit_options(cfg: &Config) -> FitOptions {
    FitOptions { window: cfg.fit.window, window_step: cfg.fit.window_step, ..FitOptions::default() }
}

pub fn fit(cfg: &Config, opts: RunOptions) -> Result<Outcome, CliError> {
    let op = cfg.operator()?;
    let domain = cfg.domain(&op)?;
    let samples = match &cfg.fit.samples_csv {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
            read_samples(cfg, &text, op.order(), &domain.label)?
        }
        None => sample_ray(cfg, &problem(cfg, &op, &domain)?, opts.threads)?,
    };
    let fo = fit_options(cfg);
    let f = conetrace_core::asymptotics::fit_expansion(&samples, cfg.fit.j_max, &cfg.fit.log_caps, fo).map_err(asymptotic)?;

    let logs: Vec<Value> = (0..=cfg.fit.j_max)
        .map(|j| match detect_logs(&samples, j, cfg.fit.log_threshold, cfg.fit.j_max, &[]) {
            Ok(k) => json!({"j": j, "m_j": k}),
            Err(AsymptoticsError::Inconclusive { ratio }) => json!({"j": j, "inconclusive": true, "ratio": num(ratio)}),
            Err(e) => json!({"j": j, "error": e.to_string()}),
        })
        .collect();

    let shifted = ExpansionModel::with_caps(samples.order, samples.ell, cfg.fit.j_max, &cfg.fit.log_caps).shifted(0.1);
    let lattice = match fit_model(&samples, &shifted, FitOptions { window: usize::MAX, ..fo }) {
        Ok(s) => json!({"residual": num(f.residual_norm), "shifted_residual": num(s.residual_norm), "degradation": num(s.residual_norm / f.residual_norm)}),
        Err(e) => json!({"error": e.to_string()}),
    };

    let partial_model = ExpansionModel::with_terms(samples.order, samples.ell, vec![(0, 0), (1, 1)]);
    let partial = match fit_model(&samples, &partial_model, FitOptions { weight_power: Some(samples.ell as f64), ..fo }) {
        Ok(pf) => {
            let decay = residual_decay(&pf, samples.ell as f64);
            json!({"fit": fit_json(&pf), "residual_constant": num(decay.constant), "residual_slope": num(decay.slope)})
        }
        Err(e) => json!({"error": e.to_string()}),
    };

    let mut comparisons = Vec::new();
    if cfg.fit.samples_csv.is_none() {
        for other in cfg.compare_domains(&op)? {
            let s = sample_ray(cfg, &problem(cfg, &op, &other)?, opts.threads)?;
            let g = conetrace_core::asymptotics::fit_expansion(&s, cfg.fit.j_max, &cfg.fit.log_caps, fo).map_err(asymptotic)?;
            let cmp = compare_domains(&f, &g, 1);
            let delta = |d: &conetrace_core::asymptotics::CoefficientDelta| {
                json!({"j": d.j, "k": d.k, "a": d.a.map_or(Value::Null, complex), "b": d.b.map_or(Value::Null, complex), "delta": num(d.delta)})
            };
            comparisons.push(json!({
                "against": other.label,
                "fit": fit_json(&g),
                "required": cmp.required.iter().map(delta).collect::<Vec<_>>(),
                "allowed": cmp.allowed.iter().map(delta).collect::<Vec<_>>(),
                "max_required_delta": num(cmp.max_required_delta()),
            }));
        }
    }

    let mut files = Vec::new();
    if opts.plot {
        files.push(("fit.svg".into(), ray_plot(&format!("expansion fit ({})", samples.domain_label), &samples, Some(&f))));
    }
    Ok(Outcome {
        result: json!({
            "samples": samples_summary(&samples),
            "fit": fit_json(&f),
            "log_detection": logs,
            "lattice": lattice,
            "partial": partial,
            "comparisons": comparisons,
        }),
        files,
        log: Vec::new(),
        failed: false,
    })
}

/// Positive real eigenvalues in increasing order; negative or complex
/// spectrum is rejected.
pub fn positive_spectrum(p: &Problem, count: usize) -> Result<Vec<f64>, CliError> {
    let below = eigenvalues(p, Region::Interval { lo: -1e3, hi: 0.0 }, 1).map_err(numerical)?;
    if let Some(e) = below.first() {
        return Err(CliError::Numerical(format!("spectrum not positive: eigenvalue {:.6e}", e.value.re)));
    }
    let eigs = eigenvalues(p, Region::Interval { lo: 0.0, hi: f64::MAX }, count).map_err(numerical)?;
    if eigs.len() < count {
        return Err(CliError::Numerical(format!("found {} of {count} eigenvalues", eigs.len())));
    }
    Ok(eigs.iter().map(|e| e.value.re).collect())
}

fn heat_json(fit: &HeatFit) -> Value {
    json!({
        "terms": fit.terms.iter().map(|t| json!({
            "j": t.j, "exponent": num(t.exponent), "log_power": t.log_power,
            "coefficient": num(t.coefficient), "std_error": num(t.std_error),
        })).collect::<Vec<_>>(),
        "residual_norm": num(fit.residual_norm),
        "condition": num(fit.condition),
    })
}

pub fn zeta(cfg: &Config, opts: RunOptions) -> Result<Outcome, CliError> {
    let op = cfg.operator()?;
    let domain = cfg.domain(&op)?;
    let p = problem(cfg, &op, &domain)?;
    let sp = &cfg.spectrum;
    let eigs = positive_spectrum(&p, sp.eigenvalues)?;
    let m = op.order();
    let grid = ray_grid(sp.t_min, sp.t_max, sp.t_points);
    let samples = heat_trace(&eigs, m, &grid, 1e-6).map_err(asymptotic)?;
    let hf = fit_heat(&samples, m, cfg.fit.j_max, &sp.log_orders).map_err(asymptotic)?;
    let z = zeta_report(&eigs, &hf, &sp.s_values, sp.residue_tol).map_err(asymptotic)?;
    let probe = |t: &conetrace_core::asymptotics::ProbeTerm| {
        json!({"exponent": num(t.exponent), "coefficient": num(t.coefficient), "std_error": num(t.std_error), "significant": t.significant})
    };
    let mut files = Vec::new();
    if opts.plot {
        let series = vec![
            Series { label: "heat trace".into(), points: samples.iter().map(|s| (s.t, s.value)).collect(), markers: true },
            Series {
                label: "fit".into(),
                points: samples
                    .iter()
                    .map(|s| (s.t, hf.terms.iter().map(|t| t.coefficient * s.t.powf(t.exponent) * s.t.ln().powi(t.log_power as i32)).sum()))
                    .collect(),
                markers: false,
            },
        ];
        files.push(("heat.svg".into(), loglog("heat trace", "t", "Tr exp(-tA)", &series)));
    }
    Ok(Outcome::ok(json!({
        "domain": domain.label,
        "eigenvalues": {"count": eigs.len(), "first": eigs.iter().take(10).map(|&e| num(e)).collect::<Vec<_>>()},
        "heat": {
            "samples": samples.iter().map(|s| json!({"t": num(s.t), "value": num(s.value), "error_estimate": num(s.error_estimate)})).collect::<Vec<_>>(),
            "fit": heat_json(&hf),
        },
        "zeta": {
            "values": z.values.iter().map(|v| json!({"s": num(v.s), "value": v.value.map_or(Value::Null, num), "error_estimate": num(v.error_estimate)})).collect::<Vec<_>>(),
            "poles": z.poles.iter().map(|e| json!({
                "s": num(e.s), "order": e.order, "residue": num(e.residue), "uncertainty": num(e.uncertainty),
                "status": format!("{:?}", e.status).to_lowercase(), "source_j": e.source_j, "log_power": e.log_power,
            })).collect::<Vec<_>>(),
            "off_lattice": z.off_lattice.iter().map(probe).collect::<Vec<_>>(),
        },
    }))
    .with_files(files))
}

impl Outcome {
    fn with_files(mut self, files: Vec<(String, String)>) -> Self {
        self.files = files;
        self
    }
}

pub fn selftest() -> Outcome {
    let results = acceptance::run_all();
    let failed = results.iter().any(|r| !r.passed);
    let rows: Vec<Value> = results
        .iter()
        .map(|r| json!({"id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail}))
        .collect();
    let log = results.iter().map(ToString::to_string).collect();
    Outcome { result: json!({"criteria": rows, "passed": !failed}), files: Vec::new(), log, failed }
}
