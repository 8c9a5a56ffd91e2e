//! Byte-stable JSON: sorted keys, floats at 15 significant digits.

use std::path::Path;

use conetrace_core::operator::LogPowerFunction;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::CliError;

/// `x` rounded to 15 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

/// `[re, im]`; a component below `1e-14·|z|` is rounding noise and printed as 0.
pub fn complex(z: Complex64) -> Value {
    let floor = 1e-14 * z.norm();
    let flush = |x: f64| if x.abs() <= floor { 0.0 } else { x };
    Value::Array(vec![num(flush(z.re)), num(flush(z.im))])
}

pub fn matrix(m: &DMatrix<Complex64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| complex(m[(i, j)])).collect())).collect())
}

/// `Σ x^{iσ} Σ_k c_k log^k x` as a list of blocks; `power` is `iσ`.
pub fn log_power(f: &LogPowerFunction<f64>) -> Value {
    Value::Array(
        f.terms()
            .iter()
            .map(|t| {
                json!({
                    "sigma": complex(t.exponent),
                    "power": complex(t.exponent * Complex64::i()),
                    "coeffs": t.coeffs.iter().map(|&c| complex(c)).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

/// Re-rounds every float in an arbitrary value (idempotent).
pub fn canonical(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => num(n.as_f64().unwrap()),
        Value::Array(a) => Value::Array(a.into_iter().map(canonical).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonical(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

/// Wraps a command result with provenance.
pub fn envelope(command: &str, cfg: Option<&Config>, result: Value) -> Value {
    json!({
        "command": command,
        "config_hash": cfg.map_or(Value::Null, |c| Value::String(c.hash())),
        "library_version": conetrace_core::VERSION,
        "result": canonical(result),
    })
}

pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_digits() {
        assert_eq!(num(0.1 + 0.2).to_string(), "0.3");
        assert_eq!(num(1.0 / 3.0).to_string(), "0.333333333333333");
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(canonical(json!({"b": 1.0/3.0, "a": [2.0/3.0]})), json!({"a": [0.666666666666667], "b": 0.333333333333333}));
    }

    #[test]
    fn keys_are_sorted() {
        let text = to_text(&json!({"zeta": 1, "alpha": 2}));
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
    }
}
