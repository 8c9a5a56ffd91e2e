//! Analysis configuration (JSON). Unknown keys are rejected everywhere.

use std::path::Path;

use conetrace_core::domain::{friedrichs_domain, DomainSpec};
use conetrace_core::ode::Numerics;
use conetrace_core::{ConeOperator, Polynomial, RightBoundary, Sector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Complex number as `[re, im]`.
pub type Pair = [f64; 2];

fn c(p: &Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub operator: OperatorBlock,
    #[serde(default)]
    pub domain: DomainBlock,
    #[serde(default)]
    pub sector: SectorBlock,
    #[serde(default)]
    pub ray: RayBlock,
    #[serde(default)]
    pub numerics: NumericsBlock,
    #[serde(default)]
    pub fit: FitBlock,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorBlock {
    pub m: usize,
    /// Taylor depth; the table is zero-padded up to it.
    #[serde(default)]
    pub depth: Option<usize>,
    /// `coeff[k][ν] = [re, im]`: `a_k(x) = Σ_ν coeff[k][ν] x^ν`.
    pub coeff: Vec<Vec<Pair>>,
    #[serde(default)]
    pub right_bc: BoundaryBlock,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryBlock {
    #[default]
    Dirichlet,
    /// Rows acting on `(u(1), u'(1), ..., u^{(m-1)}(1))`.
    Functionals(Vec<Vec<Pair>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    /// `friedrichs`, `min` or `max`; ignored when `columns` is given.
    #[serde(default = "default_preset")]
    pub preset: String,
    /// Columns of `W` in the canonical basis (sorted by exponent, then log power).
    #[serde(default)]
    pub columns: Option<Vec<Vec<Pair>>>,
    #[serde(default)]
    pub label: Option<String>,
    /// Further domains, compared against the primary one by `fit`.
    #[serde(default)]
    pub compare: Vec<DomainBlock>,
}

fn default_preset() -> String {
    "friedrichs".into()
}

impl Default for DomainBlock {
    fn default() -> Self {
        Self { preset: default_preset(), columns: None, label: None, compare: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorBlock {
    #[serde(default = "d180")]
    pub theta0_deg: f64,
    #[serde(default = "d45")]
    pub halfwidth_deg: f64,
}

fn d180() -> f64 {
    180.0
}
fn d45() -> f64 {
    45.0
}

impl Default for SectorBlock {
    fn default() -> Self {
        Self { theta0_deg: d180(), halfwidth_deg: d45() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayBlock {
    #[serde(default = "d_rmin")]
    pub r_min: f64,
    #[serde(default = "d_rmax")]
    pub r_max: f64,
    #[serde(default = "d_points")]
    pub points: usize,
    #[serde(default = "d_one")]
    pub ell: usize,
    /// `φ(x) = Σ phi[i] x^i`.
    #[serde(default = "d_phi")]
    pub phi: Vec<Pair>,
}

fn d_rmin() -> f64 {
    1e2
}
fn d_rmax() -> f64 {
    1e6
}
fn d_points() -> usize {
    40
}
fn d_one() -> usize {
    1
}
fn d_phi() -> Vec<Pair> {
    vec![[1.0, 0.0]]
}

impl Default for RayBlock {
    fn default() -> Self {
        Self { r_min: d_rmin(), r_max: d_rmax(), points: d_points(), ell: d_one(), phi: d_phi() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    #[serde(default = "d_xmatch")]
    pub x_match: f64,
    #[serde(default = "d_series")]
    pub series_order: usize,
    #[serde(default = "d_reltol")]
    pub rel_tol: f64,
    /// Minimum number of quadrature panels on `[x_cut, 1]`.
    #[serde(default = "d_panels")]
    pub quad_panels: usize,
    #[serde(default = "d_rank")]
    pub rank_tol: f64,
}

fn d_xmatch() -> f64 {
    0.1
}
fn d_series() -> usize {
    40
}
fn d_reltol() -> f64 {
    1e-12
}
fn d_panels() -> usize {
    8
}
fn d_rank() -> f64 {
    1e-8
}

impl Default for NumericsBlock {
    fn default() -> Self {
        Self { x_match: d_xmatch(), series_order: d_series(), rel_tol: d_reltol(), quad_panels: d_panels(), rank_tol: d_rank() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    #[serde(default = "d_jmax")]
    pub j_max: usize,
    /// Log caps `m_j` by order `j` (missing entries are 0).
    #[serde(default = "d_caps")]
    pub log_caps: Vec<usize>,
    /// Residual-reduction factor separating "log present" from "absent".
    #[serde(default = "d_threshold")]
    pub log_threshold: f64,
    #[serde(default = "d_window")]
    pub window: usize,
    #[serde(default = "d_step")]
    pub window_step: usize,
    /// Read samples from this CSV instead of sampling the ray.
    #[serde(default)]
    pub samples_csv: Option<String>,
}

fn d_jmax() -> usize {
    4
}
fn d_caps() -> Vec<usize> {
    vec![0, 1]
}
fn d_threshold() -> f64 {
    10.0
}
fn d_window() -> usize {
    20
}
fn d_step() -> usize {
    5
}

impl Default for FitBlock {
    fn default() -> Self {
        Self {
            j_max: d_jmax(),
            log_caps: d_caps(),
            log_threshold: d_threshold(),
            window: d_window(),
            window_step: d_step(),
            samples_csv: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    #[serde(default = "d_eigs")]
    pub eigenvalues: usize,
    #[serde(default = "d_tmin")]
    pub t_min: f64,
    #[serde(default = "d_tmax")]
    pub t_max: f64,
    #[serde(default = "d_tpoints")]
    pub t_points: usize,
    /// Heat-fit orders `j` carrying a `t^{j/m} log t` term.
    #[serde(default)]
    pub log_orders: Vec<usize>,
    #[serde(default = "d_s")]
    pub s_values: Vec<f64>,
    #[serde(default = "d_residue")]
    pub residue_tol: f64,
}

fn d_eigs() -> usize {
    200
}
fn d_tmin() -> f64 {
    1e-4
}
fn d_tmax() -> f64 {
    0.05
}
fn d_tpoints() -> usize {
    40
}
fn d_s() -> Vec<f64> {
    vec![1.0, 1.5, 2.0]
}
fn d_residue() -> f64 {
    1e-4
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self {
            eigenvalues: d_eigs(),
            t_min: d_tmin(),
            t_max: d_tmax(),
            t_points: d_tpoints(),
            log_orders: Vec::new(),
            s_values: d_s(),
            residue_tol: d_residue(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Report directory (`--out` overrides).
    #[serde(default)]
    pub dir: Option<String>,
    /// Emit SVG plots (`--plot` forces on).
    #[serde(default)]
    pub plot: bool,
}

/// Defaults shown by `--help`.
pub const DEFAULTS_HELP: &str = "\
CONFIG (JSON; unknown keys are rejected, complex numbers are [re, im]):
  operator.m               order (required)
  operator.coeff           table coeff[k][nu], a_k(x) = sum_nu coeff[k][nu] x^nu (required)
  operator.depth           Taylor depth                         [default: table width - 1, at least m]
  operator.right_bc        \"dirichlet\" | {\"functionals\": rows}  [default: \"dirichlet\"]
  domain.preset            friedrichs | min | max               [default: friedrichs]
  domain.columns           explicit W columns in the canonical basis [default: none]
  domain.label             report label                         [default: preset name]
  domain.compare           further domains compared by `fit`    [default: []]
  sector.theta0_deg        ray angle                            [default: 180]
  sector.halfwidth_deg     sector half-width                    [default: 45]
  ray.r_min, ray.r_max     |lambda| range                       [default: 100, 1e6]
  ray.points               geometric samples                    [default: 40]
  ray.ell                  resolvent power                      [default: 1]
  ray.phi                  polynomial coefficients of phi(x)    [default: [[1, 0]]]
  numerics.x_match         Frobenius matching radius            [default: 0.1]
  numerics.series_order    Frobenius series length              [default: 40]
  numerics.rel_tol         integrator tolerance                 [default: 1e-12]
  numerics.quad_panels     minimum quadrature panels            [default: 8]
  numerics.rank_tol        relative rank threshold              [default: 1e-8]
  fit.j_max                highest order j                      [default: 4]
  fit.log_caps             log caps m_j by j                    [default: [0, 1]]
  fit.log_threshold        residual ratio for log detection     [default: 10]
  fit.window, fit.window_step  drift windows                    [default: 20, 5]
  fit.samples_csv          fit these samples instead of sampling [default: none]
  spectrum.eigenvalues     eigenvalues for heat/zeta            [default: 200]
  spectrum.t_min, t_max, t_points  heat-fit grid                [default: 1e-4, 0.05, 40]
  spectrum.log_orders      heat-fit orders with t^{j/m} log t   [default: []]
  spectrum.s_values        direct zeta evaluation points        [default: [1, 1.5, 2]]
  spectrum.residue_tol     pole significance                    [default: 1e-4]
  output.dir               report directory                     [default: current directory]
  output.plot              write SVG plots                      [default: false]";

impl Config {
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        let r = &self.ray;
        if !(r.r_min > 0.0 && r.r_max > r.r_min) {
            return bad("ray: need 0 < r_min < r_max");
        }
        if r.points < 2 || r.ell == 0 || r.phi.is_empty() {
            return bad("ray: need points >= 2, ell >= 1 and a non-empty phi");
        }
        let n = &self.numerics;
        if !(n.x_match > 0.0 && n.x_match < 1.0) || n.series_order < self.operator.m + 4 || n.rel_tol <= 0.0 || n.quad_panels == 0 {
            return bad("numerics: need 0 < x_match < 1, series_order >= m + 4, rel_tol > 0, quad_panels >= 1");
        }
        if !(n.rank_tol > 0.0 && n.rank_tol < 1.0) {
            return bad("numerics: need 0 < rank_tol < 1");
        }
        let s = &self.spectrum;
        if !(s.t_min > 0.0 && s.t_max > s.t_min) || s.t_points < 2 || s.eigenvalues < 8 {
            return bad("spectrum: need 0 < t_min < t_max, t_points >= 2, eigenvalues >= 8");
        }
        if self.sector.halfwidth_deg < 0.0 || self.sector.halfwidth_deg >= 180.0 {
            return bad("sector: halfwidth_deg must lie in [0, 180)");
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization (defaults filled in, keys sorted).
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let text = serde_json::to_string(&value).expect("value serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn operator(&self) -> Result<ConeOperator<f64>, CliError> {
        let o = &self.operator;
        let mut table: Vec<Vec<Complex64>> = o.coeff.iter().map(|row| row.iter().map(c).collect()).collect();
        if let Some(depth) = o.depth {
            if table.iter().any(|row| row.len() > depth + 1) {
                return Err(CliError::Config(format!("operator: coefficient rows longer than depth + 1 = {}", depth + 1)));
            }
            for row in &mut table {
                row.resize(depth + 1, Complex64::new(0.0, 0.0));
            }
        } else {
            let width = table.iter().map(Vec::len).max().unwrap_or(0);
            for row in &mut table {
                row.resize(width, Complex64::new(0.0, 0.0));
            }
        }
        let bc = match &o.right_bc {
            BoundaryBlock::Dirichlet => RightBoundary::Dirichlet,
            BoundaryBlock::Functionals(rows) => RightBoundary::Functionals(rows.iter().map(|r| r.iter().map(c).collect()).collect()),
        };
        ConeOperator::new(o.m, table, bc).map_err(|e| CliError::Config(format!("operator: {e}")))
    }

    pub fn domain(&self, op: &ConeOperator<f64>) -> Result<DomainSpec<f64>, CliError> {
        build_domain(&self.domain, op)
    }

    pub fn compare_domains(&self, op: &ConeOperator<f64>) -> Result<Vec<DomainSpec<f64>>, CliError> {
        self.domain.compare.iter().map(|d| build_domain(d, op)).collect()
    }

    pub fn sector(&self) -> Sector<f64> {
        Sector::new(self.sector.theta0_deg.to_radians(), self.sector.halfwidth_deg.to_radians())
    }

    pub fn phi(&self) -> Polynomial<f64> {
        Polynomial::new(self.ray.phi.iter().map(c).collect())
    }

    pub fn numerics(&self) -> Numerics {
        Numerics {
            x_match: self.numerics.x_match,
            series_order: self.numerics.series_order,
            rel_tol: self.numerics.rel_tol,
            min_panels: self.numerics.quad_panels,
            ..Numerics::default()
        }
    }
}

fn build_domain(block: &DomainBlock, op: &ConeOperator<f64>) -> Result<DomainSpec<f64>, CliError> {
    let err = |e: conetrace_core::domain::DomainError| CliError::Config(format!("domain: {e}"));
    let mut spec = match &block.columns {
        Some(cols) => {
            let d = conetrace_core::indicial::canonical_basis(op).map_err(|e| CliError::Config(format!("domain: {e}")))?.len();
            if cols.iter().any(|col| col.len() != d) {
                return Err(CliError::Config(format!("domain: columns must have length d = {d}")));
            }
            let flat: Vec<Complex64> = cols.iter().flatten().map(c).collect();
            DomainSpec::from_columns(op, "explicit", DMatrix::from_column_slice(d, cols.len(), &flat)).map_err(err)?
        }
        None => match block.preset.as_str() {
            "friedrichs" => friedrichs_domain(op).map_err(err)?,
            "min" => DomainSpec::minimal(op).map_err(err)?,
            "max" => DomainSpec::maximal(op).map_err(err)?,
            other => return Err(CliError::Config(format!("domain: unknown preset {other:?}"))),
        },
    };
    if let Some(label) = &block.label {
        spec.label = label.clone();
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BESSEL: &str = r#"{"operator": {"m": 2, "coeff": [[[0.25, 0]], [[0, 0]], [[1, 0]]]}}"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = Config::from_str(BESSEL).unwrap();
        assert_eq!(cfg.ray.points, 40);
        assert_eq!(cfg.domain.preset, "friedrichs");
        assert_eq!(cfg.domain(&cfg.operator().unwrap()).unwrap().dimension(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"operator": {"m": 2, "coeff": [[[0.25, 0]], [[0, 0]], [[1, 0]]], "colour": 1}}"#;
        assert!(matches!(Config::from_str(text), Err(CliError::Config(_))));
        let text = r#"{"operator": {"m": 2, "coeff": [[[0.25, 0]], [[0, 0]], [[1, 0]]]}, "ray": {"rmin": 1}}"#;
        assert!(Config::from_str(text).is_err());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = Config::from_str(BESSEL).unwrap();
        let b = Config::from_str(&BESSEL.replace(' ', "")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = Config::from_str(&BESSEL.replace("0.25", "0.5")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn malformed_table_is_a_config_error() {
        let text = r#"{"operator": {"m": 2, "coeff": [[[0.25, 0]], [[1, 0]]]}}"#;
        let cfg = Config::from_str(text).unwrap();
        assert!(matches!(cfg.operator(), Err(CliError::Config(_))));
    }
}
