//! On-disk scenario configuration: a single JSON document.
//!
//! Initial data is given by a small expression tree covering constants,
//! `|x - c|^p`, Neumann cosine modes, sums and products, which is enough for
//! every supported scenario without embedding an expression language.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub coefficient: CoefficientConfig,
    pub absorption: AbsorptionConfig,
    pub initial: InitialConfig,
    pub grid: GridConfig,
    pub family: FamilyConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub mode: ModeConfig,
    /// Theorem-level hypothesis sets this scenario insists on (1..=3);
    /// loading fails when a demanded set does not hold.
    #[serde(default)]
    pub require_theorems: Vec<u8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientConfig {
    Constant {
        value: f64,
    },
    PowerLaw {
        center: f64,
        theta: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Product {
        factors: Vec<PowerFactor>,
        #[serde(default = "one")]
        scale: f64,
    },
    Tabulated {
        samples: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerFactor {
    pub center: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AbsorptionConfig {
    Linear,
    BoundedPerturbation { c: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub u0: Expr,
    pub w0: Expr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub left: f64,
    pub right: f64,
    pub n_cells: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Active member index for single runs.
    pub j: usize,
    /// Number of members to construct and verify.
    pub j_max: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt_max: f64,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    #[serde(default = "default_tol_newton")]
    pub tol_newton: f64,
    /// Optional early stop on relative flatness of `d_ε u`.
    #[serde(default)]
    pub steady_stop_rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Measure budget for the per-record concentration supremum.
    #[serde(default = "default_equi_delta")]
    pub equi_delta: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            snapshot_times: Vec::new(),
            equi_delta: default_equi_delta(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeConfig {
    #[default]
    Single,
    /// One run per listed member index.
    EpsSweep { js: Vec<usize> },
    /// One run per listed cell count.
    GridStudy { ns: Vec<usize> },
}

fn one() -> f64 {
    1.0
}

fn default_cfl() -> f64 {
    0.4
}

fn default_tol_newton() -> f64 {
    1e-9
}

fn default_equi_delta() -> f64 {
    0.05
}

/// Analytic initial-data expressions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Expr {
    Const(f64),
    /// `|x - center|^power`.
    AbsPow {
        center: f64,
        power: f64,
    },
    /// `cos(k π (x - left)/(right - left))`, an exact Neumann mode of the
    /// scenario domain.
    CosMode {
        k: u32,
    },
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64, left: f64, right: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::AbsPow { center, power } => (x - center).abs().powf(*power),
            Expr::CosMode { k } => {
                (f64::from(*k) * std::f64::consts::PI * (x - left) / (right - left)).cos()
            }
            Expr::Sum(terms) => terms.iter().map(|e| e.eval(x, left, right)).sum(),
            Expr::Prod(factors) => factors.iter().map(|e| e.eval(x, left, right)).product(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions_evaluate() {
        let e: Expr = serde_json::from_str(
            r#"{"sum": [{"const": 1.0}, {"prod": [{"const": 0.5}, {"cos_mode": {"k": 1}}]}]}"#,
        )
        .unwrap();
        let v = e.eval(0.0, 0.0, 1.0);
        assert!((v - 1.5).abs() < 1e-15);
        let v_mid = e.eval(0.5, 0.0, 1.0);
        assert!((v_mid - 1.0).abs() < 1e-15);

        let abs: Expr =
            serde_json::from_str(r#"{"abs_pow": {"center": 0.0, "power": 1.0}}"#).unwrap();
        assert!((abs.eval(-0.3, -1.0, 1.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{"coefficient": {"kind": "constant", "value": 1.0, "typo": 2}}"#;
        assert!(serde_json::from_str::<Config>(bad).is_err());
    }
}
