//! Resolution of a raw [`Config`] into validated problem data, including the
//! numerical hypothesis audit and the theorem gate.

use crate::config::{AbsorptionConfig, CoefficientConfig, Config, ModeConfig};
use crate::CliError;
use haptolab::model::{
    validate_hypotheses, AbsorptionSpec, CoefficientSpec, HypothesisReport, InitialData,
    ScalarField, SpatialGrid,
};
use haptolab::solver::SolverParams;
use std::path::Path;

/// A fully validated scenario: everything a run needs, plus the raw config
/// for the manifest.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: Config,
    pub grid: SpatialGrid,
    pub coefficient: CoefficientSpec,
    pub absorption: AbsorptionSpec,
    pub initial: InitialData,
    pub hypotheses: HypothesisReport,
}

impl Scenario {
    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            dt_max: self.config.solver.dt_max,
            cfl_safety: self.config.solver.cfl_safety,
            t_end: self.config.solver.t_end,
            sample_interval: self.config.solver.sample_interval,
            tol_newton: self.config.solver.tol_newton,
        }
    }

    pub fn mode(&self) -> &ModeConfig {
        &self.config.mode
    }

    /// Bound `M = ‖w0‖_∞ + 1` used by the energy slope allowance.
    pub fn m_bound(&self) -> f64 {
        self.initial.w0().max() + 1.0
    }

    /// Re-resolves the spatial data at a different cell count (grid studies).
    pub fn at_resolution(&self, n_cells: usize) -> Result<Scenario, CliError> {
        let mut config = self.config.clone();
        config.grid.n_cells = n_cells;
        resolve(config, false)
    }
}

pub fn coefficient_from_config(cfg: &CoefficientConfig) -> Result<CoefficientSpec, CliError> {
    let spec = match cfg {
        CoefficientConfig::Constant { value } => CoefficientSpec::constant(*value),
        CoefficientConfig::PowerLaw {
            center,
            theta,
            scale,
        } => {
            if *theta < 1.0 {
                CoefficientSpec::power_law(*center, *theta, *scale)
            } else {
                CoefficientSpec::power_law_pathological(*center, *theta, *scale)
            }
        }
        CoefficientConfig::Product { factors, scale } => CoefficientSpec::product_of_power_laws(
            factors.iter().map(|f| (f.center, f.theta)).collect(),
            *scale,
        ),
        CoefficientConfig::Tabulated { samples } => CoefficientSpec::tabulated(samples.clone()),
    };
    spec.map_err(|e| CliError::Config(format!("coefficient: {e}")))
}

fn absorption_from_config(cfg: &AbsorptionConfig) -> Result<AbsorptionSpec, CliError> {
    let g = match cfg {
        AbsorptionConfig::Linear => AbsorptionSpec::Linear,
        AbsorptionConfig::BoundedPerturbation { c } => {
            if !(*c >= 0.0 && c.is_finite()) {
                return Err(CliError::Config(format!(
                    "absorption.c must be finite and >= 0, got {c}"
                )));
            }
            AbsorptionSpec::BoundedPerturbation { c: *c }
        }
    };
    if !g.check_bounds() {
        return Err(CliError::Config(
            "absorption bounds check failed".to_string(),
        ));
    }
    Ok(g)
}

/// Loads, parses and fully validates a scenario file.  The hypothesis audit
/// always runs; demanded theorem gates are enforced unless `skip_gate`.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    load_scenario_with(path, false)
}

pub fn load_scenario_with(path: &Path, skip_gate: bool) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: Config = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    resolve(config, skip_gate)
}

pub fn resolve(config: Config, skip_gate: bool) -> Result<Scenario, CliError> {
    let coefficient = coefficient_from_config(&config.coefficient)?;
    let absorption = absorption_from_config(&config.absorption)?;

    let g = &config.grid;
    let grid = SpatialGrid::new(g.left, g.right, g.n_cells)
        .map_err(|e| CliError::Config(format!("grid: {e}")))?;
    grid.check_staggered(&coefficient.zeros_in(g.left, g.right))
        .map_err(|e| CliError::Config(format!("grid: {e}")))?;

    let u0 = ScalarField::from_fn(&grid, |x| config.initial.u0.eval(x, g.left, g.right))
        .map_err(|e| CliError::Config(format!("initial.u0: {e}")))?;
    let w0 = ScalarField::from_fn(&grid, |x| config.initial.w0.eval(x, g.left, g.right))
        .map_err(|e| CliError::Config(format!("initial.w0: {e}")))?;
    let initial =
        InitialData::new(&grid, u0, w0).map_err(|e| CliError::Config(format!("initial: {e}")))?;

    let f = &config.family;
    if f.j == 0 || f.j > f.j_max {
        return Err(CliError::Config(format!(
            "family.j = {} out of range 1..={}",
            f.j, f.j_max
        )));
    }
    if let ModeConfig::EpsSweep { js } = &config.mode {
        if js.is_empty() || js.iter().any(|&j| j == 0 || j > f.j_max) {
            return Err(CliError::Config(format!(
                "mode.eps_sweep.js must be nonempty member indices within 1..={}",
                f.j_max
            )));
        }
    }
    if let ModeConfig::GridStudy { ns } = &config.mode {
        if ns.len() < 2 {
            return Err(CliError::Config(
                "mode.grid_study.ns needs at least two cell counts".to_string(),
            ));
        }
    }

    let params = SolverParams {
        dt_max: config.solver.dt_max,
        cfl_safety: config.solver.cfl_safety,
        t_end: config.solver.t_end,
        sample_interval: config.solver.sample_interval,
        tol_newton: config.solver.tol_newton,
    };
    params
        .validate()
        .map_err(|e| CliError::Config(format!("solver: {e}")))?;

    let hypotheses = validate_hypotheses(&coefficient, &initial, &grid);
    if !skip_gate {
        for &t in &config.require_theorems {
            let (holds, what) = match t {
                1 => (hypotheses.flags.theorem1, "existence"),
                2 => (hypotheses.flags.theorem2, "stabilization"),
                3 => (hypotheses.flags.theorem3, "instantaneous boundedness"),
                other => {
                    return Err(CliError::Config(format!(
                        "require_theorems entries must be 1..=3, got {other}"
                    )))
                }
            };
            if !holds {
                let mut reasons = Vec::new();
                if !hypotheses.integral_inv_d.trusted() {
                    reasons.push("the reciprocal integral of d is unresolved or divergent");
                }
                if !hypotheses.integral_w0_weight.trusted() {
                    reasons.push("the initial compatibility weight integral is unresolved");
                }
                if t == 3 {
                    if !hypotheses.integral_inv_d_log.trusted() {
                        reasons.push("the L log L integral of 1/d is unresolved");
                    }
                    if !hypotheses.w0_vanishes_at_zeros {
                        reasons.push("w0 does not vanish on the zero set of d");
                    }
                }
                return Err(CliError::Hypothesis(format!(
                    "scenario demands theorem {t} ({what}) but its hypotheses fail: {}",
                    reasons.join("; ")
                )));
            }
        }
    }

    // failures of non-demanded hypothesis sets are warnings, not errors
    if !hypotheses.flags.theorem1 {
        eprintln!("warning: existence/stabilization hypotheses do not hold for this scenario");
    } else if !hypotheses.flags.theorem3 {
        eprintln!("warning: instantaneous-boundedness hypotheses do not hold for this scenario");
    }

    Ok(Scenario {
        config,
        grid,
        coefficient,
        absorption,
        initial,
        hypotheses,
    })
}
