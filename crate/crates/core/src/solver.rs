//! Mass-conservative, positivity-preserving IMEX time integration of the
//! regularized system on a fixed cell-centered grid.
//!
//! One step advances
//!
//! ```text
//!   u_t = (d_ε u)_xx - (d_ε u w_x)_x        (flux form, zero total flux at faces)
//!   w_t = ε (d_ε w_x / sqrt(g(w)))_x - u g(w)
//! ```
//!
//! with the `u`-diffusion implicit in the conserved product `v = d_ε u` (one
//! tridiagonal solve), the haptotactic advection explicit with donor-cell
//! upwinding by the sign of the face slope of `w`, the artificial
//! `w`-diffusion explicit, and the absorption semi-implicit through the
//! continuous extension of `g(w)/w`.  Writing the diffusion as the second
//! difference of `v` keeps the singular steady profile `v ≡ const`
//! representable exactly, and the flux form conserves `∑ u h` to round-off.

use crate::diagnostics::{self, Accumulators, DiagnosticsRecord};
use crate::model::{AbsorptionSpec, ModelError, ScalarField, SpatialGrid};
use crate::regularize::FamilySlice;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("non-finite value in {field} at step {step}, t = {t}")]
    NonFinite {
        field: &'static str,
        step: u64,
        t: f64,
    },
    #[error("positivity lost in {field} at step {step}, t = {t} (min = {min})")]
    PositivityLost {
        field: &'static str,
        step: u64,
        t: f64,
        min: f64,
    },
    #[error(
        "tridiagonal solve residual {residual:.3e} exceeds tolerance {tol:.3e} at step {step}"
    )]
    SolveResidual { residual: f64, tol: f64, step: u64 },
    #[error("stable time step degenerated to {dt} at t = {t}")]
    DegenerateTimeStep { dt: f64, t: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Snapshot of the regularized system.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: ScalarField,
    pub w: ScalarField,
    pub eps: f64,
    pub step_count: u64,
}

impl SimState {
    pub fn new(u: ScalarField, w: ScalarField, eps: f64) -> Self {
        Self {
            t: 0.0,
            u,
            w,
            eps,
            step_count: 0,
        }
    }
}

/// Time-stepping controls.
///
/// `cfl_safety` must stay at or below 1; values at or below 0.5 additionally
/// guarantee sign preservation of both fields under [`stable_dt`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolverParams {
    pub dt_max: f64,
    pub cfl_safety: f64,
    pub t_end: f64,
    /// Diagnostics cadence; records are emitted on this time lattice.
    pub sample_interval: f64,
    /// Residual tolerance for the implicit solve (relative to the data).
    pub tol_newton: f64,
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = self.dt_max > 0.0
            && self.cfl_safety > 0.0
            && self.cfl_safety <= 1.0
            && self.t_end >= 0.0
            && self.sample_interval > 0.0
            && self.tol_newton > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidGrid(format!(
                "invalid solver parameters: {self:?}"
            )))
        }
    }
}

/// Run controls that are not per-step numerics.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Times at which full field snapshots are captured (clipped to targets
    /// exactly).
    pub snapshot_times: Vec<f64>,
    /// Measure budget for the per-record equi-integrability supremum.
    pub equi_delta: f64,
    /// Optional early stop: relative flatness of `d_ε u` held for 10
    /// consecutive samples.
    pub steady_stop_rel_tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: ScalarField,
    pub w: ScalarField,
}

/// Full result of a run: the diagnostics series, requested snapshots and the
/// final state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SimState,
    pub stopped_early: bool,
}

/// Mobility floor for the artificial `w`-diffusion.
///
/// The flux `ε d_ε w_x/sqrt(g(w))` has mobility that grows like `w^{-1/2}`
/// while the flux itself vanishes like `w^{1/2}`; once absorption has driven
/// `w` exponentially small the explicit stability bound would collapse even
/// though the term no longer moves anything.  Evaluating the mobility with
/// `w` floored at `sqrt(ε)` (far below the initial floor `ε^{1/4}`) keeps the
/// time step bounded away from zero at a flux error that is `O(ε^{5/4})`.
pub(crate) fn mobility_floor(eps: f64) -> f64 {
    eps.sqrt()
}

/// Central face-flux discretization of `(d_ε w_x / sqrt(g(w)))_x` with
/// zero-flux boundary faces; shared with the diagnostics so the monitored
/// dissipation uses the scheme's own operator.
pub(crate) fn w_diffusion_term(
    w: &[f64],
    d_eps: &[f64],
    g: &AbsorptionSpec,
    h: f64,
    floor: f64,
) -> Vec<f64> {
    let n = w.len();
    let mut flux = vec![0.0; n + 1];
    for f in 1..n {
        let w_face = 0.5 * (w[f - 1] + w[f]);
        let d_face = 0.5 * (d_eps[f - 1] + d_eps[f]);
        flux[f] = d_face * (w[f] - w[f - 1]) / (h * g.g(w_face.max(floor)).sqrt());
    }
    (0..n).map(|i| (flux[i + 1] - flux[i]) / h).collect()
}

/// Thomas algorithm for a diagonally dominant tridiagonal system.  The
/// factorization of an M-matrix with nonnegative right-hand side produces a
/// nonnegative solution without cancellation.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c_star = vec![0.0; n];
    let mut d_star = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 || !piv.is_finite() {
        return None;
    }
    c_star[0] = upper[0] / piv;
    d_star[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c_star[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        if i < n - 1 {
            c_star[i] = upper[i] / piv;
        }
        d_star[i] = (rhs[i] - lower[i] * d_star[i - 1]) / piv;
    }
    let mut x = d_star;
    for i in (0..n - 1).rev() {
        let correction = c_star[i] * x[i + 1];
        x[i] -= correction;
    }
    Some(x)
}

/// Largest admissible time step at the current state:
/// `cfl_safety · min{ h/max adv, h²√(u_g min w)/(2 ε max d_ε), dt_max }`,
/// where `adv_i = d_ε,i |w_x,i|` (taken over the adjacent face slopes) and
/// the `w`-minimum is floored consistently with the mobility floor.  The
/// implicit `u`-diffusion imposes no restriction.
pub fn stable_dt(
    state: &SimState,
    grid: &SpatialGrid,
    slice: &FamilySlice,
    g: &AbsorptionSpec,
    params: &SolverParams,
) -> f64 {
    let h = grid.h();
    let w = state.w.values();
    let d = slice.d_eps;
    let n = w.len();
    let mut max_adv = 0.0f64;
    for i in 0..n {
        let left = if i > 0 {
            (w[i] - w[i - 1]).abs() / h
        } else {
            0.0
        };
        let right = if i + 1 < n {
            (w[i + 1] - w[i]).abs() / h
        } else {
            0.0
        };
        max_adv = max_adv.max(d[i] * left.max(right));
    }
    let t_adv = if max_adv > 0.0 {
        h / max_adv
    } else {
        f64::INFINITY
    };

    let eps = slice.eps;
    let t_diff = if eps > 0.0 {
        let w_min = state.w.min().max(mobility_floor(eps));
        let d_max = d.iter().copied().fold(0.0f64, f64::max);
        h * h * (g.ug() * w_min).sqrt() / (2.0 * eps * d_max)
    } else {
        f64::INFINITY
    };

    params.cfl_safety * t_adv.min(t_diff).min(params.dt_max)
}

/// One IMEX update.  Conserves `∑ u h` to round-off and preserves `u >= 0`,
/// `w > 0` whenever `dt` respects [`stable_dt`] with `cfl_safety <= 0.5`.
pub fn step(
    state: &SimState,
    grid: &SpatialGrid,
    slice: &FamilySlice,
    g: &AbsorptionSpec,
    dt: f64,
    tol_newton: f64,
) -> Result<SimState, SolverError> {
    let n = grid.n_cells();
    let h = grid.h();
    let u = state.u.values();
    let w = state.w.values();
    let d = slice.d_eps;
    let step_id = state.step_count;

    // explicit upwind haptotaxis: advective flux d_ε u w_x at interior faces,
    // donor cell chosen by the sign of the face slope of w
    let mut adv = vec![0.0; n + 1];
    for f in 1..n {
        let wx = (w[f] - w[f - 1]) / h;
        let donor = if wx > 0.0 { f - 1 } else { f };
        adv[f] = d[donor] * u[donor] * wx;
    }

    let lam = dt / (h * h);
    let mut lower = vec![-lam; n];
    let mut upper = vec![-lam; n];
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let neighbors = usize::from(i > 0) + usize::from(i + 1 < n);
        diag[i] = 1.0 / d[i] + lam * neighbors as f64;
        rhs[i] = u[i] - dt / h * (adv[i + 1] - adv[i]);
    }

    let v_new =
        solve_tridiagonal(&lower, &diag, &upper, &rhs).ok_or(SolverError::SolveResidual {
            residual: f64::INFINITY,
            tol: tol_newton,
            step: step_id,
        })?;

    let rhs_scale = rhs.iter().fold(1.0f64, |m, &r| m.max(r.abs()));
    let mut residual = 0.0f64;
    for i in 0..n {
        let mut lhs = diag[i] * v_new[i];
        if i > 0 {
            lhs += lower[i] * v_new[i - 1];
        }
        if i + 1 < n {
            lhs += upper[i] * v_new[i + 1];
        }
        residual = residual.max((lhs - rhs[i]).abs());
    }
    if residual > tol_newton * rhs_scale {
        return Err(SolverError::SolveResidual {
            residual,
            tol: tol_newton * rhs_scale,
            step: step_id,
        });
    }

    let u_new: Vec<f64> = v_new.iter().zip(d).map(|(&v, &di)| v / di).collect();

    // explicit artificial diffusion + semi-implicit absorption for w
    let dterm = w_diffusion_term(w, d, g, h, mobility_floor(slice.eps));
    let w_new: Vec<f64> = (0..n)
        .map(|i| (w[i] + dt * slice.eps * dterm[i]) / (1.0 + dt * u[i] * g.ratio(w[i])))
        .collect();

    let t_new = state.t + dt;
    for (field, vals) in [("u", &u_new), ("w", &w_new)] {
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite {
                field,
                step: step_id,
                t: t_new,
            });
        }
    }
    let u_min = u_new.iter().copied().fold(f64::INFINITY, f64::min);
    if u_min < 0.0 {
        return Err(SolverError::PositivityLost {
            field: "u",
            step: step_id,
            t: t_new,
            min: u_min,
        });
    }
    let w_min = w_new.iter().copied().fold(f64::INFINITY, f64::min);
    if w_min <= 0.0 {
        return Err(SolverError::PositivityLost {
            field: "w",
            step: step_id,
            t: t_new,
            min: w_min,
        });
    }

    Ok(SimState {
        t: t_new,
        u: ScalarField::from_values(grid, u_new)?,
        w: ScalarField::from_values(grid, w_new)?,
        eps: state.eps,
        step_count: state.step_count + 1,
    })
}

/// Advances the state to `t_end` with [`stable_dt`], emitting a diagnostics
/// record on every `sample_interval` lattice point (and at `t_end`) and a
/// field snapshot at each requested time.  Identical inputs produce
/// bit-identical trajectories.
pub fn run(
    initial: SimState,
    grid: &SpatialGrid,
    slice: &FamilySlice,
    g: &AbsorptionSpec,
    params: &SolverParams,
    options: &RunOptions,
) -> Result<Trajectory, SolverError> {
    params.validate()?;
    let mut snap_times: Vec<f64> = options
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t >= 0.0 && t <= params.t_end)
        .collect();
    snap_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    snap_times.dedup();

    let mut acc = Accumulators::new();
    let mut state = initial;
    let mut records = vec![diagnostics::record(
        &state,
        grid,
        slice,
        g,
        &mut acc,
        options.equi_delta,
    )];
    let mut snapshots = Vec::new();
    let mut snap_idx = 0;
    while snap_idx < snap_times.len() && snap_times[snap_idx] <= 0.0 {
        snapshots.push(Snapshot {
            t: state.t,
            u: state.u.clone(),
            w: state.w.clone(),
        });
        snap_idx += 1;
    }

    let mut k_sample: u64 = 1;
    let mut flat_streak = 0u32;
    let mut stopped_early = false;
    let time_tol = 1e-12 * params.t_end.max(1.0);

    while state.t < params.t_end - time_tol {
        let next_sample = (k_sample as f64 * params.sample_interval).min(params.t_end);
        let next_snap = snap_times.get(snap_idx).copied().unwrap_or(f64::INFINITY);
        let target = next_sample.min(next_snap).min(params.t_end);

        let dt_stable = stable_dt(&state, grid, slice, g, params);
        if !(dt_stable.is_finite() && dt_stable > 0.0) {
            return Err(SolverError::DegenerateTimeStep {
                dt: dt_stable,
                t: state.t,
            });
        }
        let remaining = target - state.t;
        let clipped = remaining <= dt_stable;
        let dt = if clipped { remaining } else { dt_stable };
        state = step(&state, grid, slice, g, dt, params.tol_newton)?;
        if clipped {
            state.t = target;
        }

        if snap_idx < snap_times.len() && state.t >= next_snap - time_tol {
            snapshots.push(Snapshot {
                t: state.t,
                u: state.u.clone(),
                w: state.w.clone(),
            });
            snap_idx += 1;
        }
        if state.t >= next_sample - time_tol {
            let rec = diagnostics::record(&state, grid, slice, g, &mut acc, options.equi_delta);
            if let Some(tol) = options.steady_stop_rel_tol {
                let flat = rec.dev_l1 / (rec.mu.abs().max(1e-300) * grid.length());
                if flat < tol {
                    flat_streak += 1;
                } else {
                    flat_streak = 0;
                }
            }
            records.push(rec);
            k_sample = ((state.t / params.sample_interval).floor() as u64).max(k_sample) + 1;
            if options.steady_stop_rel_tol.is_some() && flat_streak >= 10 {
                stopped_early = true;
                break;
            }
        }
    }

    Ok(Trajectory {
        records,
        snapshots,
        final_state: state,
        stopped_early,
    })
}
