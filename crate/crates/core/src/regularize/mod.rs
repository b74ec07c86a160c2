//! Construction of the approximation families used by the regularized system.
//!
//! For each member index `j` the coefficient `d` is replaced by a smooth
//! strictly positive `d_ε`, built in three steps on a refined working grid:
//! a domain squeeze that freezes boundary values, a discrete mollification
//! with a compactly supported bump, and an upward shift `2·3^{-j}`.  The
//! result is sandwiched between `d + 3^{-j}` and `d + 3·3^{-j}`, decreases
//! monotonically in `j`, and has vanishing derivative at both endpoints.
//!
//! The initial attractant data is cut off near the zero set of `d` by
//! squared piecewise-linear ramps whose widths shrink with `j`, and finally
//! shifted by `ε^{1/4}` so the regularized problem starts strictly positive.
//! The member values `ε_j` are selected recursively so that a fixed list of
//! weighted-gradient bounds holds with constant 1, which is what keeps the
//! discrete energy functional of the solver uniformly controlled along the
//! family.
//!
//! The squeeze tolerance shrinks geometrically with `j` while the boundary
//! caps must stay at least two working cells wide (that is what makes the
//! endpoint derivative vanish identically), so each grid supports a maximal
//! member depth; construction past it fails with
//! [`RegularizeError::CapTooNarrow`] rather than silently degrading.  Zeros
//! away from the domain midpoint are displaced by the squeeze and tighten
//! this limit further.

mod builder;

pub use builder::{build_d_eps, build_w0j, select_epsilons, verify_family, FamilyBuilder};

use crate::model::{ModelError, ScalarField, SpatialGrid};

/// Refinement factor of the working grid relative to the simulation grid.
///
/// Odd so that every simulation cell center coincides with a working cell
/// center (restriction is plain sampling), and >= 8 so that mollification
/// radii below one simulation cell stay resolvable.
pub const WORK_REFINE: usize = 9;

/// Errors raised during family construction and verification.
#[derive(Debug, thiserror::Error)]
pub enum RegularizeError {
    #[error("{what}: bisection could not meet tolerance {target:.3e} within {iters} iterations (achieved {achieved:.3e})")]
    BisectionFailed {
        what: String,
        target: f64,
        achieved: f64,
        iters: usize,
    },
    #[error(
        "{what}: halving from 1 never satisfied the target {target:.6} (achieved {achieved:.6})"
    )]
    HalvingFailed {
        what: String,
        target: f64,
        achieved: f64,
    },
    #[error("member {j}: boundary cap of width {cap:.3e} cannot hold a flat two-cell margin at working width {h_work:.3e}")]
    CapTooNarrow { j: usize, cap: f64, h_work: f64 },
    #[error("positivity interval ({a}, {b}) spans only {cells} cells (need >= 4)")]
    IntervalTooNarrow { a: f64, b: f64, cells: usize },
    #[error("member {j}: {name} = {value:.6e} violates its bound")]
    BoundViolated {
        j: usize,
        name: &'static str,
        value: f64,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One maximal open subinterval of the positivity set of `d`, with flags for
/// which of its endpoints are zeros of `d` (as opposed to domain boundary
/// points where `d` stays positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityInterval {
    pub a: f64,
    pub b: f64,
    pub left_degenerate: bool,
    pub right_degenerate: bool,
}

/// Per-member verified quantities.
///
/// The four `*_bound` columns are the quantities the selection of `ε_j`
/// forces to be at most 1; `w_energy` and `w_weight` are the two initial-data
/// integrals that must stay bounded uniformly in `j`; `sup_dist` tracks the
/// uniform convergence `d_ε -> d`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LedgerRow {
    pub j: usize,
    pub eps: f64,
    /// `ε² ∫ d_εx²/d_ε³` (target <= 1).
    pub grad_sq_bound: f64,
    /// `√ε ∫ d_εx⁴/d_ε²` (target <= 1).
    pub grad_quartic_bound: f64,
    /// `ε^{1/4} / min d_ε` (target <= 1).
    pub floor_bound: f64,
    /// `ε^{1/4} ‖d_εx/d_ε‖_∞` (target <= 1).
    pub log_slope_bound: f64,
    /// `∫ d_ε w_0εx²/w_0ε`.
    pub w_energy: f64,
    /// `∫ (d_εx²/d_ε) w_0ε`.
    pub w_weight: f64,
    /// `‖d_ε - d‖_∞` on the working grid.
    pub sup_dist: f64,
}

/// Ledger of verified bounds for a whole family.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PropertyLedger {
    pub rows: Vec<LedgerRow>,
}

impl PropertyLedger {
    pub fn max_w_energy(&self) -> f64 {
        self.rows.iter().map(|r| r.w_energy).fold(0.0, f64::max)
    }

    pub fn max_w_weight(&self) -> f64 {
        self.rows.iter().map(|r| r.w_weight).fold(0.0, f64::max)
    }
}

/// Coefficient data of one family member as consumed by the solver.
#[derive(Debug, Clone, Copy)]
pub struct FamilySlice<'a> {
    pub eps: f64,
    /// `d_ε` at simulation cell centers.
    pub d_eps: &'a [f64],
    /// `d_εx` at simulation cell centers.
    pub d_eps_x: &'a [f64],
}

/// The indexed family `(ε_j, d_{ε_j}, w_{0j}, w_{0ε_j})` together with its
/// verified property ledger and the working-grid data needed to re-verify it.
#[derive(Debug, Clone)]
pub struct RegularizationFamily {
    pub(crate) grid: SpatialGrid,
    pub(crate) work: SpatialGrid,
    pub(crate) epsilons: Vec<f64>,
    pub(crate) d_eps_fields: Vec<ScalarField>,
    pub(crate) d_eps_x_fields: Vec<ScalarField>,
    pub(crate) w0j_fields: Vec<ScalarField>,
    pub(crate) w0eps_fields: Vec<ScalarField>,
    pub(crate) ledger: PropertyLedger,
    // working-grid data (verification + diagnostics)
    pub(crate) d_work: Vec<f64>,
    pub(crate) d_x_work: Vec<f64>,
    pub(crate) phi_work: Vec<Vec<f64>>,
    pub(crate) phi_x_work: Vec<Vec<f64>>,
    pub(crate) w0j_work: Vec<Vec<f64>>,
    pub(crate) intervals: Vec<PositivityInterval>,
    pub(crate) ramp_widths: Vec<Vec<f64>>,
}

impl RegularizationFamily {
    /// Number of members (`j` ranges over `1..=len()`).
    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn working_grid(&self) -> &SpatialGrid {
        &self.work
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn eps(&self, j: usize) -> f64 {
        self.epsilons[j - 1]
    }

    pub fn d_eps(&self, j: usize) -> &ScalarField {
        &self.d_eps_fields[j - 1]
    }

    pub fn d_eps_x(&self, j: usize) -> &ScalarField {
        &self.d_eps_x_fields[j - 1]
    }

    pub fn w0j(&self, j: usize) -> &ScalarField {
        &self.w0j_fields[j - 1]
    }

    /// Shifted initial attractant data `w_{0j} + ε_j^{1/4}`.
    pub fn w0eps(&self, j: usize) -> &ScalarField {
        &self.w0eps_fields[j - 1]
    }

    pub fn ledger(&self) -> &PropertyLedger {
        &self.ledger
    }

    pub fn slice(&self, j: usize) -> FamilySlice<'_> {
        FamilySlice {
            eps: self.epsilons[j - 1],
            d_eps: self.d_eps_fields[j - 1].values(),
            d_eps_x: self.d_eps_x_fields[j - 1].values(),
        }
    }

    pub fn intervals(&self) -> &[PositivityInterval] {
        &self.intervals
    }

    /// Ramp widths `δ_j^{(i)}` of member `j`, one per positivity interval.
    pub fn ramp_widths(&self, j: usize) -> &[f64] {
        &self.ramp_widths[j - 1]
    }

    /// Working-grid values of member `j`'s coefficient (for verification).
    pub fn phi_work(&self, j: usize) -> &[f64] {
        &self.phi_work[j - 1]
    }

    pub fn phi_x_work(&self, j: usize) -> &[f64] {
        &self.phi_x_work[j - 1]
    }

    pub fn d_work(&self) -> &[f64] {
        &self.d_work
    }

    pub fn d_x_work(&self) -> &[f64] {
        &self.d_x_work
    }
}

#[cfg(test)]
mod tests;
