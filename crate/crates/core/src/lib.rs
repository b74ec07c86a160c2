//! Simulation and verification laboratory for the 1-D haptotaxis system
//!
//! ```text
//!   u_t = (d(x) u)_xx - (d(x) u w_x)_x
//!   w_t = -u g(w)
//! ```
//!
//! posed under no-flux boundary conditions on a bounded interval, where the
//! motility coefficient `d` may vanish at isolated points while keeping
//! `∫ 1/d` finite.  The crate provides
//!
//! * problem data and hypothesis checking ([`model`]),
//! * construction of the smooth positive coefficient families `d_ε` and the
//!   shifted initial attractant data `w_0ε` used by the strictly parabolic
//!   approximation ([`regularize`]),
//! * a mass-conservative, positivity-preserving IMEX finite-volume solver for
//!   the regularized system ([`solver`]),
//! * per-sample monitoring of every conserved and dissipated functional
//!   ([`diagnostics`]),
//! * independent reference computations used to validate the solver
//!   ([`oracle`]).

pub mod diagnostics;
pub mod model;
pub mod oracle;
pub mod regularize;
pub mod solver;

pub use model::{
    AbsorptionSpec, CoefficientSpec, HypothesisReport, InitialData, ScalarField, SpatialGrid,
};
pub use regularize::RegularizationFamily;
pub use solver::{SimState, SolverParams, Trajectory};
