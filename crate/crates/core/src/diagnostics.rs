//! Per-sample monitoring of every functional the model's estimates
//! constrain: masses, the three-part energy, its three dissipation channels,
//! the mean `μ` of `d_ε u` and the deviation from it, the two-sided bounds on
//! `ln(d_ε u)`, cumulative space-time integrals, and the concentration
//! supremum of `u` over small sets.

use crate::model::{hypotheses::greedy_measure_sup, AbsorptionSpec, ModelError, SpatialGrid};
use crate::regularize::FamilySlice;
use crate::solver::{self, SimState};

#[derive(Debug, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("window start tau = {tau} must lie in (0, t_end = {t_end})")]
    TauOutOfRange { tau: f64, t_end: f64 },
    #[error("trajectory has fewer than {needed} records")]
    TooFewRecords { needed: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `∑ u h` (conserved).
    pub mass_u: f64,
    /// `∑ w h` (nonincreasing).
    pub mass_w: f64,
    pub w_inf: f64,
    pub w_min: f64,
    /// Entropy part `∑ u ln(d_ε u) h`.
    pub e1: f64,
    /// Attractant gradient part `(1/2) ∑ d_ε w_x²/g(w) h`.
    pub e2: f64,
    /// Degeneracy weight part `(o_g/u_g²) ∑ (d_εx²/d_ε) w h`.
    pub e3: f64,
    pub e_total: f64,
    /// Fisher-type dissipation `∑ (d_ε u)_x²/(d_ε u) h` (face-based).
    pub d1: f64,
    /// Cross dissipation `(u_g/4o_g) ∑ d_ε u w_x²/w h`.
    pub d2: f64,
    /// Artificial-diffusion dissipation
    /// `(ε/2) ∑ (1/√g(w)) [(d_ε w_x/√g(w))_x]² h`.
    pub d3: f64,
    /// Spatial mean of `d_ε u`.
    pub mu: f64,
    /// `∑ |d_ε u - μ| h`.
    pub dev_l1: f64,
    pub ln_du_min: f64,
    pub ln_du_max: f64,
    /// Trapezoidal `∫ (D1+D2+D3) ds`.
    pub cum_dissipation: f64,
    /// Trapezoidal `∫ ∑ w_x² h ds`.
    pub cum_wx_l2: f64,
    /// Trapezoidal `∫ dev_l1² ds`.
    pub cum_dev_sq: f64,
    /// Greedy `sup_{|E| <= δ₀} ∑_E u h` at the configured δ₀.
    pub equi_worst: f64,
}

/// Running trapezoidal accumulators threaded through a run.
#[derive(Debug, Clone, Default)]
pub struct Accumulators {
    started: bool,
    last_t: f64,
    last_diss: f64,
    last_wx2: f64,
    last_devsq: f64,
    cum_dissipation: f64,
    cum_wx_l2: f64,
    cum_dev_sq: f64,
}

impl Accumulators {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Cell-centered slope of `w`: centered differences in the interior, forced
/// to zero on the two boundary cells to match the no-flux faces.
fn w_slope(w: &[f64], h: f64) -> Vec<f64> {
    let n = w.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (w[i + 1] - w[i - 1]) / (2.0 * h);
    }
    out
}

/// Computes every monitored functional at the given state and advances the
/// cumulative integrals.
pub fn record(
    state: &SimState,
    grid: &SpatialGrid,
    slice: &FamilySlice,
    g: &AbsorptionSpec,
    acc: &mut Accumulators,
    equi_delta: f64,
) -> DiagnosticsRecord {
    let h = grid.h();
    let n = grid.n_cells();
    let u = state.u.values();
    let w = state.w.values();
    let d = slice.d_eps;
    let dx = slice.d_eps_x;
    let eps = slice.eps;
    let (ug, og) = (g.ug(), g.og());

    let mass_u = state.u.integral(grid);
    let mass_w = state.w.integral(grid);
    let w_inf = state.w.max();
    let w_min = state.w.min();

    let v: Vec<f64> = (0..n).map(|i| d[i] * u[i]).collect();
    let wx = w_slope(w, h);

    let e1 = v
        .iter()
        .zip(u)
        .map(|(&vi, &ui)| if ui > 0.0 { ui * vi.ln() } else { 0.0 })
        .sum::<f64>()
        * h;
    let e2 = 0.5
        * (0..n)
            .map(|i| d[i] * wx[i] * wx[i] / g.g(w[i]))
            .sum::<f64>()
        * h;
    let e3 = og / (ug * ug) * (0..n).map(|i| dx[i] * dx[i] / d[i] * w[i]).sum::<f64>() * h;
    let e_total = e1 + e2 + e3;

    let mut d1 = 0.0;
    for f in 1..n {
        let diff = (v[f] - v[f - 1]) / h;
        let face = 0.5 * (v[f] + v[f - 1]);
        if face > 0.0 {
            d1 += diff * diff / face * h;
        }
    }
    let d2 = ug / (4.0 * og)
        * (0..n)
            .map(|i| {
                let q = wx[i] * wx[i];
                if q == 0.0 {
                    0.0
                } else {
                    d[i] * u[i] * q / w[i]
                }
            })
            .sum::<f64>()
        * h;
    let dterm = solver::w_diffusion_term(w, d, g, h, solver::mobility_floor(eps));
    let d3 = 0.5
        * eps
        * (0..n)
            .map(|i| dterm[i] * dterm[i] / g.g(w[i]).sqrt())
            .sum::<f64>()
        * h;

    let mu = v.iter().sum::<f64>() * h / grid.length();
    let dev_l1 = v.iter().map(|&vi| (vi - mu).abs()).sum::<f64>() * h;

    let (mut ln_min, mut ln_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &vi in &v {
        if vi > 0.0 {
            let l = vi.ln();
            ln_min = ln_min.min(l);
            ln_max = ln_max.max(l);
        }
    }

    let wx2 = wx.iter().map(|&s| s * s).sum::<f64>() * h;
    let diss = d1 + d2 + d3;
    let devsq = dev_l1 * dev_l1;
    if acc.started {
        let dt = state.t - acc.last_t;
        acc.cum_dissipation += 0.5 * (acc.last_diss + diss) * dt;
        acc.cum_wx_l2 += 0.5 * (acc.last_wx2 + wx2) * dt;
        acc.cum_dev_sq += 0.5 * (acc.last_devsq + devsq) * dt;
    }
    acc.started = true;
    acc.last_t = state.t;
    acc.last_diss = diss;
    acc.last_wx2 = wx2;
    acc.last_devsq = devsq;

    let equi_worst = if equi_delta > 0.0 {
        let masses: Vec<f64> = u.iter().map(|&ui| ui * h).collect();
        greedy_measure_sup(&masses, h, equi_delta.min(grid.length())).unwrap_or(f64::NAN)
    } else {
        0.0
    };

    DiagnosticsRecord {
        t: state.t,
        mass_u,
        mass_w,
        w_inf,
        w_min,
        e1,
        e2,
        e3,
        e_total,
        d1,
        d2,
        d3,
        mu,
        dev_l1,
        ln_du_min: ln_min,
        ln_du_max: ln_max,
        cum_dissipation: acc.cum_dissipation,
        cum_wx_l2: acc.cum_wx_l2,
        cum_dev_sq: acc.cum_dev_sq,
        equi_worst,
    }
}

/// Checks the discrete energy slope against the `√ε` source allowance
/// `√(o_g⁵ M ε)/(2 u_g⁴)` per unit time, where `M = ‖w_0‖_∞ + 1`.
///
/// Returns the number of samples whose energy increment exceeds the
/// allowance plus `tol_energy`, and the worst raw excess.
pub fn energy_slope_check(
    records: &[DiagnosticsRecord],
    eps: f64,
    g: &AbsorptionSpec,
    m_bound: f64,
    tol_energy: f64,
) -> (usize, f64) {
    let source = (g.og().powi(5) * m_bound * eps).sqrt() / (2.0 * g.ug().powi(4));
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for pair in records.windows(2) {
        let dt = pair[1].t - pair[0].t;
        let excess = (pair[1].e_total - pair[0].e_total) - source * dt;
        worst = worst.max(excess);
        if excess > tol_energy {
            violations += 1;
        }
    }
    (violations, worst)
}

/// Long-time summary of a finished trajectory.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct StabilizationReport {
    /// `dev_l1(t_end) / (μ_∞ |Ω|)`.
    pub final_dev_rel: f64,
    /// `|μ(t_end) - μ_∞| / μ_∞`.
    pub final_mu_rel_err: f64,
    pub final_w_inf: f64,
    /// Relative growth of `∫ dev² ` over the last tenth of the run.
    pub last_decade_increase_rel: f64,
    /// Whether that growth stayed below 5%.
    pub cum_dev_sq_saturated: bool,
}

pub fn stabilization_report(
    records: &[DiagnosticsRecord],
    mu_inf: f64,
    domain_len: f64,
) -> Result<StabilizationReport, DiagnosticsError> {
    let last = records
        .last()
        .ok_or(DiagnosticsError::TooFewRecords { needed: 1 })?;
    let t_end = last.t;
    let t_cut = 0.9 * t_end;
    let at_cut = records
        .iter()
        .rev()
        .find(|r| r.t <= t_cut + 1e-12 * t_end.max(1.0))
        .map(|r| r.cum_dev_sq)
        .unwrap_or(0.0);
    let total = last.cum_dev_sq;
    let increase = if total > 0.0 {
        (total - at_cut) / total
    } else {
        0.0
    };
    Ok(StabilizationReport {
        final_dev_rel: last.dev_l1 / (mu_inf * domain_len),
        final_mu_rel_err: (last.mu - mu_inf).abs() / mu_inf,
        final_w_inf: last.w_inf,
        last_decade_increase_rel: increase,
        cum_dev_sq_saturated: increase < 0.05,
    })
}

/// Two-sided envelope of `ln(d_ε u)` over a time window `[tau, t_end]`, the
/// implied pointwise envelope constants, and the cubed sup-norm time
/// integral.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BlowupReport {
    pub max_ln_du: f64,
    pub max_neg_ln_du: f64,
    /// Lower envelope constant: `u >= c1_envelope / d_ε` on the window.
    pub c1_envelope: f64,
    /// Upper envelope constant: `u <= c2_envelope / d_ε` on the window.
    pub c2_envelope: f64,
    /// Trapezoidal `∫_tau^T ‖ln(d_ε u)‖_∞³ dt`.
    pub ln_cubed_integral: f64,
}

pub fn blowup_report(
    records: &[DiagnosticsRecord],
    tau: f64,
) -> Result<BlowupReport, DiagnosticsError> {
    let t_end = records.last().map(|r| r.t).unwrap_or(0.0);
    if !(tau > 0.0 && tau < t_end) {
        return Err(DiagnosticsError::TauOutOfRange { tau, t_end });
    }
    let window: Vec<&DiagnosticsRecord> = records.iter().filter(|r| r.t >= tau).collect();
    if window.len() < 2 {
        return Err(DiagnosticsError::TooFewRecords { needed: 2 });
    }
    let max_ln = window
        .iter()
        .map(|r| r.ln_du_max)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_ln = window
        .iter()
        .map(|r| r.ln_du_min)
        .fold(f64::INFINITY, f64::min);
    let sup_norm = |r: &DiagnosticsRecord| r.ln_du_max.abs().max(r.ln_du_min.abs());
    let mut integral = 0.0;
    for pair in window.windows(2) {
        let dt = pair[1].t - pair[0].t;
        integral += 0.5 * (sup_norm(pair[0]).powi(3) + sup_norm(pair[1]).powi(3)) * dt;
    }
    Ok(BlowupReport {
        max_ln_du: max_ln,
        max_neg_ln_du: -min_ln,
        c1_envelope: min_ln.exp(),
        c2_envelope: max_ln.exp(),
        ln_cubed_integral: integral,
    })
}

/// Largest neighbor difference of `w` scaled by the square root of the
/// concentration modulus at one cell width.  The natural equicontinuity
/// quotient of the attractant; it carries no principled threshold and is
/// reported rather than asserted.
pub fn w_holder_quotient(w: &crate::model::ScalarField, omega_at_h: f64) -> f64 {
    let max_jump = w
        .values()
        .windows(2)
        .map(|p| (p[1] - p[0]).abs())
        .fold(0.0f64, f64::max);
    max_jump / omega_at_h.sqrt()
}

/// Greedy supremum of `∑_E u h` over cell sets of measure at most `delta`.
pub fn equi_integrability(
    state: &SimState,
    grid: &SpatialGrid,
    delta: f64,
) -> Result<f64, DiagnosticsError> {
    if !(delta > 0.0 && delta <= grid.length() * (1.0 + 1e-12)) {
        return Err(DiagnosticsError::Model(ModelError::InvalidDelta(delta)));
    }
    let h = grid.h();
    let masses: Vec<f64> = state.u.values().iter().map(|&u| u * h).collect();
    Ok(greedy_measure_sup(&masses, h, delta)?)
}
