use super::{
    LedgerRow, PositivityInterval, PropertyLedger, RegularizationFamily, RegularizeError,
    WORK_REFINE,
};
use crate::model::{CoefficientSpec, ScalarField, SpatialGrid};

const BISECT_ITERS: usize = 60;
/// Fraction of the half-budget `3^{-j}/2` actually targeted by the squeeze
/// and mollification steps; the slack keeps the sandwich bounds strict.
const TOL_FRACTION: f64 = 0.9;

fn pow3_neg(j: usize) -> f64 {
    3.0f64.powi(-(j as i32))
}

/// Centered difference with mirrored ghost cells (zero-slope continuation).
fn centered_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let vm = values[if i == 0 { 0 } else { i - 1 }];
        let vp = values[if i + 1 == n { n - 1 } else { i + 1 }];
        out[i] = (vp - vm) / (2.0 * h);
    }
    out
}

fn quad(values: impl Iterator<Item = f64>, h: f64) -> f64 {
    values.sum::<f64>() * h
}

/// Largest parameter in `[0, hi]` whose error stays within `tol`, found by
/// bisection under the convention `err(0) = 0`.
fn largest_meeting(
    mut err: impl FnMut(f64) -> f64,
    hi: f64,
    tol: f64,
    what: &str,
) -> Result<f64, RegularizeError> {
    if err(hi) <= tol {
        return Ok(hi);
    }
    let mut lo = 0.0;
    let mut hi = hi;
    let mut achieved = err(lo);
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let e = err(mid);
        if e <= tol {
            lo = mid;
            achieved = e;
        } else {
            hi = mid;
        }
    }
    if achieved <= tol {
        Ok(lo)
    } else {
        Err(RegularizeError::BisectionFailed {
            what: what.into(),
            target: tol,
            achieved,
            iters: BISECT_ITERS,
        })
    }
}

/// Domain squeeze: pull the graph of `d` outward by the factor `1 + delta`
/// around the domain midpoint and freeze the boundary values on the two caps
/// `|x - mid| >= R/(1 + delta)`.
fn squeeze_eval(spec: &CoefficientSpec, grid: &SpatialGrid, delta: f64, x: f64) -> f64 {
    let mid = 0.5 * (grid.left() + grid.right());
    let r = 0.5 * grid.length();
    let xi = x - mid;
    let cap = r / (1.0 + delta);
    if xi <= -cap {
        spec.eval(grid.left())
    } else if xi >= cap {
        spec.eval(grid.right())
    } else {
        spec.eval(mid + (1.0 + delta) * xi)
    }
}

/// Normalized discrete bump weights `exp(-1/(1-s^2))` on offsets `m h` with
/// `|m h| < eta`.  Radii below one cell degenerate to the identity.
fn bump_weights(eta: f64, h: f64) -> Vec<f64> {
    let m_max = if eta <= h {
        0
    } else {
        ((eta / h).ceil() as usize).saturating_sub(1)
    };
    let mut w: Vec<f64> = (-(m_max as isize)..=m_max as isize)
        .map(|m| {
            let s = m as f64 * h / eta;
            if s.abs() < 1.0 {
                (-1.0 / (1.0 - s * s)).exp()
            } else {
                0.0
            }
        })
        .collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Discrete convolution with constant continuation outside the grid.
fn convolve(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = values.len() as isize;
    let m_max = (weights.len() / 2) as isize;
    (0..n)
        .map(|k| {
            weights
                .iter()
                .enumerate()
                .map(|(wi, &w)| {
                    let src = (k - (wi as isize - m_max)).clamp(0, n - 1);
                    w * values[src as usize]
                })
                .sum()
        })
        .collect()
}

/// Builds member `j` of the coefficient family on the working grid.
///
/// Returns the field, its centered-difference derivative and the measured
/// sup distance to `d`.
fn build_d_eps_work(
    spec: &CoefficientSpec,
    work: &SpatialGrid,
    j: usize,
) -> Result<(Vec<f64>, Vec<f64>), RegularizeError> {
    assert!(j >= 1, "member index starts at 1");
    let tol = TOL_FRACTION * 0.5 * pow3_neg(j);
    let d_vals: Vec<f64> = work.centers().iter().map(|&x| spec.eval(x)).collect();
    let h_w = work.h();
    let r = 0.5 * work.length();

    let squeeze_err = |delta: f64| {
        work.centers()
            .iter()
            .zip(&d_vals)
            .map(|(&x, &d)| (squeeze_eval(spec, work, delta, x) - d).abs())
            .fold(0.0f64, f64::max)
    };
    let delta = largest_meeting(squeeze_err, 0.9, tol, &format!("squeeze (member {j})"))?;
    let cap = delta * r / (1.0 + delta);
    if cap < 2.0 * h_w {
        return Err(RegularizeError::CapTooNarrow {
            j,
            cap,
            h_work: h_w,
        });
    }
    let psi: Vec<f64> = work
        .centers()
        .iter()
        .map(|&x| squeeze_eval(spec, work, delta, x))
        .collect();

    // Mollification radius: at most the cap minus a flat two-cell margin, so
    // the smoothed field stays exactly constant on the outermost cells and
    // the endpoint derivative vanishes identically.
    let eta_cap = cap - 2.0 * h_w;
    let moll_err = |eta: f64| {
        if eta <= 0.0 {
            return 0.0;
        }
        let smoothed = convolve(&psi, &bump_weights(eta, h_w));
        smoothed
            .iter()
            .zip(&psi)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0f64, f64::max)
    };
    let eta = largest_meeting(
        moll_err,
        eta_cap,
        tol,
        &format!("mollification (member {j})"),
    )?;
    let mut phi = if eta > 0.0 {
        convolve(&psi, &bump_weights(eta, h_w))
    } else {
        psi
    };
    let shift = 2.0 * pow3_neg(j);
    for v in &mut phi {
        *v += shift;
    }

    // sandwich d + 3^{-j} <= phi <= d + 3·3^{-j}
    let lo = pow3_neg(j);
    let hi = 3.0 * pow3_neg(j);
    for (&p, &d) in phi.iter().zip(&d_vals) {
        let gap = p - d;
        if !(gap >= lo && gap <= hi) {
            return Err(RegularizeError::BoundViolated {
                j,
                name: "sandwich",
                value: gap / pow3_neg(j),
            });
        }
    }

    let phi_x = centered_derivative(&phi, h_w);
    Ok((phi, phi_x))
}

/// Restriction from the working grid to simulation cell centers (the working
/// refinement is odd, so centers coincide and restriction is sampling).
fn restrict(work_values: &[f64], n_sim: usize) -> Vec<f64> {
    (0..n_sim)
        .map(|i| work_values[WORK_REFINE * i + WORK_REFINE / 2])
        .collect()
}

/// Member `j` of the smooth positive coefficient family, restricted to the
/// simulation grid: the field and its derivative.
pub fn build_d_eps(
    spec: &CoefficientSpec,
    grid: &SpatialGrid,
    j: usize,
) -> Result<(ScalarField, ScalarField), RegularizeError> {
    let work = grid.refine(WORK_REFINE);
    let (phi, phi_x) = build_d_eps_work(spec, &work, j)?;
    let field = ScalarField::from_values(grid, restrict(&phi, grid.n_cells()))?;
    let derivative = ScalarField::from_values(grid, restrict(&phi_x, grid.n_cells()))?;
    Ok((field, derivative))
}

/// Maximal open subintervals of `{d > 0}` with endpoint degeneracy flags.
pub(crate) fn positivity_intervals(
    spec: &CoefficientSpec,
    grid: &SpatialGrid,
) -> Vec<PositivityInterval> {
    let (a, b) = (grid.left(), grid.right());
    let zeros = spec.zeros_in(a, b);
    let mut cuts = vec![a];
    cuts.extend(zeros.iter().copied().filter(|&z| z > a && z < b));
    cuts.push(b);
    let is_zero = |x: f64| zeros.iter().any(|&z| z == x);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        // guard against flat zero regions in tabulated coefficients
        if spec.eval(0.5 * (lo + hi)) <= 0.0 {
            continue;
        }
        out.push(PositivityInterval {
            a: lo,
            b: hi,
            left_degenerate: is_zero(lo),
            right_degenerate: is_zero(hi),
        });
    }
    out
}

/// Ramp width for interval `i` (1-based spatial index) at member `j`:
/// `min{ width/4, 1/j, largest δ with sup d <= 2^{-i} on the 2δ-windows at
/// each degenerate endpoint }`.
fn ramp_width(
    spec: &CoefficientSpec,
    interval: &PositivityInterval,
    i: usize,
    j: usize,
) -> Result<f64, RegularizeError> {
    let width = interval.b - interval.a;
    let mut delta = (0.25 * width * (1.0 - 1e-9)).min(1.0 / j as f64);
    let thresh = 2.0f64.powi(-(i as i32));
    if interval.left_degenerate {
        let sup_err = |d: f64| spec.sup_on(interval.a, interval.a + 2.0 * d);
        delta = delta.min(largest_meeting(
            sup_err,
            delta,
            thresh,
            &format!("ramp window (interval {i}, left)"),
        )?);
    }
    if interval.right_degenerate {
        let sup_err = |d: f64| spec.sup_on(interval.b - 2.0 * d, interval.b);
        delta = delta.min(largest_meeting(
            sup_err,
            delta,
            thresh,
            &format!("ramp window (interval {i}, right)"),
        )?);
    }
    Ok(delta)
}

/// Squared-ramp cutoff `ζ_j(x)`: each of the first `j` positivity intervals
/// contributes a piecewise-linear plateau function that vanishes within
/// `δ_j^{(i)}` of its degenerate endpoints.
fn zeta(intervals: &[PositivityInterval], widths: &[f64], j: usize, x: f64) -> f64 {
    let mut total = 0.0;
    for (idx, (iv, &delta)) in intervals.iter().zip(widths).enumerate() {
        if idx + 1 > j {
            break;
        }
        if x < iv.a || x > iv.b {
            continue;
        }
        let mut v: f64 = 1.0;
        if iv.left_degenerate {
            v = v.min(((x - iv.a - delta) / delta).clamp(0.0, 1.0));
        }
        if iv.right_degenerate {
            v = v.min(((iv.b - delta - x) / delta).clamp(0.0, 1.0));
        }
        total += v;
    }
    total
}

/// Cut-off approximation of the initial attractant data: `w_{0j} = ζ_j² w_0`,
/// supported compactly inside `{d > 0}`, nondecreasing in `j`.
pub fn build_w0j(
    w0: &ScalarField,
    spec: &CoefficientSpec,
    grid: &SpatialGrid,
    j: usize,
) -> Result<ScalarField, RegularizeError> {
    let intervals = positivity_intervals(spec, grid);
    check_interval_resolution(&intervals, grid)?;
    let widths = interval_widths(spec, &intervals, j)?;
    let values = grid
        .centers()
        .iter()
        .zip(w0.values())
        .map(|(&x, &w)| {
            let z = zeta(&intervals, &widths, j, x);
            z * z * w
        })
        .collect();
    Ok(ScalarField::from_values(grid, values)?)
}

fn interval_widths(
    spec: &CoefficientSpec,
    intervals: &[PositivityInterval],
    j: usize,
) -> Result<Vec<f64>, RegularizeError> {
    intervals
        .iter()
        .enumerate()
        .map(|(idx, iv)| ramp_width(spec, iv, idx + 1, j))
        .collect()
}

fn check_interval_resolution(
    intervals: &[PositivityInterval],
    grid: &SpatialGrid,
) -> Result<(), RegularizeError> {
    for iv in intervals {
        let cells = grid
            .centers()
            .iter()
            .filter(|&&x| x > iv.a && x < iv.b)
            .count();
        if cells < 4 {
            return Err(RegularizeError::IntervalTooNarrow {
                a: iv.a,
                b: iv.b,
                cells,
            });
        }
    }
    Ok(())
}

/// One candidate member before the `ε_j` selection.
#[derive(Debug, Clone)]
struct MemberCandidate {
    phi: Vec<f64>,
    phi_x: Vec<f64>,
    w0j_work: Vec<f64>,
    w0j_sim: ScalarField,
    widths: Vec<f64>,
}

/// Incremental assembly of a [`RegularizationFamily`]: add members
/// `j = 1, 2, ...`, then select the `ε_j` and finish.
#[derive(Debug, Clone)]
pub struct FamilyBuilder {
    spec: CoefficientSpec,
    grid: SpatialGrid,
    work: SpatialGrid,
    d_work: Vec<f64>,
    d_x_work: Vec<f64>,
    w0_sim: ScalarField,
    w0_work: Vec<f64>,
    intervals: Vec<PositivityInterval>,
    members: Vec<MemberCandidate>,
}

impl FamilyBuilder {
    pub fn new(
        spec: &CoefficientSpec,
        w0: &ScalarField,
        grid: &SpatialGrid,
    ) -> Result<Self, RegularizeError> {
        let work = grid.refine(WORK_REFINE);
        work.check_staggered(&spec.zeros_in(grid.left(), grid.right()))?;
        let d_work: Vec<f64> = work.centers().iter().map(|&x| spec.eval(x)).collect();
        let d_x_work: Vec<f64> = work
            .centers()
            .iter()
            .map(|&x| spec.derivative(x).unwrap_or(f64::INFINITY))
            .collect();
        let w0_work: Vec<f64> = work.centers().iter().map(|&x| w0.interp(grid, x)).collect();
        let intervals = positivity_intervals(spec, grid);
        check_interval_resolution(&intervals, grid)?;
        Ok(Self {
            spec: spec.clone(),
            grid: grid.clone(),
            work,
            d_work,
            d_x_work,
            w0_sim: w0.clone(),
            w0_work,
            intervals,
            members: Vec::new(),
        })
    }

    /// Builds the next member's coefficient field and attractant cutoff.
    /// Members must be added consecutively starting from `j = 1`.
    pub fn add_member(&mut self) -> Result<(), RegularizeError> {
        let j = self.members.len() + 1;
        let (phi, phi_x) = build_d_eps_work(&self.spec, &self.work, j)?;
        let widths = interval_widths(&self.spec, &self.intervals, j)?;
        let w0j_work: Vec<f64> = self
            .work
            .centers()
            .iter()
            .zip(&self.w0_work)
            .map(|(&x, &w)| {
                let z = zeta(&self.intervals, &widths, j, x);
                z * z * w
            })
            .collect();
        let w0j_sim = build_w0j(&self.w0_sim, &self.spec, &self.grid, j)?;
        self.members.push(MemberCandidate {
            phi,
            phi_x,
            w0j_work,
            w0j_sim,
            widths,
        });
        Ok(())
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    /// `∫ d w_{0jx}²/w_{0j}` on the working grid (cells with `w_{0j} = 0`
    /// contribute nothing).
    fn w_energy_against(&self, member: &MemberCandidate, weight: &[f64], shift: f64) -> f64 {
        let h = self.work.h();
        let dx = centered_derivative(&member.w0j_work, h);
        quad(
            member
                .w0j_work
                .iter()
                .zip(&dx)
                .zip(weight)
                .map(|((&w, &wx), &coef)| {
                    let denom = w + shift;
                    if denom > 0.0 {
                        coef * wx * wx / denom
                    } else {
                        0.0
                    }
                }),
            h,
        )
    }

    /// Recursive member-value selection.
    ///
    /// `ε_j` is the minimum of: half the previous value, `3^{-4j}`, three
    /// reciprocal powers of weighted gradient integrals of the member
    /// coefficient (a vanishing integral imposes no constraint), two values
    /// found by halving until the initial-data integrals stay within their
    /// uniform targets, and `1/j`.
    pub fn select_epsilons(&self) -> Result<Vec<f64>, RegularizeError> {
        let h = self.work.h();
        let omega_len = self.grid.length();

        // uniform targets computed from the current family
        let c1 = self
            .members
            .iter()
            .map(|m| self.w_energy_against(m, &self.d_work, 0.0))
            .fold(0.0f64, f64::max);
        let c2 = quad(
            self.d_work
                .iter()
                .zip(&self.d_x_work)
                .zip(&self.w0_work)
                .map(|((&d, &dx), &w)| if d > 0.0 { dx * dx / d * w } else { 0.0 }),
            h,
        );

        let mut eps = Vec::with_capacity(self.members.len());
        let mut prev = 1.0f64;
        for (idx, m) in self.members.iter().enumerate() {
            let j = idx + 1;
            let grad_sq = quad(
                m.phi
                    .iter()
                    .zip(&m.phi_x)
                    .map(|(&p, &px)| px * px / p.powi(3)),
                h,
            );
            let grad_quartic = quad(
                m.phi
                    .iter()
                    .zip(&m.phi_x)
                    .map(|(&p, &px)| px.powi(4) / (p * p)),
                h,
            );
            let log_slope = m
                .phi
                .iter()
                .zip(&m.phi_x)
                .map(|(&p, &px)| (px / p).abs())
                .fold(0.0f64, f64::max);

            // a zero integral means "no constraint"
            let inv_or_inf = |v: f64, f: &dyn Fn(f64) -> f64| {
                if v <= 0.0 {
                    f64::INFINITY
                } else {
                    f(v)
                }
            };
            let t_grad_sq = inv_or_inf(grad_sq, &|v| v.powf(-0.5));
            let t_grad_quartic = inv_or_inf(grad_quartic, &|v| v.powi(-2));
            let t_log_slope = inv_or_inf(log_slope, &|v| v.powi(-4));

            let eps1 = self.halve_until(
                |cand| self.w_energy_against(m, &m.phi, cand.powf(0.25)) <= c1 + 1.0,
                &format!("initial energy target (member {j})"),
                c1 + 1.0,
            )?;
            let eps2 = self.halve_until(
                |cand| {
                    let shift = cand.powf(0.25);
                    let val = quad(
                        m.phi
                            .iter()
                            .zip(&m.phi_x)
                            .zip(&m.w0j_work)
                            .map(|((&p, &px), &w)| px * px / p * (w + shift)),
                        h,
                    );
                    val <= c2 + 1.0 + omega_len.sqrt()
                },
                &format!("initial weight target (member {j})"),
                c2 + 1.0 + omega_len.sqrt(),
            )?;

            let e = [
                prev / 2.0,
                3.0f64.powi(-4 * j as i32),
                t_grad_sq,
                t_grad_quartic,
                t_log_slope,
                eps1,
                eps2,
                1.0 / j as f64,
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
            eps.push(e);
            prev = e;
        }
        Ok(eps)
    }

    fn halve_until(
        &self,
        mut ok: impl FnMut(f64) -> bool,
        what: &str,
        target: f64,
    ) -> Result<f64, RegularizeError> {
        let mut cand = 1.0;
        for _ in 0..BISECT_ITERS {
            if ok(cand) {
                return Ok(cand);
            }
            cand *= 0.5;
        }
        Err(RegularizeError::HalvingFailed {
            what: what.into(),
            target,
            achieved: cand,
        })
    }

    fn ledger_rows(&self, epsilons: &[f64]) -> Vec<LedgerRow> {
        let h = self.work.h();
        self.members
            .iter()
            .zip(epsilons)
            .enumerate()
            .map(|(idx, (m, &eps))| {
                let j = idx + 1;
                let grad_sq = quad(
                    m.phi
                        .iter()
                        .zip(&m.phi_x)
                        .map(|(&p, &px)| px * px / p.powi(3)),
                    h,
                );
                let grad_quartic = quad(
                    m.phi
                        .iter()
                        .zip(&m.phi_x)
                        .map(|(&p, &px)| px.powi(4) / (p * p)),
                    h,
                );
                let min_phi = m.phi.iter().copied().fold(f64::INFINITY, f64::min);
                let log_slope = m
                    .phi
                    .iter()
                    .zip(&m.phi_x)
                    .map(|(&p, &px)| (px / p).abs())
                    .fold(0.0f64, f64::max);
                let shift = eps.powf(0.25);
                let w_energy = self.w_energy_against(m, &m.phi, shift);
                let w_weight = quad(
                    m.phi
                        .iter()
                        .zip(&m.phi_x)
                        .zip(&m.w0j_work)
                        .map(|((&p, &px), &w)| px * px / p * (w + shift)),
                    h,
                );
                let sup_dist = m
                    .phi
                    .iter()
                    .zip(&self.d_work)
                    .map(|(&p, &d)| (p - d).abs())
                    .fold(0.0f64, f64::max);
                LedgerRow {
                    j,
                    eps,
                    grad_sq_bound: eps * eps * grad_sq,
                    grad_quartic_bound: eps.sqrt() * grad_quartic,
                    floor_bound: shift / min_phi,
                    log_slope_bound: shift * log_slope,
                    w_energy,
                    w_weight,
                    sup_dist,
                }
            })
            .collect()
    }

    /// Selects the member values, assembles the family and verifies its
    /// ledger.
    pub fn finish(self) -> Result<RegularizationFamily, RegularizeError> {
        let epsilons = self.select_epsilons()?;
        let n = self.grid.n_cells();
        let rows = self.ledger_rows(&epsilons);
        let mut family = RegularizationFamily {
            d_eps_fields: Vec::new(),
            d_eps_x_fields: Vec::new(),
            w0j_fields: Vec::new(),
            w0eps_fields: Vec::new(),
            ledger: PropertyLedger { rows },
            grid: self.grid,
            work: self.work,
            epsilons,
            d_work: self.d_work,
            d_x_work: self.d_x_work,
            phi_work: Vec::new(),
            phi_x_work: Vec::new(),
            w0j_work: Vec::new(),
            intervals: self.intervals,
            ramp_widths: Vec::new(),
        };
        for (idx, m) in self.members.into_iter().enumerate() {
            let eps = family.epsilons[idx];
            family
                .d_eps_fields
                .push(ScalarField::from_values(&family.grid, restrict(&m.phi, n))?);
            family.d_eps_x_fields.push(ScalarField::from_values(
                &family.grid,
                restrict(&m.phi_x, n),
            )?);
            let shift = eps.powf(0.25);
            let w0eps = ScalarField::from_values(
                &family.grid,
                m.w0j_sim.values().iter().map(|&w| w + shift).collect(),
            )?;
            family.w0j_fields.push(m.w0j_sim);
            family.w0eps_fields.push(w0eps);
            family.phi_work.push(m.phi);
            family.phi_x_work.push(m.phi_x);
            family.w0j_work.push(m.w0j_work);
            family.ramp_widths.push(m.widths);
        }
        verify_family(&family)?;
        Ok(family)
    }
}

impl RegularizationFamily {
    /// Builds and verifies the family with members `j = 1..=j_max`.
    pub fn build(
        spec: &CoefficientSpec,
        w0: &ScalarField,
        grid: &SpatialGrid,
        j_max: usize,
    ) -> Result<Self, RegularizeError> {
        let mut builder = FamilyBuilder::new(spec, w0, grid)?;
        for _ in 0..j_max {
            builder.add_member()?;
        }
        builder.finish()
    }
}

/// Recursive member-value selection on a builder holding candidates for
/// `j = 1..=j_max`.
pub fn select_epsilons(builder: &FamilyBuilder) -> Result<Vec<f64>, RegularizeError> {
    builder.select_epsilons()
}

/// Re-evaluates every ledger entry from the stored working-grid data and
/// asserts the per-member bounds, pointwise monotonicity and the sandwich
/// enclosure.  Fails on the first violated bound.
pub fn verify_family(family: &RegularizationFamily) -> Result<PropertyLedger, RegularizeError> {
    let d_sup = family.d_work.iter().copied().fold(0.0f64, f64::max);
    for (idx, row) in family.ledger.rows.iter().enumerate() {
        let j = idx + 1;
        let eps = family.epsilons[idx];
        if !(eps > 0.0 && eps < 1.0) {
            return Err(RegularizeError::BoundViolated {
                j,
                name: "eps in (0,1)",
                value: eps,
            });
        }
        if idx > 0 && !(eps < family.epsilons[idx - 1]) {
            return Err(RegularizeError::BoundViolated {
                j,
                name: "eps strictly decreasing",
                value: eps,
            });
        }
        let checks: [(&'static str, f64); 4] = [
            ("grad_sq_bound", row.grad_sq_bound),
            ("grad_quartic_bound", row.grad_quartic_bound),
            ("floor_bound", row.floor_bound),
            ("log_slope_bound", row.log_slope_bound),
        ];
        for (name, value) in checks {
            if !(value <= 1.0 + 1e-9) {
                return Err(RegularizeError::BoundViolated { j, name, value });
            }
        }
        if !(row.w_energy.is_finite() && row.w_weight.is_finite()) {
            return Err(RegularizeError::BoundViolated {
                j,
                name: "finite initial-data integrals",
                value: f64::INFINITY,
            });
        }

        let lo = 3.0f64.powi(-(j as i32));
        let phi = &family.phi_work[idx];
        for (&p, &d) in phi.iter().zip(&family.d_work) {
            let gap = p - d;
            if !(gap >= lo && gap <= 3.0 * lo) {
                return Err(RegularizeError::BoundViolated {
                    j,
                    name: "sandwich",
                    value: gap / lo,
                });
            }
            if !(p <= d_sup + 1.0) {
                return Err(RegularizeError::BoundViolated {
                    j,
                    name: "upper bound sup d + 1",
                    value: p,
                });
            }
        }
        if idx > 0 {
            let prev = &family.phi_work[idx - 1];
            let worst = phi
                .iter()
                .zip(prev)
                .map(|(&cur, &pr)| cur - pr)
                .fold(f64::NEG_INFINITY, f64::max);
            if worst > 0.0 {
                return Err(RegularizeError::BoundViolated {
                    j,
                    name: "monotone in j",
                    value: worst,
                });
            }
        }
        if family.w0j_work[idx].iter().any(|&w| w < 0.0) {
            return Err(RegularizeError::BoundViolated {
                j,
                name: "w0j nonnegative",
                value: f64::NAN,
            });
        }
    }
    Ok(family.ledger.clone())
}
