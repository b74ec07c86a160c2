//! Independent reference computations used to validate the solver before
//! trusting long runs: the closed-form Neumann heat mode, high-accuracy
//! absorption ODE integration, weak-convergence surrogate moments, and
//! convergence-order regression.

use crate::model::{AbsorptionSpec, ScalarField, SpatialGrid};
use crate::solver::SimState;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("grid widths must be strictly monotone")]
    NonMonotoneWidths,
    #[error("errors must be positive and finite for log-log regression")]
    NonPositiveError,
}

/// Closed-form reference solutions for special cases of the system.
#[derive(Debug, Clone)]
pub enum ReferenceSolution {
    /// `1 + cos(kπx/L) e^{-(kπ/L)² t}` (unit-mean Neumann heat mode).
    HeatNeumannMode { mode: u32, length: f64 },
    /// Spatially uniform absorption `w' = -u g(w)`.
    AbsorptionOde {
        u_const: f64,
        w0: f64,
        g: AbsorptionSpec,
    },
    /// Singular steady profile `u = μ_∞ / d_ε`.
    SteadyProfile { mu_inf: f64, d_eps: Vec<f64> },
}

impl ReferenceSolution {
    /// Evaluate at `(x, t)`; for [`ReferenceSolution::SteadyProfile`] the
    /// spatial argument is the cell index cast to `f64`.
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            Self::HeatNeumannMode { mode, length } => heat_neumann(x, t, *mode, *length),
            Self::AbsorptionOde { u_const, w0, g } => absorption_ode(*w0, *u_const, g, t),
            Self::SteadyProfile { mu_inf, d_eps } => mu_inf / d_eps[x as usize],
        }
    }
}

/// Exact Neumann heat mode `1 + cos(kπx/L) e^{-(kπ/L)² t}` on `(0, L)`.
pub fn heat_neumann(x: f64, t: f64, mode: u32, length: f64) -> f64 {
    let k = mode as f64 * std::f64::consts::PI / length;
    1.0 + (k * x).cos() * (-k * k * t).exp()
}

/// Spatially uniform absorption `w' = -u g(w)`, `w(0) = w0`.
///
/// Linear absorption uses the closed form `w0 e^{-u t}`; other kinds are
/// integrated by an adaptive embedded Runge-Kutta 4(5) pair at tolerances far
/// below any solver comparison.
pub fn absorption_ode(w0: f64, u_const: f64, g: &AbsorptionSpec, t: f64) -> f64 {
    match g {
        AbsorptionSpec::Linear => w0 * (-u_const * t).exp(),
        _ => rk45(|w| -u_const * g.g(w), w0, t, 1e-12, 1e-12),
    }
}

/// Scalar adaptive Dormand-Prince 5(4) integrator for autonomous `y' = f(y)`.
fn rk45(f: impl Fn(f64) -> f64, y0: f64, t_end: f64, atol: f64, rtol: f64) -> f64 {
    if t_end == 0.0 {
        return y0;
    }
    // Dormand-Prince coefficients
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let mut t = 0.0;
    let mut y = y0;
    let mut h = (t_end / 100.0).max(1e-10);
    let mut k = [0.0f64; 7];
    while t < t_end {
        h = h.min(t_end - t);
        k[0] = f(y);
        for s in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                ys += h * A[s][j] * kj;
            }
            k[s + 1] = f(ys);
        }
        let y5 = y + h * B5.iter().zip(&k).map(|(b, kk)| b * kk).sum::<f64>();
        let y4 = y + h * B4.iter().zip(&k).map(|(b, kk)| b * kk).sum::<f64>();
        let scale = atol + rtol * y.abs().max(y5.abs());
        let err = ((y5 - y4) / scale).abs().max(1e-30);
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h *= factor;
        if h < 1e-15 * t_end.max(1.0) {
            break;
        }
    }
    y
}

/// Moments `∑ u φ h` of the cell density against a panel of bounded test
/// functions; the finite surrogate for weak convergence.
pub fn moment_against_test_functions(
    state: &SimState,
    tests: &[ScalarField],
    grid: &SpatialGrid,
) -> Vec<f64> {
    tests
        .iter()
        .map(|phi| {
            state
                .u
                .values()
                .iter()
                .zip(phi.values())
                .map(|(&u, &p)| u * p)
                .sum::<f64>()
                * grid.h()
        })
        .collect()
}

/// The standard eight-function panel: a constant, four dyadic-interval
/// indicators, the member coefficient itself, a tent, and a linear ramp.
pub fn standard_test_panel(grid: &SpatialGrid, d_eps: &ScalarField) -> Vec<ScalarField> {
    let (a, len) = (grid.left(), grid.length());
    let rel = move |x: f64| (x - a) / len;
    let indicator = move |lo: f64, hi: f64| {
        move |x: f64| {
            let r = rel(x);
            if r >= lo && r < hi {
                1.0
            } else {
                0.0
            }
        }
    };
    vec![
        ScalarField::constant(grid, 1.0).unwrap(),
        ScalarField::from_fn(grid, indicator(0.0, 0.5)).unwrap(),
        ScalarField::from_fn(grid, indicator(0.5, 1.0)).unwrap(),
        ScalarField::from_fn(grid, indicator(0.0, 0.25)).unwrap(),
        ScalarField::from_fn(grid, indicator(0.75, 1.0)).unwrap(),
        d_eps.clone(),
        ScalarField::from_fn(grid, move |x| 1.0 - (2.0 * rel(x) - 1.0).abs()).unwrap(),
        ScalarField::from_fn(grid, rel).unwrap(),
    ]
}

/// Least-squares slope of `log error` against `log h`.
pub fn convergence_order(errors: &[f64], hs: &[f64]) -> Result<f64, OracleError> {
    if errors.len() < 3 || errors.len() != hs.len() {
        return Err(OracleError::TooFewSamples {
            needed: 3,
            got: errors.len().min(hs.len()),
        });
    }
    let increasing = hs.windows(2).all(|w| w[0] < w[1]);
    let decreasing = hs.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) {
        return Err(OracleError::NonMonotoneWidths);
    }
    if errors.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(OracleError::NonPositiveError);
    }
    let xs: Vec<f64> = hs.iter().map(|&h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|&e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_mode_values() {
        // initial condition and mean preservation
        assert!(
            (heat_neumann(0.3, 0.0, 1, 1.0) - (1.0 + (std::f64::consts::PI * 0.3).cos())).abs()
                < 1e-15
        );
        assert!((heat_neumann(0.3, 1e3, 1, 1.0) - 1.0).abs() < 1e-15);
        // spot value at x = 0, t = 0.1
        let v = heat_neumann(0.0, 0.1, 1, 1.0);
        assert!((v - (1.0 + (-std::f64::consts::PI.powi(2) * 0.1).exp())).abs() < 1e-15);
        assert!((v - 1.37271).abs() < 1e-4);
    }

    #[test]
    fn heat_mode_satisfies_the_pde() {
        // fourth-order finite differences of the closed form; residual of
        // u_t - u_xx must vanish to high accuracy
        let (k, l) = (1, 1.0);
        let f = |x: f64, t: f64| heat_neumann(x, t, k, l);
        for &(x, t) in &[(0.17, 0.05), (0.52, 0.2), (0.83, 0.011)] {
            let e = 1e-3;
            let ut = (-f(x, t + 2.0 * e) + 8.0 * f(x, t + e) - 8.0 * f(x, t - e)
                + f(x, t - 2.0 * e))
                / (12.0 * e);
            let uxx = (-f(x + 2.0 * e, t) + 16.0 * f(x + e, t) - 30.0 * f(x, t)
                + 16.0 * f(x - e, t)
                - f(x - 2.0 * e, t))
                / (12.0 * e * e);
            assert!(
                (ut - uxx).abs() < 1e-8,
                "residual {} at ({x},{t})",
                ut - uxx
            );
        }
    }

    #[test]
    fn linear_absorption_closed_form() {
        let g = AbsorptionSpec::Linear;
        let v = absorption_ode(1.0, 1.0, &g, std::f64::consts::LN_2);
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(absorption_ode(0.7, 0.0, &g, 5.0), 0.7);
    }

    #[test]
    fn adaptive_integrator_matches_closed_form_on_linear_problems() {
        // run the RK path on g(s) = s by disguising it as a bounded
        // perturbation with c = 0
        let g = AbsorptionSpec::BoundedPerturbation { c: 0.0 };
        for &t in &[0.1, 1.0, 3.0] {
            let v = absorption_ode(1.0, 1.0, &g, t);
            assert!((v - (-t).exp()).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn bounded_perturbation_regression_value() {
        // w' = -(w + 1 - e^{-w}), w(0) = 1, at t = 1; frozen from the
        // adaptive integrator at tolerance 1e-12
        let g = AbsorptionSpec::BoundedPerturbation { c: 1.0 };
        let v = absorption_ode(1.0, 1.0, &g, 1.0);
        assert!((v - 0.164_851_316_732_113).abs() < 1e-10, "got {v:.16}");
    }

    #[test]
    fn moments_constant_test_function_is_mass() {
        let grid = SpatialGrid::new(0.0, 1.0, 32).unwrap();
        let u = ScalarField::from_fn(&grid, |x| 1.0 + x).unwrap();
        let w = ScalarField::constant(&grid, 0.5).unwrap();
        let state = SimState::new(u, w, 1e-8);
        let d_eps = ScalarField::from_fn(&grid, |x| 1.0 + 0.1 * x).unwrap();
        let panel = standard_test_panel(&grid, &d_eps);
        assert_eq!(panel.len(), 8);
        let moments = moment_against_test_functions(&state, &panel, &grid);
        let mass = state.u.integral(&grid);
        assert!((moments[0] - mass).abs() < 1e-14);
        // the member-coefficient moment equals mu * |Omega|
        let mu = state
            .u
            .values()
            .iter()
            .zip(d_eps.values())
            .map(|(&u, &d)| u * d)
            .sum::<f64>()
            * grid.h()
            / grid.length();
        assert!((moments[5] - mu * grid.length()).abs() < 1e-14);
    }

    #[test]
    fn reference_solutions_evaluate_finitely() {
        let heat = ReferenceSolution::HeatNeumannMode {
            mode: 2,
            length: 1.0,
        };
        assert!(heat.eval(0.3, 0.7).is_finite());
        let ode = ReferenceSolution::AbsorptionOde {
            u_const: 1.0,
            w0: 1.0,
            g: AbsorptionSpec::Linear,
        };
        assert!((ode.eval(0.0, 1.0) - (-1.0f64).exp()).abs() < 1e-14);
        let steady = ReferenceSolution::SteadyProfile {
            mu_inf: 0.5,
            d_eps: vec![0.5, 1.0, 2.0],
        };
        assert_eq!(steady.eval(1.0, 0.0), 0.5);
    }

    #[test]
    fn convergence_order_recovers_exact_slopes() {
        let hs = [0.1, 0.05, 0.025];
        let quad: Vec<f64> = hs.iter().map(|&h| 3.0 * h * h).collect();
        assert!((convergence_order(&quad, &hs).unwrap() - 2.0).abs() < 1e-12);
        let lin: Vec<f64> = hs.iter().map(|&h| 0.7 * h).collect();
        assert!((convergence_order(&lin, &hs).unwrap() - 1.0).abs() < 1e-12);
        assert!(convergence_order(&quad[..2], &hs[..2]).is_err());
        assert!(convergence_order(&quad, &[0.1, 0.2, 0.15]).is_err());
        assert!(convergence_order(&[1.0, -1.0, 0.5], &hs).is_err());
    }
}
