use super::{ModelError, SpatialGrid};

/// Symbolic description of the motility coefficient `d(x)`.
///
/// `d` is nonnegative and continuous, continuously differentiable wherever it
/// is positive, and may vanish at isolated points.  Power-law kinds carry
/// analytic antiderivatives of `1/d` and `(1/d) ln(1/d)`, which override
/// quadrature wherever the integrand is unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec {
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Constant {
        value: f64,
    },
    /// `scale * |x - center|^theta`.  `pathological` marks exponents >= 1,
    /// admitted only so that divergence detection can be exercised.
    PowerLaw {
        center: f64,
        theta: f64,
        scale: f64,
        pathological: bool,
    },
    /// `scale * prod_k |x - center_k|^theta_k`, every `theta_k` in (0, 1).
    Product {
        factors: Vec<(f64, f64)>,
        scale: f64,
    },
    /// Piecewise-linear interpolation of nonnegative samples.
    Tabulated {
        xs: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Offsets from a power-law zero below this fraction of the integration
/// window are rounding noise in the face position; the square-root-type
/// antiderivatives amplify such noise, so they are snapped to the zero.
fn snap_offset(y: f64, window: f64) -> f64 {
    if y.abs() <= 1e-12 * window.abs().max(1e-300) {
        0.0
    } else {
        y
    }
}

impl CoefficientSpec {
    pub fn constant(value: f64) -> Result<Self, ModelError> {
        if !(value.is_finite() && value > 0.0) {
            return Err(ModelError::InvalidCoefficient(format!(
                "constant coefficient must be positive, got {value}"
            )));
        }
        Ok(Self {
            kind: Kind::Constant { value },
        })
    }

    /// `scale * |x - center|^theta` with `theta` restricted to (0, 1), so the
    /// reciprocal-integrability hypothesis on `1/d` holds by construction.
    pub fn power_law(center: f64, theta: f64, scale: f64) -> Result<Self, ModelError> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(ModelError::InvalidCoefficient(format!(
                "power-law exponent must lie in (0, 1), got {theta}"
            )));
        }
        Self::power_law_unchecked(center, theta, scale, false)
    }

    /// Power law with `theta >= 1`.  `1/d` is then non-integrable across the
    /// zero; this constructor exists for divergence-detection tests only.
    pub fn power_law_pathological(center: f64, theta: f64, scale: f64) -> Result<Self, ModelError> {
        if theta < 1.0 {
            return Err(ModelError::InvalidCoefficient(format!(
                "pathological constructor requires theta >= 1, got {theta}"
            )));
        }
        Self::power_law_unchecked(center, theta, scale, true)
    }

    fn power_law_unchecked(
        center: f64,
        theta: f64,
        scale: f64,
        pathological: bool,
    ) -> Result<Self, ModelError> {
        if !(scale.is_finite() && scale > 0.0) || !center.is_finite() || !theta.is_finite() {
            return Err(ModelError::InvalidCoefficient(
                "power law needs finite center/exponent and positive scale".into(),
            ));
        }
        Ok(Self {
            kind: Kind::PowerLaw {
                center,
                theta,
                scale,
                pathological,
            },
        })
    }

    /// Product of power laws, all exponents in (0, 1).
    pub fn product_of_power_laws(factors: Vec<(f64, f64)>, scale: f64) -> Result<Self, ModelError> {
        if factors.is_empty() {
            return Err(ModelError::InvalidCoefficient(
                "product coefficient needs at least one factor".into(),
            ));
        }
        for &(center, theta) in &factors {
            if !(theta > 0.0 && theta < 1.0) || !center.is_finite() {
                return Err(ModelError::InvalidCoefficient(format!(
                    "product factor (center {center}, exponent {theta}) invalid"
                )));
            }
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(ModelError::InvalidCoefficient(
                "product scale must be positive".into(),
            ));
        }
        Ok(Self {
            kind: Kind::Product { factors, scale },
        })
    }

    /// Piecewise-linear table of nonnegative samples at strictly increasing
    /// abscissae.  Derivatives are one-sided difference quotients.
    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        if samples.len() < 2 {
            return Err(ModelError::InvalidCoefficient(
                "tabulated coefficient needs at least two samples".into(),
            ));
        }
        if !samples.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(ModelError::InvalidCoefficient(
                "tabulated abscissae must be strictly increasing".into(),
            ));
        }
        if samples
            .iter()
            .any(|&(x, v)| !x.is_finite() || !v.is_finite() || v < 0.0)
        {
            return Err(ModelError::InvalidCoefficient(
                "tabulated samples must be finite and nonnegative".into(),
            ));
        }
        let (xs, values) = samples.into_iter().unzip();
        Ok(Self {
            kind: Kind::Tabulated { xs, values },
        })
    }

    /// Point evaluation `d(x) >= 0`.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Constant { value } => *value,
            Kind::PowerLaw {
                center,
                theta,
                scale,
                ..
            } => scale * (x - center).abs().powf(*theta),
            Kind::Product { factors, scale } => {
                scale
                    * factors
                        .iter()
                        .map(|&(c, t)| (x - c).abs().powf(t))
                        .product::<f64>()
            }
            Kind::Tabulated { xs, values } => {
                let n = xs.len();
                if x <= xs[0] {
                    return values[0];
                }
                if x >= xs[n - 1] {
                    return values[n - 1];
                }
                let k = xs.partition_point(|&t| t <= x) - 1;
                let frac = (x - xs[k]) / (xs[k + 1] - xs[k]);
                values[k] * (1.0 - frac) + values[k + 1] * frac
            }
        }
    }

    /// `d_x(x)` where `d(x) > 0`; `None` at zeros of `d`, where the
    /// derivative is undefined.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        match &self.kind {
            Kind::Constant { .. } => Some(0.0),
            Kind::PowerLaw {
                center,
                theta,
                scale,
                ..
            } => {
                let y = x - center;
                if y == 0.0 {
                    None
                } else {
                    Some(scale * theta * y.abs().powf(theta - 1.0) * y.signum())
                }
            }
            Kind::Product { factors, .. } => {
                if factors.iter().any(|&(c, _)| x == c) {
                    return None;
                }
                let d = self.eval(x);
                let log_slope: f64 = factors
                    .iter()
                    .map(|&(c, t)| {
                        let y = x - c;
                        t * y.signum() / y.abs()
                    })
                    .sum();
                Some(d * log_slope)
            }
            Kind::Tabulated { xs, values } => {
                if self.eval(x) == 0.0 {
                    return None;
                }
                let n = xs.len();
                let k = if x <= xs[0] {
                    0
                } else if x >= xs[n - 1] {
                    n - 2
                } else {
                    (xs.partition_point(|&t| t <= x) - 1).min(n - 2)
                };
                Some((values[k + 1] - values[k]) / (xs[k + 1] - xs[k]))
            }
        }
    }

    /// Zeros of `d` inside `[lo, hi]`, sorted.
    pub fn zeros_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut zeros: Vec<f64> = match &self.kind {
            Kind::Constant { .. } => Vec::new(),
            Kind::PowerLaw { center, .. } => vec![*center],
            Kind::Product { factors, .. } => factors.iter().map(|&(c, _)| c).collect(),
            Kind::Tabulated { xs, values } => xs
                .iter()
                .zip(values)
                .filter(|&(_, &v)| v == 0.0)
                .map(|(&x, _)| x)
                .collect(),
        };
        zeros.retain(|&z| z >= lo && z <= hi);
        zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());
        zeros.dedup();
        zeros
    }

    /// `sup_{[lo, hi]} d`.  Exact for constant, power-law (quasiconvex, so
    /// the maximum sits at an endpoint) and tabulated kinds; sampled on 256
    /// points for products.
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            Kind::Constant { value } => *value,
            Kind::PowerLaw { .. } => self.eval(lo).max(self.eval(hi)),
            Kind::Product { .. } => {
                let mut m = self.eval(lo).max(self.eval(hi));
                for k in 1..256 {
                    let x = lo + (hi - lo) * k as f64 / 256.0;
                    m = m.max(self.eval(x));
                }
                m
            }
            Kind::Tabulated { xs, .. } => {
                let mut m = self.eval(lo).max(self.eval(hi));
                for &x in xs.iter().filter(|&&x| x > lo && x < hi) {
                    m = m.max(self.eval(x));
                }
                m
            }
        }
    }

    /// Whether a closed-form antiderivative of `1/d` is available.
    pub fn has_analytic_inv_integral(&self) -> bool {
        matches!(
            self.kind,
            Kind::Constant { .. }
                | Kind::PowerLaw {
                    pathological: false,
                    ..
                }
        )
    }

    /// Whether a closed-form antiderivative of `(1/d) ln(1/d)` is available.
    pub fn has_analytic_inv_log_integral(&self) -> bool {
        self.has_analytic_inv_integral()
    }

    /// Analytic `∫_lo^hi 1/d`, when available and finite.
    pub fn analytic_inv_integral(&self, lo: f64, hi: f64) -> Option<f64> {
        match &self.kind {
            Kind::Constant { value } => Some((hi - lo) / value),
            Kind::PowerLaw {
                center,
                theta,
                scale,
                pathological,
            } => {
                if *pathological {
                    return None;
                }
                // antiderivative of 1/(s |y|^t): sign(y) |y|^{1-t} / (s (1-t))
                let window = hi - lo;
                let f = |x: f64| {
                    let y = snap_offset(x - center, window);
                    y.signum() * y.abs().powf(1.0 - theta) / (scale * (1.0 - theta))
                };
                Some(f(hi) - f(lo))
            }
            _ => None,
        }
    }

    /// Analytic `∫_lo^hi (1/d) ln(1/d)`, when available.
    pub fn analytic_inv_log_integral(&self, lo: f64, hi: f64) -> Option<f64> {
        match &self.kind {
            Kind::Constant { value } => Some(-(hi - lo) * value.ln() / value),
            Kind::PowerLaw {
                center,
                theta,
                scale,
                pathological,
            } => {
                if *pathological {
                    return None;
                }
                // (1/d) ln(1/d) = |y|^{-t} (-ln s - t ln|y|) / s; integrating
                // gives sign(y) |y|^{1-t}/(s(1-t)) * (-ln s - t ln|y| + t/(1-t)).
                let window = hi - lo;
                let f = |x: f64| {
                    let y: f64 = snap_offset(x - center, window);
                    if y == 0.0 {
                        return 0.0;
                    }
                    let a = y.abs();
                    y.signum() * a.powf(1.0 - theta) / (scale * (1.0 - theta))
                        * (-scale.ln() - theta * a.ln() + theta / (1.0 - theta))
                };
                Some(f(hi) - f(lo))
            }
            _ => None,
        }
    }

    /// `∫_cell 1/d` for one cell, analytic where possible, else midpoint.
    /// For pathological power laws a cell containing the zero has infinite
    /// mass.
    pub fn cell_inv_mass(&self, xl: f64, xr: f64) -> f64 {
        match &self.kind {
            Kind::Constant { value } => (xr - xl) / value,
            Kind::PowerLaw {
                center,
                theta,
                scale,
                pathological,
            } => {
                if !pathological {
                    return self.analytic_inv_integral(xl, xr).unwrap();
                }
                let window = xr - xl;
                let yl = snap_offset(xl - center, window);
                let yr = snap_offset(xr - center, window);
                if yl <= 0.0 && 0.0 <= yr {
                    return f64::INFINITY;
                }
                // away from the zero the same closed forms apply for any theta
                if *theta == 1.0 {
                    let f = |y: f64| y.signum() * y.abs().ln() / scale;
                    f(yr) - f(yl)
                } else {
                    let f =
                        |y: f64| y.signum() * y.abs().powf(1.0 - theta) / (scale * (1.0 - theta));
                    f(yr) - f(yl)
                }
            }
            _ => {
                let mid = 0.5 * (xl + xr);
                (xr - xl) / self.eval(mid)
            }
        }
    }

    /// Per-cell masses of `1/d` over a whole grid.
    pub fn cell_inv_masses(&self, grid: &SpatialGrid) -> Vec<f64> {
        (0..grid.n_cells())
            .map(|i| {
                let xl = grid.left() + i as f64 * grid.h();
                self.cell_inv_mass(xl, xl + grid.h())
            })
            .collect()
    }
}

/// Evaluate `d` and its derivative at one point.  The derivative slot is
/// `None` exactly at zeros of `d`.
pub fn eval_coefficient(spec: &CoefficientSpec, x: f64) -> (f64, Option<f64>) {
    (spec.eval(x), spec.derivative(x))
}
