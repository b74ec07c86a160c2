use super::{ModelError, ScalarField, SpatialGrid};

/// Initial cell density `u_0` and fiber density `w_0`.
///
/// `u_0` must be nonnegative and not identically zero; `w_0` nonnegative with
/// finite discrete H^1 seminorm of `sqrt(w_0)` (the difference-quotient
/// surrogate for the square-root regularity required of the attractant).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    u0: ScalarField,
    w0: ScalarField,
}

impl InitialData {
    pub fn new(grid: &SpatialGrid, u0: ScalarField, w0: ScalarField) -> Result<Self, ModelError> {
        if u0.len() != grid.n_cells() || w0.len() != grid.n_cells() {
            return Err(ModelError::InvalidInitialData(
                "field lengths do not match the grid".into(),
            ));
        }
        if u0.values().iter().any(|&v| v < 0.0) {
            return Err(ModelError::InvalidInitialData(
                "u0 has negative cells".into(),
            ));
        }
        if u0.values().iter().all(|&v| v == 0.0) {
            return Err(ModelError::InvalidInitialData(
                "u0 is identically zero".into(),
            ));
        }
        if w0.values().iter().any(|&v| v < 0.0) {
            return Err(ModelError::InvalidInitialData(
                "w0 has negative cells".into(),
            ));
        }
        let seminorm = Self::sqrt_w0_h1_seminorm_of(grid, &w0);
        if !seminorm.is_finite() {
            return Err(ModelError::InvalidInitialData(
                "sqrt(w0) has non-finite difference-quotient energy".into(),
            ));
        }
        Ok(Self { u0, w0 })
    }

    pub fn u0(&self) -> &ScalarField {
        &self.u0
    }

    pub fn w0(&self) -> &ScalarField {
        &self.w0
    }

    /// `sum_i ((sqrt(w0)_{i+1} - sqrt(w0)_i)/h)^2 h`.
    pub fn sqrt_w0_h1_seminorm(&self, grid: &SpatialGrid) -> f64 {
        Self::sqrt_w0_h1_seminorm_of(grid, &self.w0)
    }

    fn sqrt_w0_h1_seminorm_of(grid: &SpatialGrid, w0: &ScalarField) -> f64 {
        let v = w0.values();
        let h = grid.h();
        v.windows(2)
            .map(|w| {
                let dq = (w[1].max(0.0).sqrt() - w[0].max(0.0).sqrt()) / h;
                dq * dq
            })
            .sum::<f64>()
            * h
    }
}
