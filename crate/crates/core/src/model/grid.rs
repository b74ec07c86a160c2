use super::ModelError;

/// Uniform 1-D cell-centered mesh on a bounded interval.
///
/// Cell `i` covers `[left + i h, left + (i+1) h]` with center
/// `x_i = left + (i + 1/2) h`.  Cell-centered staggering keeps zeros of the
/// motility coefficient that sit on cell faces (domain endpoints, interior
/// faces) away from every evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    left: f64,
    right: f64,
    n_cells: usize,
    h: f64,
    centers: Vec<f64>,
}

impl SpatialGrid {
    /// Minimum number of cells accepted by the constructor.
    pub const MIN_CELLS: usize = 8;

    pub fn new(left: f64, right: f64, n_cells: usize) -> Result<Self, ModelError> {
        if !(left.is_finite() && right.is_finite()) || right <= left {
            return Err(ModelError::InvalidGrid(format!(
                "domain ({left}, {right}) is not a bounded interval"
            )));
        }
        if n_cells < Self::MIN_CELLS {
            return Err(ModelError::InvalidGrid(format!(
                "n_cells = {n_cells} < {}",
                Self::MIN_CELLS
            )));
        }
        let h = (right - left) / n_cells as f64;
        let centers = (0..n_cells).map(|i| left + (i as f64 + 0.5) * h).collect();
        Ok(Self {
            left,
            right,
            n_cells,
            h,
            centers,
        })
    }

    /// Constructor that additionally rejects grids on which a prescribed zero
    /// of the coefficient coincides with a cell center.
    pub fn new_staggered(
        left: f64,
        right: f64,
        n_cells: usize,
        zeros: &[f64],
    ) -> Result<Self, ModelError> {
        let grid = Self::new(left, right, n_cells)?;
        grid.check_staggered(zeros)?;
        Ok(grid)
    }

    /// Errors if any zero lies (to within one part in 1e9 of a cell width) on
    /// a cell center.
    pub fn check_staggered(&self, zeros: &[f64]) -> Result<(), ModelError> {
        let tol = self.h * 1e-9;
        for &z in zeros {
            for &x in &self.centers {
                if (x - z).abs() <= tol {
                    return Err(ModelError::CenterOnZero { center: x, zero: z });
                }
            }
        }
        Ok(())
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn center(&self, i: usize) -> f64 {
        self.centers[i]
    }

    /// Domain length `right - left`.
    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    /// Same interval, `factor` times as many cells.
    pub fn refine(&self, factor: usize) -> Self {
        Self::new(self.left, self.right, self.n_cells * factor)
            .expect("refinement of a valid grid is valid")
    }

    /// Midpoint quadrature of `f` over the domain.
    pub fn quad_midpoint(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.centers.iter().map(|&x| f(x)).sum::<f64>() * self.h
    }
}

/// One real value per cell center of a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: &SpatialGrid, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != grid.n_cells() {
            return Err(ModelError::FieldLengthMismatch {
                got: values.len(),
                expected: grid.n_cells(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteField { index });
        }
        Ok(Self { values })
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: &SpatialGrid, mut f: impl FnMut(f64) -> f64) -> Result<Self, ModelError> {
        let values = grid.centers().iter().map(|&x| f(x)).collect();
        Self::from_values(grid, values)
    }

    pub fn constant(grid: &SpatialGrid, value: f64) -> Result<Self, ModelError> {
        Self::from_values(grid, vec![value; grid.n_cells()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∑ v_i h`.
    pub fn integral(&self, grid: &SpatialGrid) -> f64 {
        self.values.iter().sum::<f64>() * grid.h()
    }

    /// Piecewise-linear interpolation through the cell-center samples with
    /// constant continuation outside the first/last center.
    pub fn interp(&self, grid: &SpatialGrid, x: f64) -> f64 {
        let centers = grid.centers();
        let n = centers.len();
        if x <= centers[0] {
            return self.values[0];
        }
        if x >= centers[n - 1] {
            return self.values[n - 1];
        }
        let s = (x - centers[0]) / grid.h();
        let i = (s.floor() as usize).min(n - 2);
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}
