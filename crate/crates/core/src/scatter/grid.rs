use super::ScatterError;

/// Uniform wavelength sampling, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    lambda_min: f64,
    lambda_max: f64,
    n_points: usize,
}

impl Default for SpectralGrid {
    /// 400 points on [400, 800] nm.
    fn default() -> Self {
        Self {
            lambda_min: 400.0,
            lambda_max: 800.0,
            n_points: 400,
        }
    }
}

impl SpectralGrid {
    /// A single-point grid is allowed only when `lambda_min == lambda_max`.
    pub fn new(lambda_min: f64, lambda_max: f64, n_points: usize) -> Result<Self, ScatterError> {
        if !(lambda_min.is_finite() && lambda_max.is_finite()) || lambda_min <= 0.0 {
            return Err(ScatterError::Argument("grid bounds must be finite and positive".into()));
        }
        let ok = match n_points {
            0 => false,
            1 => lambda_min == lambda_max,
            _ => lambda_min < lambda_max,
        };
        if !ok {
            return Err(ScatterError::Argument(format!(
                "invalid grid [{lambda_min}, {lambda_max}] with {n_points} points"
            )));
        }
        Ok(Self {
            lambda_min,
            lambda_max,
            n_points,
        })
    }

    pub fn single(wavelength: f64) -> Result<Self, ScatterError> {
        Self::new(wavelength, wavelength, 1)
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn wavelength(&self, i: usize) -> f64 {
        assert!(i < self.n_points, "grid index {i} out of range");
        if i + 1 == self.n_points {
            return self.lambda_max;
        }
        let step = (self.lambda_max - self.lambda_min) / (self.n_points - 1) as f64;
        self.lambda_min + step * i as f64
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.wavelength(i)).collect()
    }
}

/// Scattering spectrum sampled on a [`SpectralGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: SpectralGrid,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: SpectralGrid, values: Vec<f64>) -> Result<Self, ScatterError> {
        if values.len() != grid.len() {
            return Err(ScatterError::Argument(format!(
                "spectrum has {} values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(ScatterError::Argument(format!(
                "spectrum value {} at index {i} is negative or non-finite",
                values[i]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
