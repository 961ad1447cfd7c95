use super::{Dataset, DatasetError};

/// Thickness bounds map affinely onto [-1, 1]; spectra are divided by the
/// largest value seen in the training split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    bounds: (f64, f64),
    output_scale: f64,
}

impl Normalizer {
    pub fn new(bounds: (f64, f64), output_scale: f64) -> Result<Self, DatasetError> {
        let (lo, hi) = bounds;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(DatasetError::Normalization(format!("input bounds [{lo}, {hi}] have no width")));
        }
        if !(output_scale.is_finite() && output_scale > 0.0) {
            return Err(DatasetError::Normalization(format!("output scale {output_scale} is not positive")));
        }
        Ok(Self { bounds, output_scale })
    }

    pub fn fit(train: &Dataset) -> Result<Self, DatasetError> {
        if train.is_empty() {
            return Err(DatasetError::Normalization("empty training split".into()));
        }
        let max = train
            .records
            .iter()
            .flat_map(|r| r.spectrum.iter().copied())
            .fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(DatasetError::Normalization("training spectra are all zero".into()));
        }
        Self::new(train.manifest.bounds, max)
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    fn mid_half(&self) -> (f64, f64) {
        let (lo, hi) = self.bounds;
        (0.5 * (lo + hi), 0.5 * (hi - lo))
    }

    pub fn apply_input(&self, thicknesses: &[f64]) -> Vec<f64> {
        let (mid, half) = self.mid_half();
        thicknesses.iter().map(|t| (t - mid) / half).collect()
    }

    pub fn invert_input(&self, normalized: &[f64]) -> Vec<f64> {
        let (mid, half) = self.mid_half();
        normalized.iter().map(|u| mid + half * u).collect()
    }

    pub fn apply_output(&self, spectrum: &[f64]) -> Vec<f64> {
        spectrum.iter().map(|v| v / self.output_scale).collect()
    }

    pub fn invert_output(&self, normalized: &[f64]) -> Vec<f64> {
        normalized.iter().map(|v| v * self.output_scale).collect()
    }

    /// Normalized inputs and outputs as two row-major matrices.
    pub fn apply_dataset(&self, ds: &Dataset) -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(ds.len() * ds.num_layers());
        let mut y = Vec::with_capacity(ds.len() * ds.n_points());
        for r in &ds.records {
            x.extend(self.apply_input(&r.thicknesses));
            y.extend(self.apply_output(&r.spectrum));
        }
        (x, y)
    }
}
