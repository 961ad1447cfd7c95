use super::material::{SILICA, TITANIA};
use super::ScatterError;

/// Admissible per-layer thickness interval for design work, nm.
pub const DESIGN_BOX: (f64, f64) = (30.0, 70.0);

/// Concentric shells, innermost first. Materials alternate through
/// `material_cycle`, starting from the core.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    thicknesses: Vec<f64>,
    material_cycle: [String; 2],
}

impl LayerStack {
    pub fn new(thicknesses: Vec<f64>, material_cycle: [String; 2]) -> Result<Self, ScatterError> {
        if thicknesses.is_empty() {
            return Err(ScatterError::Argument("layer stack needs at least one layer".into()));
        }
        if let Some(i) = thicknesses.iter().position(|t| !t.is_finite() || *t <= 0.0) {
            return Err(ScatterError::Argument(format!(
                "layer {i} thickness {} is not finite and positive",
                thicknesses[i]
            )));
        }
        Ok(Self {
            thicknesses,
            material_cycle,
        })
    }

    /// Silica core, then titania, silica, ... outward.
    pub fn silica_titania(thicknesses: Vec<f64>) -> Result<Self, ScatterError> {
        Self::new(thicknesses, [SILICA.to_string(), TITANIA.to_string()])
    }

    /// Every layer made of the same material.
    pub fn uniform(thicknesses: Vec<f64>, material: &str) -> Result<Self, ScatterError> {
        Self::new(thicknesses, [material.to_string(), material.to_string()])
    }

    pub fn thicknesses(&self) -> &[f64] {
        &self.thicknesses
    }

    pub fn material_cycle(&self) -> &[String; 2] {
        &self.material_cycle
    }

    pub fn num_layers(&self) -> usize {
        self.thicknesses.len()
    }

    pub fn material(&self, layer: usize) -> &str {
        &self.material_cycle[layer % 2]
    }

    /// Outer radius of every layer, innermost first.
    pub fn radii(&self) -> Vec<f64> {
        self.thicknesses
            .iter()
            .scan(0.0, |acc, t| {
                *acc += t;
                Some(*acc)
            })
            .collect()
    }

    pub fn outer_radius(&self) -> f64 {
        self.thicknesses.iter().sum()
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.thicknesses.iter().all(|t| (lo..=hi).contains(t))
    }
}
