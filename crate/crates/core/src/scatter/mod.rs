//! Exact light scattering by concentric multilayer spheres.

pub mod bessel;
mod grid;
mod material;
mod mie;
mod stack;

pub use grid::{SpectralGrid, Spectrum};
pub use material::{MaterialLibrary, MaterialTable, SILICA, TITANIA};
pub use mie::{
    cross_section_from_coefficients, max_multipole_order, mie_coefficients, mie_coefficients_to_order,
    scattering_cross_section, spectra_parallel, spectrum, MieCoefficients,
};
pub use stack::{LayerStack, DESIGN_BOX};

/// Refractive index of the surrounding medium (vacuum/air) unless configured otherwise.
pub const DEFAULT_HOST_INDEX: f64 = 1.0;

#[derive(Debug, thiserror::Error)]
pub enum ScatterError {
    #[error("wavelength {wavelength} nm is outside the tabulated domain of material {material}")]
    Domain { material: String, wavelength: f64 },
    #[error("unknown material {0}")]
    UnknownMaterial(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numerical overflow in layer {layer} at multipole order {order}")]
    Numerical { layer: usize, order: usize },
    #[error("material file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything the exact solver needs besides the stack: materials, host medium and grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    pub materials: MaterialLibrary,
    pub host_index: f64,
    pub grid: SpectralGrid,
}

impl Default for Oracle {
    fn default() -> Self {
        Self {
            materials: MaterialLibrary::default(),
            host_index: DEFAULT_HOST_INDEX,
            grid: SpectralGrid::default(),
        }
    }
}

impl Oracle {
    pub fn new(materials: MaterialLibrary, host_index: f64, grid: SpectralGrid) -> Self {
        Self {
            materials,
            host_index,
            grid,
        }
    }

    pub fn spectrum(&self, stack: &LayerStack) -> Result<Spectrum, ScatterError> {
        spectrum(stack, &self.materials, &self.grid, self.host_index)
    }

    pub fn cross_section(&self, stack: &LayerStack, wavelength: f64) -> Result<f64, ScatterError> {
        scattering_cross_section(stack, &self.materials, wavelength, self.host_index)
    }
}
