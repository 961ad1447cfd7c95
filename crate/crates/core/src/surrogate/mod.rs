//! Feed-forward spectrum surrogate: the two-channel network, the single-channel
//! baseline, backpropagation, Adam and the training loop.

mod adam;
mod io;
mod loss;
mod network;
mod train;

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};

use crate::container::ContainerError;
use crate::dataset::{Dataset, DatasetError, Normalizer};
use crate::scatter::SpectralGrid;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use io::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC};
pub use loss::{loss_tcnn, output_weights, validation_error, weighted_batch_loss};
pub use network::{selu, selu_derivative, ArchKind, Architecture, ForwardCache, Network, SELU_ALPHA, SELU_LAMBDA};
pub use train::{backprop, evaluate_mean_error, train, train_with, EpochStats, Gradient};

#[derive(Debug, thiserror::Error)]
pub enum SurrogateError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("non-finite activation in layer {layer}")]
    Numerical { layer: usize },
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Format(#[from] ContainerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Weight of the first spectrum half in the two-channel loss.
    pub m: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            m: 0.6,
            epochs: 1000,
            batch_size: 256,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        let a = &self.adam;
        let ok = (0.0..=1.0).contains(&self.m)
            && self.epochs >= 1
            && self.batch_size >= 1
            && a.learning_rate > 0.0
            && a.learning_rate.is_finite()
            && (0.0..1.0).contains(&a.beta1)
            && (0.0..1.0).contains(&a.beta2)
            && a.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SurrogateError::Argument(format!("invalid training configuration {self:?}")))
        }
    }
}

/// Per-epoch record. `initial_val_error` is measured before the first update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub initial_val_error: Option<f64>,
    pub train_loss: Vec<f64>,
    pub val_error: Vec<f64>,
}

/// A network together with what is needed to use it on physical quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub network: Network,
    pub normalizer: Normalizer,
    pub grid: SpectralGrid,
    pub materials: [String; 2],
    pub host_index: f64,
    pub config: TrainConfig,
    pub history: History,
    /// Free-form `key: value` notes carried into the model file.
    pub provenance: BTreeMap<String, String>,
}

impl MlpModel {
    /// Fresh network shaped for `train`, normalizer fitted on `train`, weights seeded by `config.seed`.
    pub fn new(kind: ArchKind, train: &Dataset, config: TrainConfig) -> Result<Self, SurrogateError> {
        let arch = match kind {
            ArchKind::Tcnn => Architecture::tcnn(train.num_layers(), train.n_points()),
            ArchKind::Fcnn => Architecture::fcnn(train.num_layers(), train.n_points()),
        };
        Self::with_architecture(arch, train, config)
    }

    pub fn with_architecture(arch: Architecture, train: &Dataset, config: TrainConfig) -> Result<Self, SurrogateError> {
        config.validate()?;
        if arch.input_dim != train.num_layers() || arch.output_dim != train.n_points() {
            return Err(SurrogateError::Argument("architecture does not match the dataset".into()));
        }
        Ok(Self {
            network: Network::init(arch, config.seed)?,
            normalizer: Normalizer::fit(train)?,
            grid: train.manifest.grid,
            materials: train.manifest.materials.clone(),
            host_index: train.manifest.host_index,
            config,
            history: History::default(),
            provenance: BTreeMap::new(),
        })
    }

    pub fn architecture(&self) -> &Architecture {
        self.network.architecture()
    }

    /// Normalized thicknesses in, normalized spectrum out.
    pub fn predict_normalized(&self, input: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        self.network.forward(input)
    }

    /// Thicknesses in nm in, spectrum in dataset units out.
    pub fn predict(&self, thicknesses: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        let y = self.network.forward(&self.normalizer.apply_input(thicknesses))?;
        Ok(self.normalizer.invert_output(&y))
    }

    pub fn predict_batch_normalized(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, SurrogateError> {
        self.network.forward_batch(x)
    }

    /// Errors unless `ds` uses the grid, stack size and thickness bounds this model was built for.
    pub fn check_compatible(&self, ds: &Dataset) -> Result<(), SurrogateError> {
        let m = &ds.manifest;
        if m.num_layers != self.architecture().input_dim
            || m.grid != self.grid
            || m.bounds != self.normalizer.bounds()
            || m.materials != self.materials
        {
            return Err(SurrogateError::Argument(
                "dataset is not normalized consistently with the model".into(),
            ));
        }
        Ok(())
    }
}
