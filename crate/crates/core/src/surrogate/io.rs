use std::path::Path;

use super::{AdamConfig, ArchKind, Architecture, History, MlpModel, Network, SurrogateError, TrainConfig};
use crate::container::{self, ContainerError, Header};
use crate::dataset::Normalizer;
use crate::scatter::SpectralGrid;

pub const MODEL_MAGIC: &str = "NLM1";

const PROVENANCE_PREFIX: &str = "provenance.";

pub fn encode_model(model: &MlpModel) -> Vec<u8> {
    let a = model.architecture();
    let c = &model.config;
    let mut h = Header::new();
    h.push("kind", a.kind.as_str());
    h.push("input_dim", a.input_dim);
    h.push("hidden_layers", a.hidden_layers);
    h.push("hidden_width", a.hidden_width);
    h.push("output_dim", a.output_dim);
    h.push("activation", "selu");
    h.push("layout", "channel-major; per layer weights[fan_in][fan_out] then bias[fan_out]");
    h.push_f64s("input_bounds", &[model.normalizer.bounds().0, model.normalizer.bounds().1]);
    h.push_f64("output_scale", model.normalizer.output_scale());
    h.push_f64("lambda_min", model.grid.lambda_min());
    h.push_f64("lambda_max", model.grid.lambda_max());
    h.push("n_points", model.grid.len());
    h.push("materials", model.materials.join(","));
    h.push_f64("host_index", model.host_index);
    h.push_f64("m", c.m);
    h.push("epochs", c.epochs);
    h.push("batch_size", c.batch_size);
    h.push_f64("learning_rate", c.adam.learning_rate);
    h.push_f64("beta1", c.adam.beta1);
    h.push_f64("beta2", c.adam.beta2);
    h.push_f64("epsilon", c.adam.epsilon);
    h.push("seed", c.seed);
    match model.history.initial_val_error {
        Some(v) => h.push_f64("history.initial_val_error", v),
        None => h.push("history.initial_val_error", "none"),
    }
    h.push_f64s("history.train_loss", &model.history.train_loss);
    h.push_f64s("history.val_error", &model.history.val_error);
    for (k, v) in &model.provenance {
        h.push(&format!("{PROVENANCE_PREFIX}{k}"), v);
    }
    container::encode(MODEL_MAGIC, &h, model.network.params())
}

pub fn decode_model(bytes: &[u8]) -> Result<MlpModel, SurrogateError> {
    let (h, params) = container::decode(MODEL_MAGIC, bytes)?;
    let kind = ArchKind::parse(h.get("kind")?).ok_or_else(|| ContainerError::Header("unknown kind".into()))?;
    let arch = Architecture {
        kind,
        input_dim: h.parse("input_dim")?,
        hidden_layers: h.parse("hidden_layers")?,
        hidden_width: h.parse("hidden_width")?,
        output_dim: h.parse("output_dim")?,
    };
    let bounds: Vec<f64> = h.parse_list("input_bounds")?;
    if bounds.len() != 2 {
        return Err(ContainerError::Header("input_bounds needs two values".into()).into());
    }
    let materials: Vec<String> = h.parse_list("materials")?;
    let materials: [String; 2] = materials
        .try_into()
        .map_err(|_| ContainerError::Header("materials needs two names".into()))?;
    let grid = SpectralGrid::new(h.parse("lambda_min")?, h.parse("lambda_max")?, h.parse("n_points")?)
        .map_err(|e| ContainerError::Header(e.to_string()))?;
    let initial_val_error = match h.get("history.initial_val_error")? {
        "none" => None,
        _ => Some(h.parse("history.initial_val_error")?),
    };
    Ok(MlpModel {
        network: Network::from_params(arch, params)?,
        normalizer: Normalizer::new((bounds[0], bounds[1]), h.parse("output_scale")?)?,
        grid,
        materials,
        host_index: h.parse("host_index")?,
        config: TrainConfig {
            m: h.parse("m")?,
            epochs: h.parse("epochs")?,
            batch_size: h.parse("batch_size")?,
            adam: AdamConfig {
                learning_rate: h.parse("learning_rate")?,
                beta1: h.parse("beta1")?,
                beta2: h.parse("beta2")?,
                epsilon: h.parse("epsilon")?,
            },
            seed: h.parse("seed")?,
        },
        history: History {
            initial_val_error,
            train_loss: h.parse_list("history.train_loss")?,
            val_error: h.parse_list("history.val_error")?,
        },
        provenance: h
            .entries()
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(PROVENANCE_PREFIX).map(|k| (k.to_string(), v.clone())))
            .collect(),
    })
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<(), SurrogateError> {
    crate::dataset::write_atomic(path, &encode_model(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MlpModel, SurrogateError> {
    decode_model(&std::fs::read(path)?)
}
