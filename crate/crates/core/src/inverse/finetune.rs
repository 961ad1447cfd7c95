use ndarray::Array2;

use super::InverseError;
use crate::surrogate::{backprop, output_weights, ArchKind, MlpModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineTuneConfig {
    pub steps: usize,
    /// Step size in normalized input units.
    pub learning_rate: f64,
    pub max_halvings: usize,
}

impl Default for FineTuneConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            learning_rate: 0.5,
            max_halvings: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineTuneResult {
    /// Thicknesses in nm.
    pub thicknesses: Vec<f64>,
    /// Surrogate error (normalized units) at the start and after every accepted step.
    pub trace: Vec<f64>,
}

/// Squared error of the surrogate at normalized input `u` and its gradient in `u`.
pub fn surrogate_error_and_gradient(
    model: &MlpModel,
    u: &[f64],
    target: &[f64],
) -> Result<(f64, Vec<f64>), InverseError> {
    let n = model.architecture().output_dim;
    if target.len() != n {
        return Err(InverseError::Argument(format!("target has {} points, model predicts {n}", target.len())));
    }
    let x = Array2::from_shape_vec((1, u.len()), u.to_vec()).unwrap();
    let y = Array2::from_shape_vec((1, n), target.to_vec()).unwrap();
    let g = backprop(&model.network, x.view(), y.view(), &output_weights(ArchKind::Fcnn, n, 1.0))?;
    let grad = g.input.into_raw_vec_and_offset().0;
    if !g.loss.is_finite() || grad.iter().any(|v| !v.is_finite()) {
        return Err(InverseError::Numerical("non-finite input gradient".into()));
    }
    Ok((g.loss, grad))
}

/// Gradient descent on the network input with the weights frozen. Inputs are
/// clamped to the design box after every step and a step is only accepted if
/// it does not increase the error.
pub fn fine_tune(
    model: &MlpModel,
    start: &[f64],
    target: &[f64],
    config: &FineTuneConfig,
) -> Result<FineTuneResult, InverseError> {
    if start.len() != model.architecture().input_dim {
        return Err(InverseError::Argument("start has the wrong number of layers".into()));
    }
    if !(config.learning_rate > 0.0) {
        return Err(InverseError::Argument("fine-tune learning rate must be positive".into()));
    }
    let clamp = |u: f64| u.clamp(-1.0, 1.0);
    let mut u: Vec<f64> = model.normalizer.apply_input(start).into_iter().map(clamp).collect();
    let (mut err, mut grad) = surrogate_error_and_gradient(model, &u, target)?;
    let mut trace = vec![err];
    'steps: for _ in 0..config.steps {
        if err == 0.0 || grad.iter().all(|g| *g == 0.0) {
            break;
        }
        let mut lr = config.learning_rate;
        for _ in 0..=config.max_halvings {
            let cand: Vec<f64> = u.iter().zip(&grad).map(|(u, g)| clamp(u - lr * g)).collect();
            if cand == u {
                break 'steps;
            }
            let (e, g) = surrogate_error_and_gradient(model, &cand, target)?;
            if e <= err {
                u = cand;
                err = e;
                grad = g;
                trace.push(err);
                continue 'steps;
            }
            lr *= 0.5;
        }
        break;
    }
    let (lo, hi) = model.normalizer.bounds();
    Ok(FineTuneResult {
        thicknesses: model.normalizer.invert_input(&u).into_iter().map(|t| t.clamp(lo, hi)).collect(),
        trace,
    })
}
