use ndarray::{Array2, ArrayView2};

use super::{ArchKind, SurrogateError};

fn check_lengths(pred: &[f64], target: &[f64]) -> Result<(), SurrogateError> {
    if pred.len() != target.len() {
        return Err(SurrogateError::Argument(format!(
            "spectrum lengths differ: {} vs {}",
            pred.len(),
            target.len()
        )));
    }
    Ok(())
}

/// Weighted split-spectrum loss: `m` times the squared error of the first half
/// plus `1 - m` times that of the second half.
pub fn loss_tcnn(pred: &[f64], target: &[f64], m: f64) -> Result<f64, SurrogateError> {
    check_lengths(pred, target)?;
    if !pred.len().is_multiple_of(2) {
        return Err(SurrogateError::Argument(format!("odd spectrum length {}", pred.len())));
    }
    if !(0.0..=1.0).contains(&m) {
        return Err(SurrogateError::Argument(format!("loss weight {m} outside [0, 1]")));
    }
    let half = pred.len() / 2;
    let sse = |r: std::ops::Range<usize>| r.map(|i| (pred[i] - target[i]).powi(2)).sum::<f64>();
    Ok(m * sse(0..half) + (1.0 - m) * sse(half..pred.len()))
}

/// Plain sum of squared errors over the whole spectrum.
pub fn validation_error(pred: &[f64], target: &[f64]) -> Result<f64, SurrogateError> {
    check_lengths(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum())
}

/// Per-output weights of the training loss: the split loss for two-channel
/// networks, plain squared error for the single-channel baseline.
pub fn output_weights(kind: ArchKind, n: usize, m: f64) -> Vec<f64> {
    match kind {
        ArchKind::Tcnn => (0..n).map(|i| if i < n / 2 { m } else { 1.0 - m }).collect(),
        ArchKind::Fcnn => vec![1.0; n],
    }
}

/// Mean over rows of the weighted squared error, and its gradient w.r.t. `pred`.
pub fn weighted_batch_loss(pred: ArrayView2<f64>, target: ArrayView2<f64>, weights: &[f64]) -> (f64, Array2<f64>) {
    let rows = pred.nrows() as f64;
    let mut grad = &pred - &target;
    let mut loss = 0.0;
    for mut row in grad.rows_mut() {
        for (r, w) in row.iter_mut().zip(weights) {
            loss += w * *r * *r;
            *r *= 2.0 * w / rows;
        }
    }
    (loss / rows, grad)
}
