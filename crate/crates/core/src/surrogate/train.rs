use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    adam_step, output_weights, weighted_batch_loss, AdamState, MlpModel, Network, SurrogateError,
};
use crate::dataset::Dataset;

const EVAL_CHUNK: usize = 1024;

/// Mean batch loss with its parameter and input gradients.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub loss: f64,
    pub params: Vec<f64>,
    pub input: Array2<f64>,
}

/// Exact reverse-mode gradient of the mean weighted squared error over the batch.
pub fn backprop(
    net: &Network,
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    weights: &[f64],
) -> Result<Gradient, SurrogateError> {
    if x.nrows() == 0 || x.nrows() != y.nrows() || y.ncols() != net.architecture().output_dim {
        return Err(SurrogateError::Argument(format!(
            "batch shapes {:?} / {:?} do not fit the network",
            x.shape(),
            y.shape()
        )));
    }
    let cache = net.forward_cached(x)?;
    let (loss, d_out) = weighted_batch_loss(cache.output().view(), y, weights);
    let mut params = vec![0.0; net.params().len()];
    let input = net.backward(&cache, d_out.view(), &mut params);
    Ok(Gradient { loss, params, input })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_error: f64,
}

pub fn train(model: &mut MlpModel, train: &Dataset, val: &Dataset) -> Result<(), SurrogateError> {
    train_with(model, train, val, |_| {})
}

/// Records are first put in a canonical order, so the result does not depend on
/// how the training split happens to be ordered; the per-epoch shuffle is then
/// drawn from the configured seed.
pub fn train_with(
    model: &mut MlpModel,
    train: &Dataset,
    val: &Dataset,
    mut on_epoch: impl FnMut(EpochStats),
) -> Result<(), SurrogateError> {
    let cfg = model.config;
    cfg.validate()?;
    model.check_compatible(train)?;
    model.check_compatible(val)?;
    if train.is_empty() || val.is_empty() {
        return Err(SurrogateError::Argument("empty training or validation split".into()));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.sort_by(|&a, &b| {
        let key = |i: usize| {
            let r = &train.records[i];
            r.thicknesses.iter().chain(&r.spectrum).map(|v| v.to_bits()).collect::<Vec<_>>()
        };
        key(a).cmp(&key(b))
    });
    let (x, y) = normalized_matrices(model, train, &order);
    let (vx, vy) = normalized_matrices(model, val, &(0..val.len()).collect::<Vec<_>>());

    let arch = *model.architecture();
    let weights = output_weights(arch.kind, arch.output_dim, cfg.m);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adam = AdamState::new(model.network.params().len());
    let mut grad = vec![0.0; model.network.params().len()];
    let mut perm: Vec<usize> = (0..x.nrows()).collect();
    let first_epoch = model.history.train_loss.len() + 1;
    if model.history.initial_val_error.is_none() {
        model.history.initial_val_error = Some(mean_sse(&model.network, vx.view(), vy.view())?);
    }

    for epoch in first_epoch..first_epoch + cfg.epochs {
        perm.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in perm.chunks(cfg.batch_size) {
            let bx = x.select(Axis(0), chunk);
            let by = y.select(Axis(0), chunk);
            let cache = model
                .network
                .forward_cached(bx.view())
                .map_err(|_| SurrogateError::Diverged { epoch })?;
            let (loss, d_out) = weighted_batch_loss(cache.output().view(), by.view(), &weights);
            if !loss.is_finite() {
                return Err(SurrogateError::Diverged { epoch });
            }
            total += loss * chunk.len() as f64;
            grad.fill(0.0);
            model.network.backward(&cache, d_out.view(), &mut grad);
            adam_step(model.network.params_mut(), &grad, &mut adam, &cfg.adam);
        }
        let train_loss = total / x.nrows() as f64;
        let val_error = mean_sse(&model.network, vx.view(), vy.view()).map_err(|_| SurrogateError::Diverged { epoch })?;
        if !val_error.is_finite() {
            return Err(SurrogateError::Diverged { epoch });
        }
        model.history.train_loss.push(train_loss);
        model.history.val_error.push(val_error);
        on_epoch(EpochStats {
            epoch,
            train_loss,
            val_error,
        });
    }
    Ok(())
}

fn normalized_matrices(model: &MlpModel, ds: &Dataset, order: &[usize]) -> (Array2<f64>, Array2<f64>) {
    let l = ds.num_layers();
    let n = ds.n_points();
    let mut x = Vec::with_capacity(order.len() * l);
    let mut y = Vec::with_capacity(order.len() * n);
    for &i in order {
        x.extend(model.normalizer.apply_input(&ds.records[i].thicknesses));
        y.extend(model.normalizer.apply_output(&ds.records[i].spectrum));
    }
    (
        Array2::from_shape_vec((order.len(), l), x).unwrap(),
        Array2::from_shape_vec((order.len(), n), y).unwrap(),
    )
}

fn mean_sse(net: &Network, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64, SurrogateError> {
    let mut total = 0.0;
    for start in (0..x.nrows()).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(x.nrows());
        let pred = net.forward_batch(x.slice(ndarray::s![start..end, ..]))?;
        total += (&pred - &y.slice(ndarray::s![start..end, ..])).mapv(|r| r * r).sum();
    }
    Ok(total / x.nrows() as f64)
}

/// Mean over records of the whole-spectrum squared error, in normalized units.
pub fn evaluate_mean_error(model: &MlpModel, ds: &Dataset) -> Result<f64, SurrogateError> {
    model.check_compatible(ds)?;
    if ds.is_empty() {
        return Err(SurrogateError::Argument("cannot evaluate on an empty dataset".into()));
    }
    let (x, y) = normalized_matrices(model, ds, &(0..ds.len()).collect::<Vec<_>>());
    mean_sse(&model.network, x.view(), y.view())
}
