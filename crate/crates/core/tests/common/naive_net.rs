//! Scalar-loop reference for the dense network: used as the function that
//! finite differences are taken of, sharing no code with the batched path.

use multishell::surrogate::{selu, ArchKind, Network};

/// Pre-activations of every layer and the final output, for one input row.
pub fn forward(net: &Network, x: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let arch = net.architecture();
    let layers = arch.layer_shapes().len();
    let mut pre = Vec::new();
    let mut out = Vec::new();
    for c in 0..arch.channels() {
        let mut a = x.to_vec();
        for l in 0..layers {
            let w = net.weights(c, l);
            let b = net.bias(c, l);
            let mut z = vec![0.0; b.len()];
            for (j, zj) in z.iter_mut().enumerate() {
                let mut acc = b[j];
                for (i, ai) in a.iter().enumerate() {
                    acc += ai * w[[i, j]];
                }
                *zj = acc;
            }
            if l + 1 < layers {
                pre.push(z.clone());
                a = z.iter().map(|v| selu(*v)).collect();
            } else {
                a = z;
            }
        }
        out.extend(a);
    }
    (pre, out)
}

/// Mean over rows of the training loss, written from its definition.
pub fn batch_loss(net: &Network, xs: &[Vec<f64>], ys: &[Vec<f64>], m: f64) -> f64 {
    let kind = net.architecture().kind;
    let mut total = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let (_, p) = forward(net, x);
        let n = p.len();
        for i in 0..n {
            let w = match kind {
                ArchKind::Tcnn if i < n / 2 => m,
                ArchKind::Tcnn => 1.0 - m,
                ArchKind::Fcnn => 1.0,
            };
            total += w * (p[i] - y[i]).powi(2);
        }
    }
    total / xs.len() as f64
}

/// Smallest |pre-activation| over the batch; finite differences are only
/// meaningful away from the kink at zero.
pub fn kink_distance(net: &Network, xs: &[Vec<f64>]) -> f64 {
    xs.iter()
        .flat_map(|x| forward(net, x).0.into_iter().flatten())
        .fold(f64::INFINITY, |m, z| m.min(z.abs()))
}

use multishell::surrogate::{backprop, output_weights, Architecture};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
/// Gradients smaller than this are compared in absolute rather than relative terms.
pub const GRAD_FLOOR: f64 = 1e-6;

fn rel_err(a: f64, f: f64) -> f64 {
    (a - f).abs() / a.abs().max(f.abs()).max(GRAD_FLOOR)
}

/// One random small network and batch; returns the worst relative error over
/// all parameter gradients and all input gradients.
pub fn gradient_probe(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let kind = if rng.random_bool(0.5) { ArchKind::Tcnn } else { ArchKind::Fcnn };
        let arch = Architecture {
            kind,
            input_dim: rng.random_range(1..=4),
            hidden_layers: rng.random_range(1..=3),
            hidden_width: rng.random_range(2..=6),
            output_dim: 2 * rng.random_range(1..=3),
        };
        let mut net = Network::init(arch, rng.random()).unwrap();
        for p in net.params_mut() {
            *p += rng.random_range(-0.2..0.2);
        }
        let batch = rng.random_range(1..=4);
        let xs: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..arch.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let ys: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..arch.output_dim).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        if kink_distance(&net, &xs) < 1e-4 {
            continue;
        }
        let m: f64 = rng.random_range(0.0..1.0);
        let x = Array2::from_shape_fn((batch, arch.input_dim), |(r, c)| xs[r][c]);
        let y = Array2::from_shape_fn((batch, arch.output_dim), |(r, c)| ys[r][c]);
        let g = backprop(&net, x.view(), y.view(), &output_weights(kind, arch.output_dim, m)).unwrap();

        let mut worst_param: f64 = 0.0;
        for k in 0..net.params().len() {
            let orig = net.params()[k];
            net.params_mut()[k] = orig + FD_STEP;
            let up = batch_loss(&net, &xs, &ys, m);
            net.params_mut()[k] = orig - FD_STEP;
            let down = batch_loss(&net, &xs, &ys, m);
            net.params_mut()[k] = orig;
            worst_param = worst_param.max(rel_err(g.params[k], (up - down) / (2.0 * FD_STEP)));
        }
        let mut worst_input: f64 = 0.0;
        for r in 0..batch {
            for c in 0..arch.input_dim {
                let mut xp = xs.clone();
                xp[r][c] += FD_STEP;
                let mut xm = xs.clone();
                xm[r][c] -= FD_STEP;
                let fd = (batch_loss(&net, &xp, &ys, m) - batch_loss(&net, &xm, &ys, m)) / (2.0 * FD_STEP);
                worst_input = worst_input.max(rel_err(g.input[[r, c]], fd));
            }
        }
        return (worst_param, worst_input);
    }
}
