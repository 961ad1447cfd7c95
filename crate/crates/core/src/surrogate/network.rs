use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::SurrogateError;

pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;
pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;

pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
    }
}

pub fn selu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

/// Derivative recovered from the activation value itself: `a > 0` exactly when `z > 0`.
#[inline]
fn selu_derivative_from_output(a: f64) -> f64 {
    if a > 0.0 {
        SELU_LAMBDA
    } else {
        a + SELU_LAMBDA * SELU_ALPHA
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchKind {
    /// Two disjoint subnetworks, one per half of the spectrum.
    Tcnn,
    /// A single network over the whole spectrum.
    Fcnn,
}

impl ArchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArchKind::Tcnn => "tcnn",
            ArchKind::Fcnn => "fcnn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tcnn" => Some(ArchKind::Tcnn),
            "fcnn" => Some(ArchKind::Fcnn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub kind: ArchKind,
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    /// Total spectrum length across channels.
    pub output_dim: usize,
}

impl Architecture {
    pub fn tcnn(input_dim: usize, output_dim: usize) -> Self {
        Self {
            kind: ArchKind::Tcnn,
            input_dim,
            hidden_layers: 7,
            hidden_width: 250,
            output_dim,
        }
    }

    pub fn fcnn(input_dim: usize, output_dim: usize) -> Self {
        Self {
            kind: ArchKind::Fcnn,
            input_dim,
            hidden_layers: 7,
            hidden_width: 520,
            output_dim,
        }
    }

    pub fn validate(&self) -> Result<(), SurrogateError> {
        if self.input_dim == 0 || self.hidden_layers == 0 || self.hidden_width == 0 || self.output_dim == 0 {
            return Err(SurrogateError::Argument(format!("degenerate architecture {self:?}")));
        }
        if self.kind == ArchKind::Tcnn && !self.output_dim.is_multiple_of(2) {
            return Err(SurrogateError::Argument(format!(
                "two-channel network needs an even output length, got {}",
                self.output_dim
            )));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        match self.kind {
            ArchKind::Tcnn => 2,
            ArchKind::Fcnn => 1,
        }
    }

    pub fn channel_output(&self) -> usize {
        self.output_dim / self.channels()
    }

    /// `(fan_in, fan_out)` for each dense layer of one channel.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        dims.push(self.channel_output());
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.channels() * self.layer_shapes().iter().map(|(i, o)| i * o + o).sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

/// Dense feed-forward network with all parameters in one flat vector.
///
/// Layout: channel by channel, layer by layer, each layer as its weight matrix
/// (`fan_in x fan_out`, row-major) followed by its bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    params: Vec<f64>,
}

/// Everything the backward pass needs from a forward pass.
pub struct ForwardCache {
    /// Per channel: the input followed by every layer's activation.
    activations: Vec<Vec<Array2<f64>>>,
}

impl ForwardCache {
    pub fn output(&self) -> Array2<f64> {
        let parts: Vec<ArrayView2<f64>> = self.activations.iter().map(|a| a.last().unwrap().view()).collect();
        ndarray::concatenate(Axis(1), &parts).unwrap()
    }
}

impl Network {
    /// Weights ~ N(0, 1/fan_in), biases zero.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self, SurrogateError> {
        arch.validate()?;
        let mut net = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for slot in net.slots().into_iter().flatten() {
            let normal = Normal::new(0.0, 1.0 / (slot.fan_in as f64).sqrt()).unwrap();
            for w in &mut net.params[slot.w..slot.w + slot.fan_in * slot.fan_out] {
                *w = normal.sample(&mut rng);
            }
        }
        Ok(net)
    }

    pub fn zeros(arch: Architecture) -> Result<Self, SurrogateError> {
        arch.validate()?;
        Ok(Self {
            arch,
            params: vec![0.0; arch.parameter_count()],
        })
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self, SurrogateError> {
        arch.validate()?;
        if params.len() != arch.parameter_count() {
            return Err(SurrogateError::Argument(format!(
                "expected {} parameters, got {}",
                arch.parameter_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(SurrogateError::Argument("non-finite parameter".into()));
        }
        Ok(Self { arch, params })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn slots(&self) -> Vec<Vec<Slot>> {
        let mut off = 0;
        (0..self.arch.channels())
            .map(|_| {
                self.arch
                    .layer_shapes()
                    .into_iter()
                    .map(|(fan_in, fan_out)| {
                        let slot = Slot {
                            w: off,
                            b: off + fan_in * fan_out,
                            fan_in,
                            fan_out,
                        };
                        off = slot.b + fan_out;
                        slot
                    })
                    .collect()
            })
            .collect()
    }

    /// Parameter index range owned by one channel.
    pub fn channel_range(&self, channel: usize) -> std::ops::Range<usize> {
        let per = self.params.len() / self.arch.channels();
        channel * per..(channel + 1) * per
    }

    /// Weight matrix of `layer` in `channel`, `fan_in x fan_out`.
    pub fn weights(&self, channel: usize, layer: usize) -> ArrayView2<'_, f64> {
        let s = self.slots()[channel][layer];
        weight_view(&self.params, s)
    }

    pub fn weights_mut(&mut self, channel: usize, layer: usize) -> ArrayViewMut2<'_, f64> {
        let s = self.slots()[channel][layer];
        ArrayViewMut2::from_shape((s.fan_in, s.fan_out), &mut self.params[s.w..s.b]).unwrap()
    }

    pub fn bias(&self, channel: usize, layer: usize) -> ArrayView1<'_, f64> {
        let s = self.slots()[channel][layer];
        ArrayView1::from(&self.params[s.b..s.b + s.fan_out])
    }

    pub fn bias_mut(&mut self, channel: usize, layer: usize) -> ArrayViewMut1<'_, f64> {
        let s = self.slots()[channel][layer];
        ArrayViewMut1::from(&mut self.params[s.b..s.b + s.fan_out])
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<(), SurrogateError> {
        if x.ncols() != self.arch.input_dim {
            return Err(SurrogateError::Argument(format!(
                "input has {} columns, network expects {}",
                x.ncols(),
                self.arch.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SurrogateError::Argument("non-finite input".into()));
        }
        Ok(())
    }

    /// Batched forward pass keeping every activation.
    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache, SurrogateError> {
        self.check_input(&x)?;
        let slots = self.slots();
        let mut activations = Vec::with_capacity(slots.len());
        for channel in &slots {
            let mut acts = Vec::with_capacity(channel.len() + 1);
            acts.push(x.to_owned());
            for (l, slot) in channel.iter().enumerate() {
                let w = weight_view(&self.params, *slot);
                let b = ArrayView1::from(&self.params[slot.b..slot.b + slot.fan_out]);
                let mut z = acts[l].dot(&w);
                z += &b;
                if l + 1 < channel.len() {
                    z.mapv_inplace(selu);
                }
                if z.iter().any(|v| !v.is_finite()) {
                    return Err(SurrogateError::Numerical { layer: l });
                }
                acts.push(z);
            }
            activations.push(acts);
        }
        Ok(ForwardCache { activations })
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, SurrogateError> {
        Ok(self.forward_cached(x)?.output())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        let x = ArrayView2::from_shape((1, input.len()), input).unwrap();
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    /// Reverse pass for a given output gradient `d_out` (`batch x output_dim`).
    /// Parameter gradients are accumulated into `grad`; the input gradient is returned.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        d_out: ArrayView2<f64>,
        grad: &mut [f64],
    ) -> Array2<f64> {
        assert_eq!(grad.len(), self.params.len());
        let slots = self.slots();
        let batch = d_out.nrows();
        let width = self.arch.channel_output();
        let mut d_input = Array2::<f64>::zeros((batch, self.arch.input_dim));
        for (c, channel) in slots.iter().enumerate() {
            let acts = &cache.activations[c];
            let mut delta = d_out.slice(s![.., c * width..(c + 1) * width]).to_owned();
            for l in (0..channel.len()).rev() {
                let slot = channel[l];
                if l + 1 < channel.len() {
                    delta.zip_mut_with(&acts[l + 1], |d, a| *d *= selu_derivative_from_output(*a));
                }
                {
                    let (gw, gb) = grad[slot.w..slot.b + slot.fan_out].split_at_mut(slot.fan_in * slot.fan_out);
                    let mut gw = ArrayViewMut2::from_shape((slot.fan_in, slot.fan_out), gw).unwrap();
                    general_mat_mul(1.0, &acts[l].t(), &delta, 1.0, &mut gw);
                    let mut gb = ArrayViewMut1::from(gb);
                    gb += &delta.sum_axis(Axis(0));
                }
                let w = weight_view(&self.params, slot);
                let prev = delta.dot(&w.t());
                if l == 0 {
                    d_input += &prev;
                } else {
                    delta = prev;
                }
            }
        }
        d_input
    }
}

fn weight_view(params: &[f64], s: Slot) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((s.fan_in, s.fan_out), &params[s.w..s.b]).unwrap()
}
