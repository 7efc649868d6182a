//! A small deep convolutional network engine over 1-D sequences.
//!
//! Layers operate on row-major tensors shaped `[length, channels]`, except the
//! embedding layer, whose input is a `[length]` tensor of integer ids, and the
//! dense layer, which flattens whatever it receives. Training minimizes the
//! half squared error `E = 1/2 |d - f|^2` by backpropagation and plain
//! gradient descent `w <- w - lr * dE/dw`.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::metrics::fmt_f64;

#[derive(Debug, Error, PartialEq)]
pub enum DcnnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("kernel {kernel} does not fit padded width {padded}")]
    KernelTooLarge { kernel: usize, padded: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("embedding id {0} is not an index into the table")]
    InvalidIndex(f64),
    #[error("forward cache does not belong to this network state")]
    StaleCache,
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("empty input")]
    Empty,
    #[error("malformed tensor dump: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, DcnnError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(DcnnError::ShapeMismatch(format!("zero dimension in {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(DcnnError::ShapeMismatch(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn uniform(shape: Vec<usize>, rng: &mut ChaCha8Rng, scale: f64) -> Self {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
        Tensor { shape, data }
    }

    /// Shape header line, then one value per line at 17 significant digits.
    pub fn to_text(&self) -> String {
        let dims: Vec<String> = self.shape.iter().map(|d| d.to_string()).collect();
        let mut out = dims.join(" ");
        out.push('\n');
        for v in &self.data {
            let _ = writeln!(out, "{}", fmt_f64(*v));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| DcnnError::Parse("missing shape line".into()))?;
        let shape = header
            .split_whitespace()
            .map(|d| d.parse::<usize>().map_err(|e| DcnnError::Parse(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let data = lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| DcnnError::Parse(format!("{l:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Tensor::new(shape, data)
    }
}

/// Output width of a convolution or pooling window:
/// `floor((W + 2p - k) / s) + 1`, which equals `(W + 2p - k + s) / s` whenever
/// the stride divides `W + 2p - k`.
pub fn conv_output_size(width: usize, kernel: usize, padding: usize, stride: usize) -> Result<usize> {
    if stride == 0 {
        return Err(DcnnError::InvalidConfig("stride must be at least 1".into()));
    }
    if kernel == 0 {
        return Err(DcnnError::InvalidConfig("kernel must be at least 1".into()));
    }
    let padded = width + 2 * padding;
    if padded < kernel {
        return Err(DcnnError::KernelTooLarge { kernel, padded });
    }
    Ok((padded - kernel) / stride + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "sigmoid" => Some(Activation::Sigmoid),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }

    fn apply(self, u: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-u).exp()),
            Activation::Relu => u.max(0.0),
        }
    }

    fn derivative(self, u: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let a = self.apply(u);
                a * (1.0 - a)
            }
            Activation::Relu => {
                if u > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// `table`: `[vocab, dim]`. Maps `[len]` ids to `[len, dim]`.
    Embedding {
        table: Tensor,
    },
    /// `weights`: `[out, in, kernel]`, `bias`: `[out]`. Maps `[len, in]` to `[len', out]`.
    Conv1d {
        stride: usize,
        padding: usize,
        weights: Tensor,
        bias: Tensor,
    },
    /// Maps `[len, ch]` to `[len', ch]`, keeping the window maximum.
    MaxPool1d {
        window: usize,
        stride: usize,
    },
    /// `weights`: `[out, in]`, `bias`: `[out]`. Flattens its input.
    Dense {
        weights: Tensor,
        bias: Tensor,
    },
    Activation(Activation),
}

impl Layer {
    pub fn embedding(vocab: usize, dim: usize, rng: &mut ChaCha8Rng, scale: f64) -> Self {
        Layer::Embedding {
            table: Tensor::uniform(vec![vocab, dim], rng, scale),
        }
    }

    pub fn conv1d(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut ChaCha8Rng,
        scale: f64,
    ) -> Self {
        Layer::Conv1d {
            stride,
            padding,
            weights: Tensor::uniform(vec![out_channels, in_channels, kernel], rng, scale),
            bias: Tensor::zeros(vec![out_channels]),
        }
    }

    pub fn dense(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng, scale: f64) -> Self {
        Layer::Dense {
            weights: Tensor::uniform(vec![outputs, inputs], rng, scale),
            bias: Tensor::zeros(vec![outputs]),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Embedding { .. } => "embedding",
            Layer::Conv1d { .. } => "conv1d",
            Layer::MaxPool1d { .. } => "maxpool1d",
            Layer::Dense { .. } => "dense",
            Layer::Activation(_) => "activation",
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Embedding { table } => vec![table],
            Layer::Conv1d { weights, bias, .. } | Layer::Dense { weights, bias } => vec![weights, bias],
            Layer::MaxPool1d { .. } | Layer::Activation(_) => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Embedding { table } => vec![table],
            Layer::Conv1d { weights, bias, .. } | Layer::Dense { weights, bias } => vec![weights, bias],
            Layer::MaxPool1d { .. } | Layer::Activation(_) => vec![],
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let mismatch = |m: String| Err(DcnnError::ShapeMismatch(format!("{}: {m}", self.kind())));
        match self {
            Layer::Embedding { table } => {
                if input.len() != 1 {
                    return mismatch(format!("expects [len] ids, got {input:?}"));
                }
                Ok(vec![input[0], table.shape[1]])
            }
            Layer::Conv1d {
                stride,
                padding,
                weights,
                bias,
            } => {
                let [out, inc, k] = weights.shape[..] else {
                    return mismatch("weights must be [out, in, kernel]".into());
                };
                if bias.shape != [out] {
                    return mismatch("bias must be [out]".into());
                }
                if input.len() != 2 || input[1] != inc {
                    return mismatch(format!("expects [len, {inc}], got {input:?}"));
                }
                Ok(vec![conv_output_size(input[0], k, *padding, *stride)?, out])
            }
            Layer::MaxPool1d { window, stride } => {
                if input.len() != 2 {
                    return mismatch(format!("expects [len, ch], got {input:?}"));
                }
                Ok(vec![conv_output_size(input[0], *window, 0, *stride)?, input[1]])
            }
            Layer::Dense { weights, bias } => {
                let [out, inn] = weights.shape[..] else {
                    return mismatch("weights must be [out, in]".into());
                };
                if bias.shape != [out] {
                    return mismatch("bias must be [out]".into());
                }
                let n: usize = input.iter().product();
                if n != inn {
                    return mismatch(format!("expects {inn} inputs, got {input:?}"));
                }
                Ok(vec![out])
            }
            Layer::Activation(_) => Ok(input.to_vec()),
        }
    }
}

/// An ordered layer stack with shapes validated at construction.
#[derive(Debug, Clone)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    shapes: Vec<Vec<usize>>,
    version: u64,
}

/// Compares architecture and parameters; the cache version is ignored.
impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.input_shape == other.input_shape && self.layers == other.layers
    }
}

impl Network {
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(DcnnError::InvalidConfig("network has no layers".into()));
        }
        let mut shapes = vec![input_shape.clone()];
        for layer in &layers {
            let next = layer.output_shape(shapes.last().expect("non-empty"))?;
            shapes.push(next);
        }
        Ok(Network {
            input_shape,
            layers,
            shapes,
            version: 0,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().expect("validated network")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().flat_map(|l| l.params()).map(|t| t.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.params())
            .flat_map(|t| t.data.iter().copied())
            .collect()
    }

    fn touch(&mut self) {
        self.version = self.version.wrapping_add(1);
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let mut i = index;
        for layer in &mut self.layers {
            for t in layer.params_mut() {
                if i < t.len() {
                    t.data[i] = value;
                    self.version = self.version.wrapping_add(1);
                    return;
                }
                i -= t.len();
            }
        }
        panic!("parameter index {index} out of range");
    }
}

/// Activations recorded by [`forward`] for use by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of every layer; the input of an activation layer is its
    /// pre-activation `u`.
    inputs: Vec<Tensor>,
    output: Tensor,
    /// Absolute input row of each pooled maximum, per pooling layer.
    pool_argmax: Vec<Option<Vec<usize>>>,
    version: u64,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor {
        &self.output
    }

    pub fn layer_inputs(&self) -> &[Tensor] {
        &self.inputs
    }
}

pub fn forward(net: &Network, input: &Tensor) -> Result<(Tensor, ForwardCache)> {
    if input.shape != net.input_shape {
        return Err(DcnnError::ShapeMismatch(format!(
            "network expects input {:?}, got {:?}",
            net.input_shape, input.shape
        )));
    }
    let mut inputs = Vec::with_capacity(net.layers.len());
    let mut pool_argmax = Vec::with_capacity(net.layers.len());
    let mut x = input.clone();
    for (layer, out_shape) in net.layers.iter().zip(&net.shapes[1..]) {
        let (y, arg) = layer_forward(layer, &x, out_shape)?;
        inputs.push(x);
        pool_argmax.push(arg);
        x = y;
    }
    let cache = ForwardCache {
        inputs,
        output: x.clone(),
        pool_argmax,
        version: net.version,
    };
    Ok((x, cache))
}

fn layer_forward(layer: &Layer, x: &Tensor, out_shape: &[usize]) -> Result<(Tensor, Option<Vec<usize>>)> {
    let mut y = Tensor::zeros(out_shape.to_vec());
    match layer {
        Layer::Embedding { table } => {
            let dim = table.shape[1];
            let vocab = table.shape[0];
            for (t, &id) in x.data.iter().enumerate() {
                if id < 0.0 || id.fract() != 0.0 || id as usize >= vocab {
                    return Err(DcnnError::InvalidIndex(id));
                }
                let row = id as usize;
                y.data[t * dim..(t + 1) * dim].copy_from_slice(&table.data[row * dim..(row + 1) * dim]);
            }
            Ok((y, None))
        }
        Layer::Conv1d {
            stride,
            padding,
            weights,
            bias,
        } => {
            let (out_c, in_c, k) = (weights.shape[0], weights.shape[1], weights.shape[2]);
            let len = x.shape[0];
            for t in 0..out_shape[0] {
                for o in 0..out_c {
                    let mut acc = bias.data[o];
                    for j in 0..k {
                        let Some(i) = (t * stride + j).checked_sub(*padding).filter(|&i| i < len) else {
                            continue;
                        };
                        for c in 0..in_c {
                            acc += weights.data[(o * in_c + c) * k + j] * x.data[i * in_c + c];
                        }
                    }
                    y.data[t * out_c + o] = acc;
                }
            }
            Ok((y, None))
        }
        Layer::MaxPool1d { window, stride } => {
            let ch = x.shape[1];
            let mut arg = vec![0usize; y.len()];
            for t in 0..out_shape[0] {
                for c in 0..ch {
                    let mut best_i = t * stride;
                    for i in t * stride + 1..t * stride + window {
                        if x.data[i * ch + c] > x.data[best_i * ch + c] {
                            best_i = i;
                        }
                    }
                    y.data[t * ch + c] = x.data[best_i * ch + c];
                    arg[t * ch + c] = best_i;
                }
            }
            Ok((y, Some(arg)))
        }
        Layer::Dense { weights, bias } => {
            let (out, inn) = (weights.shape[0], weights.shape[1]);
            for o in 0..out {
                let row = &weights.data[o * inn..(o + 1) * inn];
                y.data[o] = bias.data[o] + row.iter().zip(&x.data).map(|(w, v)| w * v).sum::<f64>();
            }
            Ok((y, None))
        }
        Layer::Activation(a) => {
            for (dst, &u) in y.data.iter_mut().zip(&x.data) {
                *dst = a.apply(u);
            }
            Ok((y, None))
        }
    }
}

/// Half squared error `1/2 sum (d_j - f_j)^2`.
pub fn sse_loss(output: &Tensor, target: &Tensor) -> Result<f64> {
    if output.shape != target.shape {
        return Err(DcnnError::ShapeMismatch(format!(
            "output {:?} vs target {:?}",
            output.shape, target.shape
        )));
    }
    Ok(0.5
        * output
            .data
            .iter()
            .zip(&target.data)
            .map(|(f, d)| (d - f) * (d - f))
            .sum::<f64>())
}

/// Mean of per-example losses.
pub fn mean_cost(losses: &[f64]) -> Result<f64> {
    if losses.is_empty() {
        return Err(DcnnError::Empty);
    }
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Parameter gradients, laid out like [`Layer::params`] for every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Vec<Tensor>>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flatten()
            .flat_map(|t| t.data.iter().copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .flatten()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

/// Backpropagates `dE/df = f - d` through the cached forward pass.
///
/// Each layer turns the incoming delta into parameter gradients and the delta
/// of its input; bias gradients equal the delta itself and max pooling routes
/// the delta only to the recorded argmax rows. With a sigmoid output the
/// output-unit delta is `(a - y) a (1 - a)`.
pub fn backward(net: &Network, cache: &ForwardCache, target: &Tensor) -> Result<Gradients> {
    backward_full(net, cache, target).map(|(g, _)| g)
}

/// Like [`backward`], also returning `dE/dx` for the network input.
pub fn backward_full(net: &Network, cache: &ForwardCache, target: &Tensor) -> Result<(Gradients, Tensor)> {
    if cache.version != net.version || cache.inputs.len() != net.layers.len() {
        return Err(DcnnError::StaleCache);
    }
    if target.shape != cache.output.shape {
        return Err(DcnnError::ShapeMismatch(format!(
            "output {:?} vs target {:?}",
            cache.output.shape, target.shape
        )));
    }
    let mut delta = Tensor {
        shape: cache.output.shape.clone(),
        data: cache.output.data.iter().zip(&target.data).map(|(f, d)| f - d).collect(),
    };
    let mut grads: Vec<Vec<Tensor>> = vec![Vec::new(); net.layers.len()];
    for (li, layer) in net.layers.iter().enumerate().rev() {
        let x = &cache.inputs[li];
        let mut dx = Tensor::zeros(x.shape.clone());
        match layer {
            Layer::Embedding { table } => {
                let dim = table.shape[1];
                let mut dt = Tensor::zeros(table.shape.clone());
                for (t, &id) in x.data.iter().enumerate() {
                    let row = id as usize;
                    for d in 0..dim {
                        dt.data[row * dim + d] += delta.data[t * dim + d];
                    }
                }
                grads[li] = vec![dt];
            }
            Layer::Conv1d {
                stride,
                padding,
                weights,
                ..
            } => {
                let (out_c, in_c, k) = (weights.shape[0], weights.shape[1], weights.shape[2]);
                let len = x.shape[0];
                let mut dw = Tensor::zeros(weights.shape.clone());
                let mut db = Tensor::zeros(vec![out_c]);
                for t in 0..delta.shape[0] {
                    for o in 0..out_c {
                        let g = delta.data[t * out_c + o];
                        db.data[o] += g;
                        for j in 0..k {
                            let Some(i) = (t * stride + j).checked_sub(*padding).filter(|&i| i < len) else {
                                continue;
                            };
                            for c in 0..in_c {
                                let wi = (o * in_c + c) * k + j;
                                dw.data[wi] += g * x.data[i * in_c + c];
                                dx.data[i * in_c + c] += g * weights.data[wi];
                            }
                        }
                    }
                }
                grads[li] = vec![dw, db];
            }
            Layer::MaxPool1d { .. } => {
                let arg = cache.pool_argmax[li].as_ref().ok_or(DcnnError::StaleCache)?;
                let ch = x.shape[1];
                for (idx, &row) in arg.iter().enumerate() {
                    dx.data[row * ch + idx % ch] += delta.data[idx];
                }
            }
            Layer::Dense { weights, .. } => {
                let (out, inn) = (weights.shape[0], weights.shape[1]);
                let mut dw = Tensor::zeros(weights.shape.clone());
                for o in 0..out {
                    let g = delta.data[o];
                    for i in 0..inn {
                        dw.data[o * inn + i] = g * x.data[i];
                        dx.data[i] += weights.data[o * inn + i] * g;
                    }
                }
                grads[li] = vec![dw, Tensor::from_vec(delta.data.clone())];
            }
            Layer::Activation(a) => {
                for ((d, &u), g) in dx.data.iter_mut().zip(&x.data).zip(&delta.data) {
                    *d = g * a.derivative(u);
                }
            }
        }
        delta = dx;
    }
    Ok((Gradients { layers: grads }, delta))
}

/// One descent step `w <- w - lr * g` on every parameter.
pub fn sgd_step(net: &mut Network, grads: &Gradients, learning_rate: f64) -> Result<()> {
    if grads.layers.len() != net.layers.len() {
        return Err(DcnnError::ShapeMismatch("gradient layer count".into()));
    }
    if !grads.is_finite() {
        return Err(DcnnError::NonFiniteGradient);
    }
    for (layer, lg) in net.layers.iter_mut().zip(&grads.layers) {
        let params = layer.params_mut();
        if params.len() != lg.len() {
            return Err(DcnnError::ShapeMismatch(format!("gradient for {} layer", layer.kind())));
        }
        for (p, g) in params.into_iter().zip(lg) {
            if p.shape != g.shape {
                return Err(DcnnError::ShapeMismatch(format!("{:?} vs {:?}", p.shape, g.shape)));
            }
            for (w, dw) in p.data.iter_mut().zip(&g.data) {
                *w -= learning_rate * dw;
            }
        }
    }
    net.touch();
    Ok(())
}

/// Largest relative error between backpropagated and central-difference
/// gradients over all parameters, `|a - n| / max(|a|, |n|, 1e-12)`.
pub fn gradient_check(net: &Network, input: &Tensor, target: &Tensor, eps: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(DcnnError::InvalidConfig("epsilon must be positive".into()));
    }
    let (_, cache) = forward(net, input)?;
    let analytic = backward(net, &cache, target)?.flat();
    let base = net.flat_params();
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (i, (&w, &a)) in base.iter().zip(&analytic).enumerate() {
        probe.set_param(i, w + eps);
        let plus = sse_loss(&forward(&probe, input)?.0, target)?;
        probe.set_param(i, w - eps);
        let minus = sse_loss(&forward(&probe, input)?.0, target)?;
        probe.set_param(i, w);
        let numeric = (plus - minus) / (2.0 * eps);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 30,
            seed: 0,
            init_scale: 0.3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(DcnnError::InvalidConfig("learning rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(DcnnError::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(DcnnError::InvalidConfig("init scale must be positive".into()));
        }
        Ok(())
    }
}

/// One pass of per-example gradient descent over `examples` in the given
/// order. Returns the mean per-example loss measured before each update.
pub fn sgd_epoch(net: &mut Network, examples: &[(Tensor, Tensor)], learning_rate: f64) -> Result<f64> {
    let mut losses = Vec::with_capacity(examples.len());
    for (x, d) in examples {
        let (y, cache) = forward(net, x)?;
        losses.push(sse_loss(&y, d)?);
        let g = backward(net, &cache, d)?;
        sgd_step(net, &g, learning_rate)?;
    }
    mean_cost(&losses)
}
