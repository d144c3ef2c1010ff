//! The trainable hashing head: a fully-connected network from features to
//! `L` pre-activations. Training sees `tanh` of the output; retrieval sees
//! its sign.

mod checkpoint;
mod codes;
mod optim;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use thiserror::Error;

use crate::rng::{salt, stream};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use codes::{read_codes, write_codes, BinaryCodes, PackedCodes, CODES_MAGIC};
pub use optim::{sgd_momentum_step, OptimState};

#[derive(Debug, Error)]
pub enum HashError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite activation in layer {layer}")]
    NonFiniteActivation { layer: usize },
    #[error("forward cache does not match the model or gradient shape")]
    CacheMismatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One affine layer; `weights` is `fan_in x fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros_like(&self) -> Self {
        Self { weights: Array2::zeros(self.weights.raw_dim()), bias: Array1::zeros(self.bias.len()) }
    }

    fn same_shape(&self, other: &Layer) -> bool {
        self.weights.dim() == other.weights.dim() && self.bias.len() == other.bias.len()
    }
}

/// Fully-connected head with ReLU between layers and an identity output.
#[derive(Debug, Clone, PartialEq)]
pub struct HashModel {
    pub layers: Vec<Layer>,
}

/// Relaxed codes `tanh(G(x))`, one row per item.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedCodes {
    pub v: Array2<f64>,
}

/// Intermediates of a forward pass. `inputs[l]` feeds layer `l`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
}

/// Parameter gradients, shaped like [`HashModel::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(model: &HashModel) -> Self {
        Self { layers: model.layers.iter().map(Layer::zeros_like).collect() }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights += &b.weights;
            a.bias += &b.bias;
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|x| x.is_finite()))
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_model(d: usize, hidden: &[usize], code_len: usize, seed: u64) -> Result<HashModel, HashError> {
    if code_len == 0 {
        return Err(HashError::InvalidParameter("code length must be >= 1".into()));
    }
    if d == 0 || hidden.contains(&0) {
        return Err(HashError::InvalidParameter("layer widths must be >= 1".into()));
    }
    let dims: Vec<usize> = std::iter::once(d).chain(hidden.iter().copied()).chain([code_len]).collect();
    let mut rng = stream(seed, salt::INIT);
    let layers = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-limit..=limit));
            Layer { weights, bias: Array1::zeros(fan_out) }
        })
        .collect();
    Ok(HashModel { layers })
}

impl HashModel {
    /// `[d, h1, ..., L]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].weights.nrows()];
        dims.extend(self.layers.iter().map(|l| l.weights.ncols()));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn code_len(&self) -> usize {
        self.layers.last().unwrap().weights.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        Gradients { layers: self.layers.clone() }.flat()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<(), HashError> {
        if flat.len() != self.param_count() {
            return Err(HashError::ShapeMismatch(format!(
                "{} parameters given, model has {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|p| *p = it.next().unwrap());
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.params_flat().iter().all(|p| p.is_finite())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<(), HashError> {
        if x.ncols() != self.input_dim() {
            return Err(HashError::ShapeMismatch(format!(
                "input has {} columns, model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Output-layer pre-activations `G(x)`.
    pub fn pre_activations(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, HashError> {
        self.check_input(&x)?;
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights) + &layer.bias;
            if li < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(HashError::NonFiniteActivation { layer: li });
            }
            a = z;
        }
        Ok(a)
    }

    /// `tanh(G(x))` plus the cache needed by [`HashModel::backward`].
    pub fn forward_relaxed(&self, x: ArrayView2<f64>) -> Result<(RelaxedCodes, ForwardCache), HashError> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for (li, layer) in self.layers.iter().enumerate() {
            let z = a.dot(&layer.weights) + &layer.bias;
            if z.iter().any(|v| !v.is_finite()) {
                return Err(HashError::NonFiniteActivation { layer: li });
            }
            let next = if li < last { z.mapv(|v| v.max(0.0)) } else { z.mapv(f64::tanh) };
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        let cache = ForwardCache { inputs, pre, output: a.clone() };
        Ok((RelaxedCodes { v: a }, cache))
    }

    /// Exact parameter gradients for a loss whose gradient with respect to
    /// the relaxed codes is `grad_v`.
    pub fn backward(&self, cache: &ForwardCache, grad_v: ArrayView2<f64>) -> Result<Gradients, HashError> {
        if cache.inputs.len() != self.layers.len() || cache.output.dim() != grad_v.dim() {
            return Err(HashError::CacheMismatch);
        }
        for (layer, (inp, z)) in self.layers.iter().zip(cache.inputs.iter().zip(&cache.pre)) {
            if inp.ncols() != layer.weights.nrows() || z.ncols() != layer.weights.ncols() {
                return Err(HashError::CacheMismatch);
            }
        }
        // d tanh(z) / dz = 1 - tanh(z)^2
        let mut delta = Zip::from(&grad_v).and(&cache.output).map_collect(|&g, &v| g * (1.0 - v * v));
        let mut grads = Gradients::zeros_like(self);
        for li in (0..self.layers.len()).rev() {
            let input = &cache.inputs[li];
            grads.layers[li].weights = input.t().dot(&delta);
            grads.layers[li].bias = delta.sum_axis(Axis(0));
            if li > 0 {
                let mut upstream = delta.dot(&self.layers[li].weights.t());
                Zip::from(&mut upstream).and(&cache.pre[li - 1]).for_each(|g, &z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = upstream;
            }
        }
        Ok(grads)
    }

    /// `sign(G(x))` with `sign(0) = +1`.
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<BinaryCodes, HashError> {
        let z = self.pre_activations(x)?;
        Ok(BinaryCodes::from_signs(&z))
    }
}

pub fn forward_relaxed(model: &HashModel, x: ArrayView2<f64>) -> Result<(RelaxedCodes, ForwardCache), HashError> {
    model.forward_relaxed(x)
}

pub fn backward(model: &HashModel, cache: &ForwardCache, grad_v: ArrayView2<f64>) -> Result<Gradients, HashError> {
    model.backward(cache, grad_v)
}

pub fn encode(model: &HashModel, x: ArrayView2<f64>) -> Result<BinaryCodes, HashError> {
    model.encode(x)
}

/// Features as stored on disk are `f32`; the head runs in `f64`.
pub fn to_f64(x: &Array2<f32>) -> Array2<f64> {
    x.mapv(f64::from)
}
