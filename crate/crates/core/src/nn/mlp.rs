use rand::Rng;

use super::{Activation, MlpSpec, ParamVector};
use crate::error::{check_len, Result};

/// Glorot-uniform weights, zero biases.
pub fn init_params<R: Rng + ?Sized>(spec: &MlpSpec, rng: &mut R) -> ParamVector {
    let mut params = ParamVector::zeros(spec.param_count());
    for layer in spec.layers() {
        let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
        for w in &mut params[layer.weight_offset..layer.bias_offset] {
            *w = rng.random_range(-limit..limit);
        }
    }
    params
}

/// Intermediate values of a batched forward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    batch: usize,
    /// `pre[l]` holds layer `l` pre-activations, `batch x fan_out`.
    pre: Vec<Vec<f64>>,
    /// `acts[0]` is the input; `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl Cache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }

    pub fn into_output(mut self) -> Vec<f64> {
        self.acts.pop().unwrap()
    }

    pub fn pre_activations(&self, layer: usize) -> &[f64] {
        &self.pre[layer]
    }

    pub fn activations(&self, layer: usize) -> &[f64] {
        &self.acts[layer]
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Evaluates the network on `batch` inputs stored row by row.
pub fn forward_batch(spec: &MlpSpec, params: &[f64], inputs: &[f64], batch: usize) -> Result<Cache> {
    check_len("network parameters", spec.param_count(), params.len())?;
    check_len("network input", batch * spec.input_dim(), inputs.len())?;
    let layers = spec.layers();
    let mut pre = Vec::with_capacity(layers.len());
    let mut acts = Vec::with_capacity(layers.len() + 1);
    acts.push(inputs.to_vec());
    for (l, shape) in layers.iter().enumerate() {
        let act = spec.activation(l);
        let weights = &params[shape.weight_offset..shape.bias_offset];
        let bias = &params[shape.bias_offset..shape.end()];
        let input = &acts[l];
        let mut z = vec![0.0; batch * shape.fan_out];
        for (x, zb) in input.chunks_exact(shape.fan_in).zip(z.chunks_exact_mut(shape.fan_out)) {
            for ((zo, row), b) in zb.iter_mut().zip(weights.chunks_exact(shape.fan_in)).zip(bias) {
                *zo = b + dot(row, x);
            }
        }
        let a = match act {
            Activation::Identity => z.clone(),
            _ => z.iter().map(|&v| act.apply(v)).collect(),
        };
        pre.push(z);
        acts.push(a);
    }
    Ok(Cache { batch, pre, acts })
}

/// Reverse pass for a batch: gradients of `sum_b <output_grads_b, output_b>`.
///
/// Parameter gradients are summed over the batch. The input gradient is only
/// formed when `want_input_grad` is set.
pub fn backward_batch(
    spec: &MlpSpec,
    params: &[f64],
    cache: &Cache,
    output_grads: &[f64],
    want_input_grad: bool,
) -> Result<(Option<Vec<f64>>, ParamVector)> {
    let (input_grad, grads) = reverse(spec, params, cache, output_grads, want_input_grad, true)?;
    Ok((input_grad, grads.unwrap_or_default()))
}

/// Input gradient only, skipping the parameter gradient accumulation.
pub(crate) fn input_grad_batch(
    spec: &MlpSpec,
    params: &[f64],
    cache: &Cache,
    output_grads: &[f64],
) -> Result<Vec<f64>> {
    let (input_grad, _) = reverse(spec, params, cache, output_grads, true, false)?;
    Ok(input_grad.unwrap_or_default())
}

fn reverse(
    spec: &MlpSpec,
    params: &[f64],
    cache: &Cache,
    output_grads: &[f64],
    want_input_grad: bool,
    want_param_grads: bool,
) -> Result<(Option<Vec<f64>>, Option<ParamVector>)> {
    check_len("network parameters", spec.param_count(), params.len())?;
    check_len("cache depth", spec.num_layers() + 1, cache.acts.len())?;
    check_len("output gradient", cache.batch * spec.output_dim(), output_grads.len())?;
    let layers = spec.layers();
    let mut grads = ParamVector::zeros(if want_param_grads { params.len() } else { 0 });
    let mut delta = output_grads.to_vec();
    for l in (0..layers.len()).rev() {
        let shape = layers[l];
        let act = spec.activation(l);
        if act != Activation::Identity {
            for (d, &a) in delta.iter_mut().zip(&cache.acts[l + 1]) {
                *d *= act.derivative_from_output(a);
            }
        }
        let input = &cache.acts[l];
        let weights = &params[shape.weight_offset..shape.bias_offset];
        if want_param_grads {
            let (gw, gb) = grads[shape.weight_offset..shape.end()].split_at_mut(shape.fan_in * shape.fan_out);
            for (x, db) in input.chunks_exact(shape.fan_in).zip(delta.chunks_exact(shape.fan_out)) {
                for ((g, grow), bias_g) in db.iter().zip(gw.chunks_exact_mut(shape.fan_in)).zip(gb.iter_mut()) {
                    if *g != 0.0 {
                        *bias_g += g;
                        axpy(*g, x, grow);
                    }
                }
            }
        }
        if l == 0 && !want_input_grad {
            return Ok((None, want_param_grads.then_some(grads)));
        }
        let mut next = vec![0.0; cache.batch * shape.fan_in];
        for (nb, db) in next.chunks_exact_mut(shape.fan_in).zip(delta.chunks_exact(shape.fan_out)) {
            for (g, row) in db.iter().zip(weights.chunks_exact(shape.fan_in)) {
                if *g != 0.0 {
                    axpy(*g, row, nb);
                }
            }
        }
        delta = next;
    }
    Ok((Some(delta), want_param_grads.then_some(grads)))
}

/// Single-input forward pass.
pub fn forward(spec: &MlpSpec, params: &[f64], input: &[f64]) -> Result<(Vec<f64>, Cache)> {
    let cache = forward_batch(spec, params, input, 1)?;
    Ok((cache.output().to_vec(), cache))
}

/// Single-input reverse pass returning `(input_grad, param_grads)`.
pub fn backward(
    spec: &MlpSpec,
    params: &[f64],
    cache: &Cache,
    output_grad: &[f64],
) -> Result<(Vec<f64>, ParamVector)> {
    let (input_grad, grads) = backward_batch(spec, params, cache, output_grad, true)?;
    Ok((input_grad.unwrap_or_default(), grads))
}
