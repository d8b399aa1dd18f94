//! Runtime finite-difference check of [`backward`](super::backward), used by
//! the `check` command.

use rand::Rng;

use super::{backward, forward, init_params, Activation, MlpSpec};
use crate::error::Result;

/// Relative error with a small floor so exact zeros compare cleanly.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Largest relative error between analytic and central-difference gradients
/// of `<weights, f(x)>`, over all parameters and inputs.
pub fn max_gradient_error(
    spec: &MlpSpec,
    params: &[f64],
    input: &[f64],
    weights: &[f64],
    h: f64,
) -> Result<f64> {
    let objective = |p: &[f64], x: &[f64]| -> Result<f64> {
        let (out, _) = forward(spec, p, x)?;
        Ok(out.iter().zip(weights).map(|(o, w)| o * w).sum())
    };
    let (_, cache) = forward(spec, params, input)?;
    let (dx, dp) = backward(spec, params, &cache, weights)?;

    let mut worst = 0.0f64;
    let mut p = params.to_vec();
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = objective(&p, input)?;
        p[i] = orig - h;
        let down = objective(&p, input)?;
        p[i] = orig;
        worst = worst.max(relative_error(dp[i], (up - down) / (2.0 * h)));
    }
    let mut x = input.to_vec();
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let up = objective(params, &x)?;
        x[i] = orig - h;
        let down = objective(params, &x)?;
        x[i] = orig;
        worst = worst.max(relative_error(dx[i], (up - down) / (2.0 * h)));
    }
    Ok(worst)
}

/// Draws a small random network, input and output weighting and returns the
/// worst gradient error.
pub fn random_trial<R: Rng + ?Sized>(
    hidden: Activation,
    output: Activation,
    rng: &mut R,
) -> Result<f64> {
    let depth = rng.random_range(2..=4);
    let widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=6)).collect();
    let spec = MlpSpec::new(widths, hidden, output)?;
    let mut params = init_params(&spec, rng);
    for layer in spec.layers() {
        for b in &mut params[layer.bias_offset..layer.end()] {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    let input: Vec<f64> = (0..spec.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let weights: Vec<f64> = (0..spec.output_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    max_gradient_error(&spec, &params, &input, &weights, 1e-5)
}
