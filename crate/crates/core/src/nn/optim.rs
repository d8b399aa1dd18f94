use serde::{Deserialize, Serialize};

use super::ParamVector;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Optimizer state for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub kind: OptimizerKind,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    timestep: u64,
}

impl OptState {
    pub fn new(kind: OptimizerKind, step_size: f64, len: usize) -> Self {
        let moments = match kind {
            OptimizerKind::Sgd => 0,
            OptimizerKind::Adam => len,
        };
        OptState {
            kind,
            step_size,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: vec![0.0; moments],
            second_moment: vec![0.0; moments],
            timestep: 0,
        }
    }

    pub fn sgd(step_size: f64) -> Self {
        Self::new(OptimizerKind::Sgd, step_size, 0)
    }

    pub fn adam(step_size: f64, len: usize) -> Self {
        Self::new(OptimizerKind::Adam, step_size, len)
    }

    pub fn timestep(&self) -> u64 {
        self.timestep
    }
}

/// Applies one descent step `params -= step * direction(grads)` in place.
pub fn opt_step(params: &mut ParamVector, grads: &[f64], opt: &mut OptState) -> Result<()> {
    check_len("optimizer gradient", params.len(), grads.len())?;
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("gradient entry {i} ({})", grads[i]),
        });
    }
    match opt.kind {
        OptimizerKind::Sgd => {
            for (p, g) in params.iter_mut().zip(grads) {
                *p -= opt.step_size * g;
            }
        }
        OptimizerKind::Adam => {
            check_len("adam moments", params.len(), opt.first_moment.len())?;
            opt.timestep += 1;
            let t = opt.timestep as i32;
            let (b1, b2) = (opt.beta1, opt.beta2);
            let c1 = 1.0 - b1.powi(t);
            let c2 = 1.0 - b2.powi(t);
            for (((p, g), m), v) in params
                .iter_mut()
                .zip(grads)
                .zip(opt.first_moment.iter_mut())
                .zip(opt.second_moment.iter_mut())
            {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= opt.step_size * m_hat / (v_hat.sqrt() + opt.epsilon);
            }
        }
    }
    Ok(())
}

/// Polyak averaging: `tau * source + (1 - tau) * target`.
pub fn soft_update(target: &[f64], source: &[f64], tau: f64) -> Result<ParamVector> {
    let mut out = ParamVector::from_vec(target.to_vec());
    soft_update_in_place(&mut out, source, tau)?;
    Ok(out)
}

pub fn soft_update_in_place(target: &mut [f64], source: &[f64], tau: f64) -> Result<()> {
    check_len("soft update", target.len(), source.len())?;
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::config("soft_tau", format!("must lie in [0, 1], got {tau}")));
    }
    let keep = 1.0 - tau;
    for (t, s) in target.iter_mut().zip(source) {
        *t = tau * s + keep * *t;
    }
    Ok(())
}
