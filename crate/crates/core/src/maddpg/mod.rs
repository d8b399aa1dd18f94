//! Multi-agent deterministic policy gradient with centralized critics.
//!
//! Every agent owns an actor over its own observation and a critic over the
//! joint state and all agents' actions, each with a slowly tracking target
//! copy. Actions inside the networks are in unit coordinates: the actor's tanh
//! output is scaled by the per-slot displacement bound only when it is handed
//! to the world.

mod replay;
mod update;

pub use replay::{Batch, ReplayBuffer, Transition};
pub use update::{
    actor_gradient, actor_objective, actor_update, critic_gradient, critic_loss, critic_update,
    explore, select_action, target_q, update_targets,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{init_params, Activation, Checkpoint, MlpSpec, OptState, OptimizerKind, ParamVector};

/// Number of action coordinates per agent (planar displacement).
pub const ACTION_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub discount: f64,
    pub soft_tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gaussian exploration noise, as a fraction of the displacement bound.
    pub exploration_noise_std: f64,
    /// Multiplier applied to the noise scale after every episode.
    pub noise_decay: f64,
    pub warmup_transitions: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            discount: 0.95,
            soft_tau: 0.01,
            batch_size: 64,
            buffer_capacity: 100_000,
            exploration_noise_std: 0.3,
            noise_decay: 0.995,
            warmup_transitions: 1_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::config("train.discount", "must lie in [0, 1)"));
        }
        if !(self.soft_tau > 0.0 && self.soft_tau <= 1.0) {
            return Err(Error::config("train.soft_tau", "must lie in (0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be at least 1"));
        }
        if self.buffer_capacity == 0 {
            return Err(Error::config("train.buffer_capacity", "must be at least 1"));
        }
        if !(self.exploration_noise_std.is_finite() && self.exploration_noise_std >= 0.0) {
            return Err(Error::config("train.exploration_noise_std", "must be non-negative"));
        }
        if !(self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return Err(Error::config("train.noise_decay", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Smallest buffer size at which learning may start.
    pub fn min_buffer(&self) -> usize {
        self.batch_size.max(self.warmup_transitions)
    }
}

/// Architectures and optimizers of the actor and critic networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub optimizer: OptimizerKind,
    pub actor_step_size: f64,
    pub critic_step_size: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            actor_hidden: vec![64, 64],
            critic_hidden: vec![128, 64],
            hidden_activation: Activation::Relu,
            optimizer: OptimizerKind::Adam,
            actor_step_size: 1e-4,
            critic_step_size: 1e-3,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_activation == Activation::Identity {
            return Err(Error::config("network.hidden_activation", "must be relu or tanh"));
        }
        for (key, hidden) in [("network.actor_hidden", &self.actor_hidden), ("network.critic_hidden", &self.critic_hidden)] {
            if hidden.contains(&0) {
                return Err(Error::config(key, "every width must be at least 1"));
            }
        }
        for (key, v) in [("network.actor_step_size", self.actor_step_size), ("network.critic_step_size", self.critic_step_size)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        Ok(())
    }

    pub fn actor_spec(&self, obs_dim: usize) -> MlpSpec {
        let mut widths = vec![obs_dim];
        widths.extend(&self.actor_hidden);
        widths.push(ACTION_DIM);
        MlpSpec {
            layer_widths: widths,
            hidden_activation: self.hidden_activation,
            output_activation: Activation::Tanh,
        }
    }

    pub fn critic_spec(&self, obs_dim: usize, n_agents: usize) -> MlpSpec {
        let mut widths = vec![n_agents * (obs_dim + ACTION_DIM)];
        widths.extend(&self.critic_hidden);
        widths.push(1);
        MlpSpec {
            layer_widths: widths,
            hidden_activation: self.hidden_activation,
            output_activation: Activation::Identity,
        }
    }
}

/// One agent's networks and optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentNets {
    pub actor_spec: MlpSpec,
    pub critic_spec: MlpSpec,
    pub actor_eval: ParamVector,
    pub actor_target: ParamVector,
    pub critic_eval: ParamVector,
    pub critic_target: ParamVector,
    pub actor_opt: OptState,
    pub critic_opt: OptState,
}

impl AgentNets {
    /// Fresh networks with targets copied from the evaluation networks.
    pub fn new<R: Rng + ?Sized>(
        cfg: &NetworkConfig,
        obs_dim: usize,
        n_agents: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let actor_spec = cfg.actor_spec(obs_dim);
        let critic_spec = cfg.critic_spec(obs_dim, n_agents);
        actor_spec.validate()?;
        critic_spec.validate()?;
        let actor_eval = init_params(&actor_spec, rng);
        let critic_eval = init_params(&critic_spec, rng);
        Ok(Self::from_params(cfg.optimizer, cfg.actor_step_size, cfg.critic_step_size, actor_spec, critic_spec, actor_eval, critic_eval))
    }

    pub fn from_params(
        optimizer: OptimizerKind,
        actor_step_size: f64,
        critic_step_size: f64,
        actor_spec: MlpSpec,
        critic_spec: MlpSpec,
        actor_eval: ParamVector,
        critic_eval: ParamVector,
    ) -> Self {
        AgentNets {
            actor_opt: OptState::new(optimizer, actor_step_size, actor_eval.len()),
            critic_opt: OptState::new(optimizer, critic_step_size, critic_eval.len()),
            actor_target: actor_eval.clone(),
            critic_target: critic_eval.clone(),
            actor_spec,
            critic_spec,
            actor_eval,
            critic_eval,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor_spec.input_dim()
    }

    /// Adds the four networks to `ckpt` as `<prefix>/actor_eval` and so on.
    pub fn write_checkpoint(&self, prefix: &str, ckpt: &mut Checkpoint) {
        ckpt.push(format!("{prefix}/actor_eval"), &self.actor_spec, &self.actor_eval);
        ckpt.push(format!("{prefix}/actor_target"), &self.actor_spec, &self.actor_target);
        ckpt.push(format!("{prefix}/critic_eval"), &self.critic_spec, &self.critic_eval);
        ckpt.push(format!("{prefix}/critic_target"), &self.critic_spec, &self.critic_target);
    }

    /// Restores network parameters written by [`write_checkpoint`]. Optimizer
    /// state is reset.
    ///
    /// [`write_checkpoint`]: AgentNets::write_checkpoint
    pub fn from_checkpoint(
        ckpt: &Checkpoint,
        prefix: &str,
        optimizer: OptimizerKind,
        actor_step_size: f64,
        critic_step_size: f64,
    ) -> Result<Self> {
        let get = |role: &str| {
            let name = format!("{prefix}/{role}");
            ckpt.get(&name)
                .ok_or_else(|| Error::Checkpoint(format!("missing network `{name}`")))
        };
        let actor = get("actor_eval")?;
        let critic = get("critic_eval")?;
        let mut nets = Self::from_params(
            optimizer,
            actor_step_size,
            critic_step_size,
            actor.spec.clone(),
            critic.spec.clone(),
            actor.params.clone(),
            critic.params.clone(),
        );
        nets.actor_target = get("actor_target")?.params.clone();
        nets.critic_target = get("critic_target")?.params.clone();
        Ok(nets)
    }
}
