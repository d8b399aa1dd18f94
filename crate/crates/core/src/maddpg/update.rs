use rand::Rng;
use rand_distr::StandardNormal;

use super::{AgentNets, Batch, TrainConfig, ACTION_DIM};
use crate::env::ActionCmd;
use crate::error::{check_len, Error, Result};
use crate::nn::{self, forward, forward_batch, opt_step, soft_update_in_place, ParamVector};

/// Deterministic policy output plus optional Gaussian noise, projected onto
/// the unit disc. Returned in unit coordinates.
pub fn explore<R: Rng + ?Sized>(
    agent: &AgentNets,
    obs: &[f64],
    noise_std: f64,
    rng: &mut R,
) -> Result<[f64; ACTION_DIM]> {
    let (out, _) = forward(&agent.actor_spec, &agent.actor_eval, obs)?;
    let mut a = [out[0], out[1]];
    if noise_std > 0.0 {
        for v in &mut a {
            *v += noise_std * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let norm = (a[0] * a[0] + a[1] * a[1]).sqrt();
    if norm > 1.0 {
        a = [a[0] / norm, a[1] / norm];
    }
    Ok(a)
}

/// [`explore`] scaled to a displacement command of magnitude at most `bound`.
pub fn select_action<R: Rng + ?Sized>(
    agent: &AgentNets,
    obs: &[f64],
    noise_std: f64,
    bound: f64,
    rng: &mut R,
) -> Result<ActionCmd> {
    let a = explore(agent, obs, noise_std, rng)?;
    Ok(ActionCmd {
        dx: a[0] * bound,
        dy: a[1] * bound,
    }
    .clipped(bound))
}

/// Rows of agent `j`'s observation slice out of batched joint states.
fn agent_obs(states: &[f64], state_dim: usize, obs_dim: usize, j: usize) -> Vec<f64> {
    states
        .chunks_exact(state_dim)
        .flat_map(|row| &row[j * obs_dim..(j + 1) * obs_dim])
        .copied()
        .collect()
}

fn critic_inputs(states: &[f64], state_dim: usize, actions: &[f64], action_dim: usize) -> Vec<f64> {
    states
        .chunks_exact(state_dim)
        .zip(actions.chunks_exact(action_dim))
        .flat_map(|(s, a)| s.iter().chain(a))
        .copied()
        .collect()
}

fn check_batch(batch: &Batch, agents: &[AgentNets], n: usize) -> Result<()> {
    if batch.len == 0 {
        return Err(Error::Empty("batch"));
    }
    check_len("agent index", agents.len(), agents.len().max(n + 1))?;
    check_len("batch agents", agents.len(), batch.n_agents)?;
    let obs_dim = agents[n].obs_dim();
    check_len("batch state", agents.len() * obs_dim, batch.state_dim)?;
    check_len("batch actions", agents.len() * ACTION_DIM, batch.action_dim)?;
    Ok(())
}

/// Bootstrapped critic targets for agent `n`:
/// `r_n + discount * Q'_n(s', a'_1..a'_N)`, where each `a'_j` comes from agent
/// `j`'s target actor on its own slice of `s'`. The bootstrap term is dropped
/// on terminal transitions.
pub fn target_q(batch: &Batch, agents: &[AgentNets], n: usize, cfg: &TrainConfig) -> Result<Vec<f64>> {
    check_batch(batch, agents, n)?;
    let k = batch.len;
    let obs_dim = agents[n].obs_dim();
    let mut next_actions = vec![0.0; k * batch.action_dim];
    for (j, agent) in agents.iter().enumerate() {
        let obs = agent_obs(&batch.next_states, batch.state_dim, obs_dim, j);
        let out = forward_batch(&agent.actor_spec, &agent.actor_target, &obs, k)?.into_output();
        for (row, a) in next_actions
            .chunks_exact_mut(batch.action_dim)
            .zip(out.chunks_exact(ACTION_DIM))
        {
            row[j * ACTION_DIM..(j + 1) * ACTION_DIM].copy_from_slice(a);
        }
    }
    let x = critic_inputs(&batch.next_states, batch.state_dim, &next_actions, batch.action_dim);
    let q_next = forward_batch(&agents[n].critic_spec, &agents[n].critic_target, &x, k)?.into_output();
    Ok((0..k)
        .map(|i| {
            let r = batch.reward(i, n);
            if batch.dones[i] {
                r
            } else {
                r + cfg.discount * q_next[i]
            }
        })
        .collect())
}

/// Mean squared TD error of agent `n`'s critic and its parameter gradient.
pub fn critic_gradient(
    batch: &Batch,
    agents: &[AgentNets],
    n: usize,
    cfg: &TrainConfig,
) -> Result<(f64, ParamVector)> {
    let y = target_q(batch, agents, n, cfg)?;
    let agent = &agents[n];
    let k = batch.len;
    let x = critic_inputs(&batch.states, batch.state_dim, &batch.actions, batch.action_dim);
    let cache = forward_batch(&agent.critic_spec, &agent.critic_eval, &x, k)?;
    let q = cache.output();
    let loss = q.iter().zip(&y).map(|(q, y)| (y - q) * (y - q)).sum::<f64>() / k as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            context: format!("critic loss of agent {n} ({loss})"),
        });
    }
    let out_grad: Vec<f64> = q.iter().zip(&y).map(|(q, y)| 2.0 * (q - y) / k as f64).collect();
    let (_, grads) = nn::backward_batch(&agent.critic_spec, &agent.critic_eval, &cache, &out_grad, false)?;
    Ok((loss, grads))
}

pub fn critic_loss(batch: &Batch, agents: &[AgentNets], n: usize, cfg: &TrainConfig) -> Result<f64> {
    critic_gradient(batch, agents, n, cfg).map(|(loss, _)| loss)
}

/// One descent step on agent `n`'s critic. Returns the loss before the step.
pub fn critic_update(batch: &Batch, agents: &mut [AgentNets], n: usize, cfg: &TrainConfig) -> Result<f64> {
    let (loss, grads) = critic_gradient(batch, agents, n, cfg)?;
    let agent = &mut agents[n];
    opt_step(&mut agent.critic_eval, &grads, &mut agent.critic_opt)?;
    Ok(loss)
}

/// Policy objective `J = mean_i Q_n(s_i, a_1..pi_n(o_i,n)..a_N)` and its
/// gradient with respect to agent `n`'s actor. Peer actions come from the
/// batch.
pub fn actor_gradient(
    batch: &Batch,
    agents: &[AgentNets],
    n: usize,
    _cfg: &TrainConfig,
) -> Result<(f64, ParamVector)> {
    check_batch(batch, agents, n)?;
    let agent = &agents[n];
    let k = batch.len;
    let obs = agent_obs(&batch.states, batch.state_dim, agent.obs_dim(), n);
    let actor_cache = forward_batch(&agent.actor_spec, &agent.actor_eval, &obs, k)?;
    let mut actions = batch.actions.clone();
    let slot = n * ACTION_DIM..(n + 1) * ACTION_DIM;
    for (row, a) in actions
        .chunks_exact_mut(batch.action_dim)
        .zip(actor_cache.output().chunks_exact(ACTION_DIM))
    {
        row[slot.clone()].copy_from_slice(a);
    }
    let x = critic_inputs(&batch.states, batch.state_dim, &actions, batch.action_dim);
    let critic_cache = forward_batch(&agent.critic_spec, &agent.critic_eval, &x, k)?;
    let objective = critic_cache.output().iter().sum::<f64>() / k as f64;
    if !objective.is_finite() {
        return Err(Error::NonFinite {
            context: format!("actor objective of agent {n} ({objective})"),
        });
    }
    let out_grad = vec![1.0 / k as f64; k];
    let dx = nn::input_grad_batch(&agent.critic_spec, &agent.critic_eval, &critic_cache, &out_grad)?;
    let offset = batch.state_dim + n * ACTION_DIM;
    let action_grad: Vec<f64> = dx
        .chunks_exact(batch.state_dim + batch.action_dim)
        .flat_map(|row| &row[offset..offset + ACTION_DIM])
        .copied()
        .collect();
    let (_, grads) = nn::backward_batch(&agent.actor_spec, &agent.actor_eval, &actor_cache, &action_grad, false)?;
    Ok((objective, grads))
}

pub fn actor_objective(batch: &Batch, agents: &[AgentNets], n: usize, cfg: &TrainConfig) -> Result<f64> {
    actor_gradient(batch, agents, n, cfg).map(|(j, _)| j)
}

/// One ascent step on agent `n`'s actor. Returns the objective before the
/// step.
pub fn actor_update(batch: &Batch, agents: &mut [AgentNets], n: usize, cfg: &TrainConfig) -> Result<f64> {
    let (objective, mut grads) = actor_gradient(batch, agents, n, cfg)?;
    for g in grads.iter_mut() {
        *g = -*g;
    }
    let agent = &mut agents[n];
    opt_step(&mut agent.actor_eval, &grads, &mut agent.actor_opt)?;
    Ok(objective)
}

/// Soft-updates both target networks toward the evaluation networks.
pub fn update_targets(agent: &mut AgentNets, tau: f64) -> Result<()> {
    soft_update_in_place(&mut agent.actor_target, &agent.actor_eval, tau)?;
    soft_update_in_place(&mut agent.critic_target, &agent.critic_eval, tau)
}
