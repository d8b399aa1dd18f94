//! Federated aggregation and personalization of agent evaluation networks.
//!
//! A round collects every agent's actor and critic evaluation parameters,
//! forms their weighted average, and hands each agent back either the global
//! model (`f-maddpg`) or a convex mix of its own model and the global one
//! (`pf-maddpg`). Target networks then track the mixed parameters.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::maddpg::AgentNets;
use crate::nn::{soft_update_in_place, ParamVector};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FederationMode {
    /// Independent local training, no aggregation.
    Maddpg,
    /// Every agent adopts the global model.
    FMaddpg,
    /// Every agent adopts `alpha * local + (1 - alpha) * global`.
    PfMaddpg,
}

impl fmt::Display for FederationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FederationMode::Maddpg => "maddpg",
            FederationMode::FMaddpg => "f-maddpg",
            FederationMode::PfMaddpg => "pf-maddpg",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CadenceUnit {
    Episode,
    Slot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AggConfig {
    pub mode: FederationMode,
    /// Per-agent aggregation weights; uniform when absent.
    pub weights: Option<Vec<f64>>,
    /// Weight of the local model in the personalized mix.
    pub mix_weight: f64,
    /// Whether evaluation networks take the personalized parameters, or only
    /// the target networks see them.
    pub adopt_into_eval: bool,
    pub cadence_unit: CadenceUnit,
    /// Rounds happen every `cadence` units.
    pub cadence: usize,
}

impl Default for AggConfig {
    fn default() -> Self {
        AggConfig {
            mode: FederationMode::PfMaddpg,
            weights: None,
            mix_weight: 0.7,
            adopt_into_eval: true,
            cadence_unit: CadenceUnit::Episode,
            cadence: 1,
        }
    }
}

impl AggConfig {
    pub fn validate(&self, n_agents: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mix_weight) {
            return Err(Error::config("federation.mix_weight", "must lie in [0, 1]"));
        }
        if self.cadence == 0 {
            return Err(Error::config("federation.cadence", "must be at least 1"));
        }
        if let Some(w) = &self.weights {
            if w.len() != n_agents {
                return Err(Error::config(
                    "federation.weights",
                    format!("expected {n_agents} weights, got {}", w.len()),
                ));
            }
            validate_weights(w).map_err(|e| Error::config("federation.weights", e.to_string()))?;
        }
        Ok(())
    }

    pub fn resolved_weights(&self, n_agents: usize) -> Vec<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| vec![1.0 / n_agents as f64; n_agents])
    }
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::config("weights", format!("weight {w} is negative or non-finite")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::WeightSum { sum });
    }
    Ok(())
}

/// Evaluation-network parameters exchanged in a round. `agent_id` is `None`
/// for the global model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub agent_id: Option<usize>,
    pub actor_eval: ParamVector,
    pub critic_eval: ParamVector,
}

impl ModelBundle {
    pub fn from_agent(agent: &AgentNets, id: usize) -> Self {
        ModelBundle {
            agent_id: Some(id),
            actor_eval: agent.actor_eval.clone(),
            critic_eval: agent.critic_eval.clone(),
        }
    }

    /// Euclidean distance over the concatenated actor and critic parameters.
    pub fn distance(&self, other: &ModelBundle) -> f64 {
        let a = self.actor_eval.l2_distance(&other.actor_eval);
        let c = self.critic_eval.l2_distance(&other.critic_eval);
        (a * a + c * c).sqrt()
    }
}

/// Weighted element-wise average of the bundles, accumulated in bundle order.
pub fn aggregate(bundles: &[ModelBundle], weights: &[f64]) -> Result<ModelBundle> {
    let first = bundles.first().ok_or(Error::Empty("bundle list"))?;
    check_len("aggregation weights", bundles.len(), weights.len())?;
    validate_weights(weights)?;
    for b in bundles {
        check_len("actor parameters", first.actor_eval.len(), b.actor_eval.len())?;
        check_len("critic parameters", first.critic_eval.len(), b.critic_eval.len())?;
    }
    let weighted_sum = |pick: fn(&ModelBundle) -> &ParamVector| {
        let mut acc = ParamVector::zeros(pick(first).len());
        for (b, &w) in bundles.iter().zip(weights) {
            for (a, v) in acc.iter_mut().zip(pick(b).iter()) {
                *a += w * v;
            }
        }
        acc
    };
    Ok(ModelBundle {
        agent_id: None,
        actor_eval: weighted_sum(|b| &b.actor_eval),
        critic_eval: weighted_sum(|b| &b.critic_eval),
    })
}

fn mix(local: &[f64], global: &[f64], alpha: f64) -> ParamVector {
    let keep = 1.0 - alpha;
    local.iter().zip(global).map(|(l, g)| alpha * l + keep * g).collect::<Vec<_>>().into()
}

/// `alpha * local + (1 - alpha) * global` for both networks.
pub fn personalize(local: &ModelBundle, global: &ModelBundle, alpha: f64) -> Result<ModelBundle> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config("mix_weight", format!("must lie in [0, 1], got {alpha}")));
    }
    check_len("actor parameters", local.actor_eval.len(), global.actor_eval.len())?;
    check_len("critic parameters", local.critic_eval.len(), global.critic_eval.len())?;
    Ok(ModelBundle {
        agent_id: local.agent_id,
        actor_eval: mix(&local.actor_eval, &global.actor_eval, alpha),
        critic_eval: mix(&local.critic_eval, &global.critic_eval, alpha),
    })
}

/// Diagnostics of one federation round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    pub mode: FederationMode,
    /// Local mix weight applied, if any.
    pub alpha: Option<f64>,
    /// Distance of each agent's pre-round model to the global model.
    pub distances: Vec<f64>,
}

/// Runs one aggregation round over quiescent agents and soft-updates their
/// targets from the resulting parameters.
pub fn run_round(agents: &mut [AgentNets], cfg: &AggConfig, tau: f64, round: usize) -> Result<RoundReport> {
    if cfg.mode == FederationMode::Maddpg {
        return Ok(RoundReport {
            round,
            mode: cfg.mode,
            alpha: None,
            distances: Vec::new(),
        });
    }
    let bundles: Vec<ModelBundle> = agents
        .iter()
        .enumerate()
        .map(|(i, a)| ModelBundle::from_agent(a, i))
        .collect();
    let global = aggregate(&bundles, &cfg.resolved_weights(agents.len()))?;
    let distances = bundles.iter().map(|b| b.distance(&global)).collect();

    let alpha = match cfg.mode {
        FederationMode::FMaddpg => {
            for agent in agents.iter_mut() {
                agent.actor_eval = global.actor_eval.clone();
                agent.critic_eval = global.critic_eval.clone();
                soft_update_in_place(&mut agent.actor_target, &global.actor_eval, tau)?;
                soft_update_in_place(&mut agent.critic_target, &global.critic_eval, tau)?;
            }
            0.0
        }
        _ => {
            for (agent, local) in agents.iter_mut().zip(&bundles) {
                let mixed = personalize(local, &global, cfg.mix_weight)?;
                soft_update_in_place(&mut agent.actor_target, &mixed.actor_eval, tau)?;
                soft_update_in_place(&mut agent.critic_target, &mixed.critic_eval, tau)?;
                if cfg.adopt_into_eval {
                    agent.actor_eval = mixed.actor_eval;
                    agent.critic_eval = mixed.critic_eval;
                }
            }
            cfg.mix_weight
        }
    };
    Ok(RoundReport {
        round,
        mode: cfg.mode,
        alpha: Some(alpha),
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle(id: usize, actor: &[f64], critic: &[f64]) -> ModelBundle {
        ModelBundle {
            agent_id: Some(id),
            actor_eval: actor.to_vec().into(),
            critic_eval: critic.to_vec().into(),
        }
    }

    #[test]
    fn two_way_mean() {
        let b = [bundle(0, &[0.0, 2.0], &[0.0]), bundle(1, &[2.0, 4.0], &[1.0])];
        let g = aggregate(&b, &[0.5, 0.5]).unwrap();
        assert_eq!(&g.actor_eval[..], &[1.0, 3.0]);
        assert_eq!(&g.critic_eval[..], &[0.5]);
        assert_eq!(g.agent_id, None);
    }

    #[test]
    fn degenerate_weights_copy() {
        let b = [bundle(0, &[0.3, -2.0], &[7.0]), bundle(1, &[2.0, 4.0], &[1.0])];
        let g = aggregate(&b, &[1.0, 0.0]).unwrap();
        assert_eq!(g.actor_eval, b[0].actor_eval);
        assert_eq!(g.critic_eval, b[0].critic_eval);
    }

    #[test]
    fn aggregate_errors() {
        let b = [bundle(0, &[0.0, 2.0], &[0.0]), bundle(1, &[2.0], &[1.0])];
        assert!(matches!(aggregate(&b, &[0.5, 0.5]), Err(Error::ShapeMismatch { .. })));
        let b = [bundle(0, &[0.0], &[0.0]), bundle(1, &[2.0], &[1.0])];
        assert!(matches!(aggregate(&b, &[0.5, 0.6]), Err(Error::WeightSum { .. })));
        assert!(aggregate(&b, &[1.5, -0.5]).is_err());
        assert!(aggregate(&[], &[]).is_err());
    }

    #[test]
    fn personalize_endpoints() {
        let local = bundle(0, &[1.0; 4], &[1.0]);
        let global = bundle(1, &[0.0; 4], &[0.0]);
        assert_eq!(personalize(&local, &global, 1.0).unwrap().actor_eval, local.actor_eval);
        assert_eq!(personalize(&local, &global, 0.0).unwrap().actor_eval, global.actor_eval);
        let p = personalize(&local, &global, 0.7).unwrap();
        assert!(p.actor_eval.iter().all(|&v| (v - 0.7).abs() < 1e-15));
        assert!(personalize(&local, &global, 1.2).is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = AggConfig {
            weights: Some(vec![0.5, 0.4]),
            ..AggConfig::default()
        };
        assert!(cfg.validate(2).is_err());
        assert!(cfg.validate(3).is_err());
        assert!(AggConfig::default().validate(4).is_ok());
        assert_eq!(AggConfig::default().resolved_weights(4), vec![0.25; 4]);
    }
}
