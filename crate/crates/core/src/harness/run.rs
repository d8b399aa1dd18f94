use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::metrics::{AgentEpisode, EpisodeRow, MetricsLog};
use crate::env::{self, ActionCmd, EnvState, ViolationKind, WorldConfig};
use crate::error::{Error, Result};
use crate::federation::{run_round, CadenceUnit, FederationMode, RoundReport};
use crate::maddpg::{self, actor_update, critic_update, AgentNets, Batch, ReplayBuffer, Transition};
use crate::nn::Checkpoint;

const STREAM_ENV: u64 = 0;
const STREAM_INIT: u64 = 1;
const STREAM_EXPLORE: u64 = 2;
const STREAM_REPLAY: u64 = 3;

/// A federation round together with where in the run it happened.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub episode: usize,
    pub slot: usize,
    pub report: RoundReport,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: MetricsLog,
    pub rounds: Vec<RoundRecord>,
    /// `(episodes completed, networks)` for every saved checkpoint.
    pub checkpoints: Vec<(usize, Checkpoint)>,
    /// Slots in which agents performed gradient updates.
    pub learning_steps: usize,
    /// Global slot index (from zero) of the first gradient update.
    pub first_learning_slot: Option<usize>,
    pub agents: Vec<AgentNets>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Concatenated per-agent observation features of `state`.
pub fn joint_features(state: &EnvState, cfg: &WorldConfig) -> Vec<Vec<f64>> {
    (0..cfg.n_uavs)
        .map(|n| env::observe(state, n).features(cfg.area_side))
        .collect()
}

fn at(episode: usize, slot: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite { context } => Error::NonFinite {
            context: format!("episode {episode}, slot {slot}: {context}"),
        },
        other => other,
    }
}

pub fn checkpoint_of(agents: &[AgentNets]) -> Checkpoint {
    let mut ckpt = Checkpoint::default();
    for (i, a) in agents.iter().enumerate() {
        a.write_checkpoint(&format!("agent{i}"), &mut ckpt);
    }
    ckpt
}

/// Runs the full training loop: per episode reset, per slot act, step,
/// store, learn, then either a federation round or a target update.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let world = &cfg.world;
    let train = &cfg.train;
    let n = world.n_uavs;
    let bound = world.action_bound();

    let mut env_rng = stream(cfg.seed, STREAM_ENV);
    let mut init_rng = stream(cfg.seed, STREAM_INIT);
    let mut explore_rng = stream(cfg.seed, STREAM_EXPLORE);
    let mut replay_rng = stream(cfg.seed, STREAM_REPLAY);

    let mut agents = (0..n)
        .map(|_| AgentNets::new(&cfg.network, world.obs_dim(), n, &mut init_rng))
        .collect::<Result<Vec<_>>>()?;
    let mut buffers: Vec<ReplayBuffer> = (0..n).map(|_| ReplayBuffer::new(train.buffer_capacity)).collect();

    let started = Instant::now();
    let mut out = RunOutput {
        metrics: MetricsLog::default(),
        rounds: Vec::new(),
        checkpoints: Vec::new(),
        learning_steps: 0,
        first_learning_slot: None,
        agents: Vec::new(),
    };
    let mut global_slot = 0usize;
    let mut noise = train.exploration_noise_std;

    for episode in 0..cfg.episodes {
        let mut state = env::reset(world, &mut env_rng)?;
        let mut features = joint_features(&state, world);
        let mut stats = vec![
            AgentEpisode {
                episode_return: 0.0,
                sum_rate_mean_bps: 0.0,
                flight_energy_j: 0.0,
                compute_energy_j: 0.0,
                violations_boundary: 0,
                violations_collision: 0,
                violations_obstacle: 0,
            };
            n
        ];
        let mut rewards: Vec<Vec<f64>> = vec![Vec::with_capacity(world.slot_count); n];

        for slot in 0..world.slot_count {
            let ctx = at(episode, slot);
            let mut unit_actions = Vec::with_capacity(n * maddpg::ACTION_DIM);
            let mut commands = Vec::with_capacity(n);
            for (agent, obs) in agents.iter().zip(&features) {
                let a = maddpg::explore(agent, obs, noise, &mut explore_rng).map_err(&ctx)?;
                unit_actions.extend_from_slice(&a);
                commands.push(ActionCmd { dx: a[0] * bound, dy: a[1] * bound }.clipped(bound));
            }
            let outcome = env::step(&state, &commands, world, &mut env_rng)?;
            if let Some(r) = outcome.rewards.iter().find(|r| !r.is_finite()) {
                return Err(ctx(Error::NonFinite { context: format!("reward {r}") }));
            }

            for (i, s) in stats.iter_mut().enumerate() {
                rewards[i].push(outcome.rewards[i]);
                s.sum_rate_mean_bps += outcome.per_uav_rate[i];
                s.flight_energy_j += outcome.per_uav_flight_energy[i];
                s.compute_energy_j += outcome.per_uav_compute_energy[i];
            }
            for v in &outcome.violations {
                let s = &mut stats[v.agent];
                match v.kind {
                    ViolationKind::Boundary => s.violations_boundary += 1,
                    ViolationKind::UavCollision => s.violations_collision += 1,
                    ViolationKind::Obstacle => s.violations_obstacle += 1,
                }
            }

            let next_features = joint_features(&outcome.next_state, world);
            let transition = Arc::new(Transition {
                state: features.concat(),
                actions: unit_actions,
                rewards: outcome.rewards.clone(),
                next_state: next_features.concat(),
                done: outcome.done,
            });
            for buf in &mut buffers {
                buf.push(Arc::clone(&transition));
            }

            let learn = buffers.iter().all(|b| b.len() >= train.min_buffer());
            if learn {
                for (i, buf) in buffers.iter().enumerate() {
                    let samples = buf.sample(train.batch_size, train.min_buffer(), &mut replay_rng)?;
                    let batch = Batch::from_transitions(&samples)?;
                    critic_update(&batch, &mut agents, i, train).map_err(&ctx)?;
                    actor_update(&batch, &mut agents, i, train).map_err(&ctx)?;
                }
                out.learning_steps += 1;
                out.first_learning_slot.get_or_insert(global_slot);

                let boundary = match cfg.federation.cadence_unit {
                    CadenceUnit::Slot => (global_slot + 1).is_multiple_of(cfg.federation.cadence),
                    CadenceUnit::Episode => outcome.done && (episode + 1).is_multiple_of(cfg.federation.cadence),
                };
                if boundary && cfg.federation.mode != FederationMode::Maddpg {
                    let report = run_round(&mut agents, &cfg.federation, train.soft_tau, out.rounds.len())?;
                    out.rounds.push(RoundRecord { episode, slot, report });
                } else {
                    for a in &mut agents {
                        maddpg::update_targets(a, train.soft_tau)?;
                    }
                }
                if agents.iter().any(|a| !(a.actor_eval.is_finite() && a.critic_eval.is_finite())) {
                    return Err(ctx(Error::NonFinite {
                        context: "network parameters".into(),
                    }));
                }
            }

            state = outcome.next_state;
            features = next_features;
            global_slot += 1;
        }

        for (s, r) in stats.iter_mut().zip(&rewards) {
            s.episode_return = env::episode_return(r)?;
            s.sum_rate_mean_bps /= world.slot_count as f64;
        }
        let team_return = stats.iter().map(|s| s.episode_return).sum::<f64>() / n as f64;
        out.metrics.push(EpisodeRow {
            episode,
            agents: stats,
            team_return,
            wallclock_s: cfg.report.record_wallclock.then(|| started.elapsed().as_secs_f64()),
        });

        let done = episode + 1;
        if done == cfg.episodes || (cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0) {
            out.checkpoints.push((done, checkpoint_of(&agents)));
        }
        noise *= train.noise_decay;
    }
    out.agents = agents;
    Ok(out)
}
