use std::f64::consts::TAU;

use rand::Rng;

use super::channel::{channel_gain, compute_energy, flight_energy, horizontal_distance, upload_rate};
use super::{
    ActionCmd, EnvState, Observation, Position3, StepOutcome, Violation, ViolationKind, WorldConfig,
};
use crate::error::{check_len, Error, Result};

/// User-to-UAV matching for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Serving UAV of each user, `None` when every reachable UAV was full.
    pub uav_of: Vec<Option<usize>>,
    /// Users served by each UAV, in the order they were matched.
    pub served: Vec<Vec<usize>>,
}

impl Assignment {
    /// Equal share of the UAV bandwidth for each of its users.
    pub fn bandwidth_share(&self, uav: usize, cfg: &WorldConfig) -> f64 {
        match self.served[uav].len() {
            0 => 0.0,
            c => cfg.total_bandwidth / c as f64,
        }
    }
}

/// Greedy nearest-UAV matching with per-UAV capacity.
///
/// All (user, UAV) pairs are visited by ascending distance, ties broken by
/// user index then UAV index. A user joins the first UAV in that order that
/// still has room.
pub fn assign_users(state: &EnvState, cfg: &WorldConfig) -> Assignment {
    let n_uavs = state.uav_positions.len();
    let n_users = state.user_positions.len();
    let mut pairs = Vec::with_capacity(n_uavs * n_users);
    for (m, user) in state.user_positions.iter().enumerate() {
        for (n, uav) in state.uav_positions.iter().enumerate() {
            pairs.push((horizontal_distance(user, uav), m, n));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uav_of = vec![None; n_users];
    let mut served = vec![Vec::new(); n_uavs];
    for (_, m, n) in pairs {
        if uav_of[m].is_none() && served[n].len() < cfg.max_served_per_uav {
            uav_of[m] = Some(n);
            served[n].push(m);
        }
    }
    Assignment { uav_of, served }
}

/// Sum upload rate collected by UAV `n`.
pub fn uav_sum_rate(state: &EnvState, assignment: &Assignment, cfg: &WorldConfig, n: usize) -> f64 {
    let share = assignment.bandwidth_share(n, cfg);
    let uav = &state.uav_positions[n];
    assignment.served[n]
        .iter()
        .map(|&m| {
            let d = horizontal_distance(&state.user_positions[m], uav);
            upload_rate(share, channel_gain(d, cfg), cfg)
        })
        .sum()
}

/// Shared part of the reward: mean over UAVs of normalized rate minus
/// normalized energy.
pub fn team_term(rates: &[f64], flight: &[f64], compute: &[f64], cfg: &WorldConfig) -> f64 {
    let r_max = cfg.max_rate();
    let e_max = cfg.max_slot_energy();
    let total: f64 = rates
        .iter()
        .zip(flight)
        .zip(compute)
        .map(|((r, ef), ec)| r / r_max - (ef + ec) / e_max)
        .sum();
    total / rates.len() as f64
}

/// Per-agent reward: the team term minus the penalty for each violation the
/// agent is named in.
pub fn reward(
    rates: &[f64],
    flight: &[f64],
    compute: &[f64],
    violations: &[Violation],
    cfg: &WorldConfig,
) -> Vec<f64> {
    let shared = team_term(rates, flight, compute, cfg);
    let mut out = vec![shared; rates.len()];
    for v in violations {
        out[v.agent] -= cfg.violation_penalty;
    }
    out
}

/// UAV `n` starts at corner `n mod 4`, going counter-clockwise from the
/// origin.
fn corner(n: usize, cfg: &WorldConfig) -> Position3 {
    let l = cfg.area_side;
    let (x, y) = match n % 4 {
        0 => (0.0, 0.0),
        1 => (l, 0.0),
        2 => (l, l),
        _ => (0.0, l),
    };
    Position3::new(x, y, cfg.altitude)
}

pub fn reset<R: Rng + ?Sized>(cfg: &WorldConfig, rng: &mut R) -> Result<EnvState> {
    let uav_positions: Vec<_> = (0..cfg.n_uavs).map(|n| corner(n, cfg)).collect();
    for (n, p) in uav_positions.iter().enumerate() {
        for o in &cfg.obstacles {
            if horizontal_distance(p, &o.center()) < cfg.obstacle_safe_distance {
                return Err(Error::config(
                    "world.obstacles",
                    format!("start corner of UAV {n} is within the safe distance of an obstacle"),
                ));
            }
        }
    }
    let l = cfg.area_side;
    let user_positions = (0..cfg.n_users)
        .map(|_| {
            let x = rng.random::<f64>() * l;
            let y = rng.random::<f64>() * l;
            Position3::new(x, y, 0.0)
        })
        .collect();
    Ok(EnvState {
        uav_positions,
        user_positions,
        slot: 0,
    })
}

pub fn observe(state: &EnvState, n: usize) -> Observation {
    Observation {
        own_position: state.uav_positions[n],
        other_uav_positions: state
            .uav_positions
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != n)
            .map(|(_, p)| *p)
            .collect(),
        user_positions: state.user_positions.clone(),
    }
}

fn clamp_into(v: f64, hi: f64) -> (f64, bool) {
    if v < 0.0 {
        (0.0, true)
    } else if v > hi {
        (hi, true)
    } else {
        (v, false)
    }
}

/// Advances the world by one slot.
///
/// Boundary excursions are clamped and penalized; separation and obstacle
/// constraints are penalty-only, so positions stand. Collisions are recorded
/// once for each UAV of the offending pair, obstacle violations once per
/// (UAV, obstacle) pair.
pub fn step<R: Rng + ?Sized>(
    state: &EnvState,
    actions: &[ActionCmd],
    cfg: &WorldConfig,
    rng: &mut R,
) -> Result<StepOutcome> {
    check_len("step actions", state.uav_positions.len(), actions.len())?;
    if state.slot >= cfg.slot_count {
        return Err(Error::EpisodeDone { slot: state.slot });
    }
    let bound = cfg.action_bound();
    let l = cfg.area_side;

    let mut violations = Vec::new();
    let mut uav_positions = Vec::with_capacity(actions.len());
    let mut flight = Vec::with_capacity(actions.len());
    for (n, (p, a)) in state.uav_positions.iter().zip(actions).enumerate() {
        let a = a.clipped(bound);
        let (x, cx) = clamp_into(p.x + a.dx, l);
        let (y, cy) = clamp_into(p.y + a.dy, l);
        if cx || cy {
            violations.push(Violation {
                agent: n,
                kind: ViolationKind::Boundary,
            });
        }
        uav_positions.push(Position3::new(x, y, cfg.altitude));
        flight.push(flight_energy(a.magnitude() / cfg.slot_duration, cfg));
    }

    for i in 0..uav_positions.len() {
        for j in i + 1..uav_positions.len() {
            if uav_positions[i].distance(&uav_positions[j]) < cfg.min_uav_separation {
                for agent in [i, j] {
                    violations.push(Violation {
                        agent,
                        kind: ViolationKind::UavCollision,
                    });
                }
            }
        }
    }
    for (n, p) in uav_positions.iter().enumerate() {
        for o in &cfg.obstacles {
            if horizontal_distance(p, &o.center()) < cfg.obstacle_safe_distance {
                violations.push(Violation {
                    agent: n,
                    kind: ViolationKind::Obstacle,
                });
            }
        }
    }

    let user_positions = state
        .user_positions
        .iter()
        .map(|u| {
            let heading = rng.random::<f64>() * TAU;
            let dist = rng.random::<f64>() * cfg.user_max_speed * cfg.slot_duration;
            let (x, _) = clamp_into(u.x + dist * heading.cos(), l);
            let (y, _) = clamp_into(u.y + dist * heading.sin(), l);
            Position3::new(x, y, 0.0)
        })
        .collect();

    let next_state = EnvState {
        uav_positions,
        user_positions,
        slot: state.slot + 1,
    };
    let assignment = assign_users(&next_state, cfg);
    let rates: Vec<f64> = (0..actions.len())
        .map(|n| uav_sum_rate(&next_state, &assignment, cfg, n))
        .collect();
    let compute: Vec<f64> = rates.iter().map(|&r| compute_energy(r, cfg)).collect();
    let rewards = reward(&rates, &flight, &compute, &violations, cfg);
    let done = next_state.slot == cfg.slot_count;
    Ok(StepOutcome {
        next_state,
        rewards,
        per_uav_rate: rates,
        per_uav_flight_energy: flight,
        per_uav_compute_energy: compute,
        violations,
        done,
    })
}

/// Mean per-slot reward over an episode.
pub fn episode_return(rewards: &[f64]) -> Result<f64> {
    if rewards.is_empty() {
        return Err(Error::Empty("reward sequence"));
    }
    Ok(rewards.iter().sum::<f64>() / rewards.len() as f64)
}
