use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::run::checkpoint_of;
use crate::env::{self, ActionCmd, ViolationKind};
use crate::federation::{aggregate, personalize, ModelBundle};
use crate::maddpg::AgentNets;
use crate::nn::{forward, gradcheck, soft_update, Activation, Checkpoint};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn gradients(rng: &mut ChaCha8Rng) -> CheckResult {
    let pairs = [
        (Activation::Relu, Activation::Identity),
        (Activation::Relu, Activation::Tanh),
        (Activation::Tanh, Activation::Identity),
        (Activation::Tanh, Activation::Tanh),
    ];
    let mut worst = 0.0f64;
    for (h, o) in pairs {
        for _ in 0..10 {
            match gradcheck::random_trial(h, o, rng) {
                Ok(e) => worst = worst.max(e),
                Err(e) => return result("gradients", false, e.to_string()),
            }
        }
    }
    result("gradients", worst < 1e-4, format!("max relative error {worst:.3e} over 40 networks"))
}

fn random_bundle(rng: &mut ChaCha8Rng, len: usize) -> ModelBundle {
    ModelBundle {
        agent_id: None,
        actor_eval: (0..len).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>().into(),
        critic_eval: (0..len).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>().into(),
    }
}

fn identities(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = random_bundle(rng, 16);
        let b = random_bundle(rng, 16);
        let (Ok(p1), Ok(p0), Ok(g)) = (personalize(&a, &b, 1.0), personalize(&a, &b, 0.0), aggregate(&[a.clone(), b.clone()], &[0.5, 0.5])) else {
            return result("identities", false, "federation op failed".into());
        };
        worst = worst.max(p1.distance(&a)).max(p0.distance(&b));
        for i in 0..16 {
            worst = worst.max((g.actor_eval[i] - (a.actor_eval[i] + b.actor_eval[i]) / 2.0).abs());
        }
        let (Ok(s0), Ok(s1)) = (soft_update(&a.actor_eval, &b.actor_eval, 0.0), soft_update(&a.actor_eval, &b.actor_eval, 1.0)) else {
            return result("identities", false, "soft update failed".into());
        };
        worst = worst.max(s0.l2_distance(&a.actor_eval)).max(s1.l2_distance(&b.actor_eval));
    }
    result("identities", worst <= 1e-12, format!("max deviation {worst:.3e}"))
}

fn constraints(rng: &mut ChaCha8Rng) -> CheckResult {
    let cfg = match ExperimentConfig::preset("desk-small") {
        Ok(c) => c.world,
        Err(e) => return result("constraints", false, e.to_string()),
    };
    let bound = cfg.action_bound();
    let mut mismatches = 0usize;
    let mut recorded = 0usize;
    for _ in 0..10 {
        let Ok(mut state) = env::reset(&cfg, rng) else {
            return result("constraints", false, "reset failed".into());
        };
        for _ in 0..cfg.slot_count {
            let actions: Vec<ActionCmd> = (0..cfg.n_uavs)
                .map(|_| ActionCmd {
                    dx: rng.random_range(-2.0 * bound..2.0 * bound),
                    dy: rng.random_range(-2.0 * bound..2.0 * bound),
                })
                .collect();
            let Ok(out) = env::step(&state, &actions, &cfg, rng) else {
                return result("constraints", false, "step failed".into());
            };
            let pos = &out.next_state.uav_positions;
            for n in 0..cfg.n_uavs {
                let count = |k: ViolationKind| out.violations.iter().filter(|v| v.agent == n && v.kind == k).count();
                let a = actions[n].clipped(bound);
                let (tx, ty) = (state.uav_positions[n].x + a.dx, state.uav_positions[n].y + a.dy);
                let outside = usize::from(!(0.0..=cfg.area_side).contains(&tx) || !(0.0..=cfg.area_side).contains(&ty));
                let close = (0..cfg.n_uavs)
                    .filter(|&m| m != n && pos[n].distance(&pos[m]) < cfg.min_uav_separation)
                    .count();
                let blocked = cfg
                    .obstacles
                    .iter()
                    .filter(|o| env::horizontal_distance(&pos[n], &o.center()) < cfg.obstacle_safe_distance)
                    .count();
                recorded += out.violations.iter().filter(|v| v.agent == n).count();
                mismatches += usize::from(count(ViolationKind::Boundary) != outside)
                    + usize::from(count(ViolationKind::UavCollision) != close)
                    + usize::from(count(ViolationKind::Obstacle) != blocked);
            }
            state = out.next_state;
        }
    }
    result(
        "constraints",
        mismatches == 0,
        format!("{mismatches} mismatches against {recorded} recorded violations"),
    )
}

fn checkpoints(rng: &mut ChaCha8Rng) -> CheckResult {
    let cfg = match ExperimentConfig::preset("desk-small") {
        Ok(c) => c,
        Err(e) => return result("checkpoint", false, e.to_string()),
    };
    let n = cfg.world.n_uavs;
    let Ok(agents) = (0..n)
        .map(|_| AgentNets::new(&cfg.network, cfg.world.obs_dim(), n, rng))
        .collect::<crate::Result<Vec<_>>>()
    else {
        return result("checkpoint", false, "network init failed".into());
    };
    let mut bytes = Vec::new();
    let restored = checkpoint_of(&agents)
        .write_to(&mut bytes)
        .and_then(|_| Checkpoint::read_from(&mut bytes.as_slice()));
    let Ok(restored) = restored else {
        return result("checkpoint", false, "round trip failed".into());
    };
    let mut differing = 0usize;
    for (orig, back) in checkpoint_of(&agents).networks.iter().zip(&restored.networks) {
        for _ in 0..10 {
            let x: Vec<f64> = (0..orig.spec.input_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = forward(&orig.spec, &orig.params, &x).map(|o| o.0);
            let b = forward(&back.spec, &back.params, &x).map(|o| o.0);
            differing += usize::from(!matches!((a, b), (Ok(a), Ok(b)) if a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits())));
        }
    }
    result("checkpoint", differing == 0, format!("{differing} forward outputs differ after reload"))
}

/// Runs the built-in invariant suite: gradient exactness, federation and
/// soft-update identities, constraint bookkeeping and checkpoint fidelity.
pub fn run_checks(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        gradients(&mut rng),
        identities(&mut rng),
        constraints(&mut rng),
        checkpoints(&mut rng),
    ]
}
