mod common;

use common::{expected_violations, recorded_violations};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uav_fedrl::env::{self, ActionCmd, EnvState, Position3, WorldConfig};
use uav_fedrl::harness::ExperimentConfig;
use uav_fedrl::Error;

fn world(n_uavs: usize, n_users: usize) -> WorldConfig {
    WorldConfig {
        n_uavs,
        n_users,
        slot_count: 30,
        ..WorldConfig::default()
    }
}

fn random_commands(rng: &mut ChaCha8Rng, n: usize, reach: f64) -> Vec<ActionCmd> {
    (0..n)
        .map(|_| ActionCmd {
            dx: rng.random_range(-reach..reach),
            dy: rng.random_range(-reach..reach),
        })
        .collect()
}

/// Shannon rate of a single user from scratch.
fn user_rate(cfg: &WorldConfig, share: f64, uav: &Position3, user: &Position3) -> f64 {
    let d2 = (uav.x - user.x).powi(2) + (uav.y - user.y).powi(2);
    let g = cfg.ref_channel_gain / (cfg.altitude.powi(2) + d2);
    share * (1.0 + cfg.user_tx_power * g / cfg.noise_power).log2()
}

#[test]
fn desk_violations_match_recheck() {
    let cfg = ExperimentConfig::preset("desk-small").unwrap().world;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut recorded = 0;
    for _ in 0..20 {
        let mut s = env::reset(&cfg, &mut rng).unwrap();
        for _ in 0..cfg.slot_count {
            let cmds = random_commands(&mut rng, cfg.n_uavs, 25.0);
            let out = env::step(&s, &cmds, &cfg, &mut rng).unwrap();
            let got = recorded_violations(cfg.n_uavs, &out.violations);
            recorded += out.violations.len();
            assert_eq!(got, expected_violations(&cfg, &s.uav_positions, &cmds, &out.next_state.uav_positions));
            s = out.next_state;
        }
    }
    assert!(recorded > 0);
}

#[test]
fn episode_ends_after_slot_count() {
    let cfg = world(2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut s = env::reset(&cfg, &mut rng).unwrap();
    let cmds = vec![ActionCmd::default(); 2];
    for t in 0..cfg.slot_count {
        let out = env::step(&s, &cmds, &cfg, &mut rng).unwrap();
        assert_eq!(out.done, t + 1 == cfg.slot_count);
        s = out.next_state;
    }
    assert!(matches!(env::step(&s, &cmds, &cfg, &mut rng), Err(Error::EpisodeDone { .. })));
    assert!(env::step(&env::reset(&cfg, &mut rng).unwrap(), &cmds[..1], &cfg, &mut rng).is_err());
}

#[test]
fn observations_list_self_then_peers_then_users() {
    let cfg = world(3, 2);
    let s = env::reset(&cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let o = env::observe(&s, 1);
    assert_eq!(o.own_position, s.uav_positions[1]);
    assert_eq!(o.other_uav_positions, vec![s.uav_positions[0], s.uav_positions[2]]);
    assert_eq!(o.flatten().len(), cfg.obs_dim());
    let f = o.features(cfg.area_side);
    assert!(f.iter().zip(o.flatten()).all(|(a, b)| (a * cfg.area_side - b).abs() < 1e-9));
}

#[test]
fn user_directly_below_gets_full_bandwidth() {
    // One UAV, one user right below it: the whole bandwidth goes to that user.
    let cfg = WorldConfig {
        n_uavs: 1,
        n_users: 1,
        user_max_speed: 0.0,
        obstacles: Vec::new(),
        ..WorldConfig::default()
    };
    let s = EnvState {
        uav_positions: vec![Position3::new(50.0, 50.0, cfg.altitude)],
        user_positions: vec![Position3::new(50.0, 50.0, 0.0)],
        slot: 0,
    };
    let out = env::step(&s, &[ActionCmd::default()], &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let expected = cfg.total_bandwidth * (1.0 + cfg.user_tx_power * cfg.ref_channel_gain / cfg.altitude.powi(2) / cfg.noise_power).log2();
    assert!((out.per_uav_rate[0] - expected).abs() < 1e-6);
    assert_eq!(out.per_uav_flight_energy[0], 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_invariants(seed in any::<u64>(), n_uavs in 1usize..5, n_users in 0usize..12, reach in 0.0f64..40.0) {
        let cfg = world(n_uavs, n_users);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = env::reset(&cfg, &mut rng).unwrap();
        let cmds = random_commands(&mut rng, n_uavs, reach.max(1e-9));
        let out = env::step(&s, &cmds, &cfg, &mut rng).unwrap();
        let next = &out.next_state;
        let l = cfg.area_side;

        for (n, p) in next.uav_positions.iter().enumerate() {
            prop_assert!((0.0..=l).contains(&p.x) && (0.0..=l).contains(&p.y));
            prop_assert_eq!(p.z, cfg.altitude);
            let moved = (p.x - s.uav_positions[n].x).hypot(p.y - s.uav_positions[n].y);
            prop_assert!(moved <= cfg.action_bound() + 1e-9);
            let speed = cmds[n].dx.hypot(cmds[n].dy).min(cfg.action_bound()) / cfg.slot_duration;
            let ef = cfg.flight_energy_coeff * speed * speed;
            prop_assert!((out.per_uav_flight_energy[n] - ef).abs() <= 1e-9 * ef.max(1.0));
        }
        for (u, p) in s.user_positions.iter().zip(&next.user_positions) {
            prop_assert!((0.0..=l).contains(&p.x) && (0.0..=l).contains(&p.y));
            prop_assert!((p.x - u.x).hypot(p.y - u.y) <= cfg.user_max_speed * cfg.slot_duration + 1e-9);
        }

        // Matching: capacity respected, every user served when capacity allows,
        // and the rate of each UAV is the sum over its users.
        let a = env::assign_users(next, &cfg);
        let served: usize = a.served.iter().map(Vec::len).sum();
        prop_assert_eq!(served, n_users.min(n_uavs * cfg.max_served_per_uav));
        for (n, users) in a.served.iter().enumerate() {
            prop_assert!(users.len() <= cfg.max_served_per_uav);
            let share = if users.is_empty() { 0.0 } else { cfg.total_bandwidth / users.len() as f64 };
            let rate: f64 = users.iter().map(|&m| user_rate(&cfg, share, &next.uav_positions[n], &next.user_positions[m])).sum();
            prop_assert!((out.per_uav_rate[n] - rate).abs() <= 1e-9 * rate.max(1.0));
            let ec = cfg.switching_capacitance * cfg.cycles_per_bit * rate * cfg.cpu_frequency.powi(2);
            prop_assert!((out.per_uav_compute_energy[n] - ec).abs() <= 1e-9 * ec.max(1e-12));
        }

        // Rewards: shared term minus the per-agent penalty.
        let shared: f64 = (0..n_uavs)
            .map(|n| out.per_uav_rate[n] / cfg.max_rate() - (out.per_uav_flight_energy[n] + out.per_uav_compute_energy[n]) / cfg.max_slot_energy())
            .sum::<f64>() / n_uavs as f64;
        let counts = recorded_violations(n_uavs, &out.violations);
        for (n, c) in counts.iter().enumerate() {
            let k: usize = c.iter().sum();
            prop_assert!((out.rewards[n] - (shared - cfg.violation_penalty * k as f64)).abs() < 1e-12);
        }
        prop_assert_eq!(counts, expected_violations(&cfg, &s.uav_positions, &cmds, &next.uav_positions));
    }

    #[test]
    fn gain_decreases_with_distance(d1 in 0.0f64..1e3, extra in 1e-3f64..1e3) {
        let cfg = WorldConfig::default();
        prop_assert!(env::channel_gain(d1 + extra, &cfg) < env::channel_gain(d1, &cfg));
    }
}
