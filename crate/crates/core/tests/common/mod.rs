//! Straight-line reference implementations shared by the integration tests.
//! None of these call into the crate's numeric code paths.

#![allow(dead_code)]

use rand::Rng;
use uav_fedrl::nn::{Activation, MlpSpec};

pub fn act(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Identity => z,
        Activation::Relu => {
            if z > 0.0 {
                z
            } else {
                0.0
            }
        }
        Activation::Tanh => z.tanh(),
    }
}

/// Dense forward pass over the documented layout: for every layer, the
/// weight matrix (fan_out rows of fan_in) followed by the bias.
pub fn mlp(widths: &[usize], hidden: Activation, output: Activation, params: &[f64], input: &[f64]) -> Vec<f64> {
    let mut x = input.to_vec();
    let mut off = 0;
    for l in 0..widths.len() - 1 {
        let (fi, fo) = (widths[l], widths[l + 1]);
        let w = &params[off..off + fi * fo];
        let b = &params[off + fi * fo..off + fi * fo + fo];
        off += fi * fo + fo;
        let a = if l + 2 == widths.len() { output } else { hidden };
        let mut y = Vec::with_capacity(fo);
        for o in 0..fo {
            let mut z = b[o];
            for i in 0..fi {
                z += w[o * fi + i] * x[i];
            }
            y.push(act(a, z));
        }
        x = y;
    }
    assert_eq!(off, params.len(), "parameter vector length does not match widths");
    x
}

pub fn mlp_spec(spec: &MlpSpec, params: &[f64], input: &[f64]) -> Vec<f64> {
    mlp(&spec.layer_widths, spec.hidden_activation, spec.output_activation, params, input)
}

pub fn rand_vec<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Expected `(boundary, collision, obstacle)` counts for every UAV, recomputed
/// from the previous positions, the commands and the resulting positions.
pub fn expected_violations(
    cfg: &uav_fedrl::env::WorldConfig,
    prev: &[uav_fedrl::env::Position3],
    commands: &[uav_fedrl::env::ActionCmd],
    next: &[uav_fedrl::env::Position3],
) -> Vec<[usize; 3]> {
    let bound = cfg.uav_max_speed * cfg.slot_duration;
    let l = cfg.area_side;
    (0..prev.len())
        .map(|n| {
            let (mut dx, mut dy) = (commands[n].dx, commands[n].dy);
            let m = dx.hypot(dy);
            if m > bound {
                dx *= bound / m;
                dy *= bound / m;
            }
            let (tx, ty) = (prev[n].x + dx, prev[n].y + dy);
            let boundary = usize::from(tx < 0.0 || tx > l || ty < 0.0 || ty > l);
            let collision = (0..next.len())
                .filter(|&j| j != n)
                .filter(|&j| {
                    let (a, b) = (next[n], next[j]);
                    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt() < cfg.min_uav_separation
                })
                .count();
            let obstacle = cfg
                .obstacles
                .iter()
                .filter(|o| (next[n].x - o.x).hypot(next[n].y - o.y) < cfg.obstacle_safe_distance)
                .count();
            [boundary, collision, obstacle]
        })
        .collect()
}

/// Recorded `(boundary, collision, obstacle)` counts per UAV.
pub fn recorded_violations(n: usize, violations: &[uav_fedrl::env::Violation]) -> Vec<[usize; 3]> {
    use uav_fedrl::env::ViolationKind;
    let mut out = vec![[0usize; 3]; n];
    for v in violations {
        let k = match v.kind {
            ViolationKind::Boundary => 0,
            ViolationKind::UavCollision => 1,
            ViolationKind::Obstacle => 2,
        };
        out[v.agent][k] += 1;
    }
    out
}
