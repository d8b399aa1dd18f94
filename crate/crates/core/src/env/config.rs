use serde::{Deserialize, Serialize};

use super::channel;
use super::Position3;
use crate::error::{Error, Result};

/// Vertical cylinder obstacle; only its ground-plane center matters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
}

impl Obstacle {
    pub fn center(&self) -> Position3 {
        Position3::new(self.x, self.y, 0.0)
    }
}

/// Physical constants of the world. Units are SI throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldConfig {
    pub n_uavs: usize,
    pub n_users: usize,
    /// Side of the square service area (m).
    pub area_side: f64,
    /// Fixed flight altitude (m).
    pub altitude: f64,
    pub slot_count: usize,
    /// Seconds per slot.
    pub slot_duration: f64,
    pub uav_max_speed: f64,
    pub user_max_speed: f64,
    /// Minimum UAV-UAV separation (m).
    pub min_uav_separation: f64,
    /// Minimum horizontal distance from any obstacle center (m).
    pub obstacle_safe_distance: f64,
    pub obstacles: Vec<Obstacle>,
    /// Channel power gain at the 1 m reference distance.
    pub ref_channel_gain: f64,
    /// Bandwidth of each UAV, shared equally by its served users (Hz).
    pub total_bandwidth: f64,
    pub user_tx_power: f64,
    pub noise_power: f64,
    pub max_served_per_uav: usize,
    /// Flight energy coefficient, `0.5 * mass * slot_duration` (J s^2/m^2).
    pub flight_energy_coeff: f64,
    pub cycles_per_bit: f64,
    pub cpu_frequency: f64,
    pub switching_capacitance: f64,
    /// Rate normalizer; derived from the other constants when absent.
    pub max_rate: Option<f64>,
    /// Per-slot energy normalizer; derived when absent.
    pub max_slot_energy: Option<f64>,
    pub violation_penalty: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        let side = 200.0;
        WorldConfig {
            n_uavs: 4,
            n_users: 30,
            area_side: side,
            altitude: 100.0,
            slot_count: 200,
            slot_duration: 1.0,
            uav_max_speed: 10.0,
            user_max_speed: 2.0,
            min_uav_separation: 10.0,
            obstacle_safe_distance: 10.0,
            obstacles: grid_obstacles(side),
            ref_channel_gain: 1e-5,
            total_bandwidth: 1e6,
            user_tx_power: 0.1,
            noise_power: 1e-13,
            max_served_per_uav: 5,
            flight_energy_coeff: 0.5,
            cycles_per_bit: 1e3,
            cpu_frequency: 1e9,
            switching_capacitance: 1e-28,
            max_rate: None,
            max_slot_energy: None,
            violation_penalty: 0.1,
        }
    }
}

/// Four obstacles on the inner thirds of the area, away from the corners.
pub fn grid_obstacles(side: f64) -> Vec<Obstacle> {
    let (a, b) = (side / 3.0, 2.0 * side / 3.0);
    vec![
        Obstacle { x: a, y: a },
        Obstacle { x: b, y: a },
        Obstacle { x: b, y: b },
        Obstacle { x: a, y: b },
    ]
}

impl WorldConfig {
    /// Largest displacement a UAV may make in one slot.
    pub fn action_bound(&self) -> f64 {
        self.uav_max_speed * self.slot_duration
    }

    /// Length of one flattened observation.
    pub fn obs_dim(&self) -> usize {
        3 * (self.n_uavs + self.n_users)
    }

    pub fn max_rate(&self) -> f64 {
        self.max_rate.unwrap_or_else(|| {
            let g0 = channel::channel_gain(0.0, self);
            channel::upload_rate(self.total_bandwidth, g0, self) * self.max_served_per_uav as f64
        })
    }

    pub fn max_slot_energy(&self) -> f64 {
        self.max_slot_energy.unwrap_or_else(|| {
            channel::flight_energy(self.uav_max_speed, self)
                + channel::compute_energy(self.max_rate(), self)
        })
    }

    pub fn validate(&self) -> Result<()> {
        let key = |k: &str| format!("world.{k}");
        let positive = [
            ("area_side", self.area_side),
            ("altitude", self.altitude),
            ("slot_duration", self.slot_duration),
            ("uav_max_speed", self.uav_max_speed),
            ("min_uav_separation", self.min_uav_separation),
            ("obstacle_safe_distance", self.obstacle_safe_distance),
            ("ref_channel_gain", self.ref_channel_gain),
            ("total_bandwidth", self.total_bandwidth),
            ("user_tx_power", self.user_tx_power),
            ("noise_power", self.noise_power),
            ("flight_energy_coeff", self.flight_energy_coeff),
            ("cycles_per_bit", self.cycles_per_bit),
            ("cpu_frequency", self.cpu_frequency),
            ("switching_capacitance", self.switching_capacitance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key(name), format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [("max_rate", self.max_rate), ("max_slot_energy", self.max_slot_energy)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::config(key(name), format!("must be positive, got {v}")));
                }
            }
        }
        if !(self.user_max_speed.is_finite() && self.user_max_speed >= 0.0) {
            return Err(Error::config(key("user_max_speed"), "must be non-negative"));
        }
        if !(self.violation_penalty.is_finite() && self.violation_penalty >= 0.0) {
            return Err(Error::config(key("violation_penalty"), "must be non-negative"));
        }
        for (name, v) in [
            ("n_uavs", self.n_uavs),
            ("n_users", self.n_users),
            ("slot_count", self.slot_count),
            ("max_served_per_uav", self.max_served_per_uav),
        ] {
            if v == 0 {
                return Err(Error::config(key(name), "must be at least 1"));
            }
        }
        if self.min_uav_separation >= self.area_side {
            return Err(Error::config(key("min_uav_separation"), "must be smaller than area_side"));
        }
        if self.obstacle_safe_distance >= self.area_side {
            return Err(Error::config(
                key("obstacle_safe_distance"),
                "must be smaller than area_side",
            ));
        }
        if self.action_bound() >= self.area_side {
            return Err(Error::config(
                key("uav_max_speed"),
                "one slot of flight must not cross the whole area",
            ));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            let inside = |c: f64| c.is_finite() && (0.0..=self.area_side).contains(&c);
            if !inside(o.x) || !inside(o.y) {
                return Err(Error::config(
                    format!("world.obstacles[{i}]"),
                    "center must lie inside the area",
                ));
            }
        }
        Ok(())
    }
}
