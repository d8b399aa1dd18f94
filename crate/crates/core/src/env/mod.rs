//! Multi-UAV mobile edge computing world.
//!
//! UAVs fly at a fixed altitude over a square area and collect uploads from
//! mobile ground users. Each slot the agents pick planar displacements, the
//! world applies them (clamping at the area boundary), moves the users, matches
//! users to UAVs and scores the slot with a shared rate-minus-energy term and
//! per-agent violation penalties.

mod channel;
mod config;
mod world;

pub use channel::{channel_gain, compute_energy, flight_energy, horizontal_distance, upload_rate};
pub use config::{grid_obstacles, Obstacle, WorldConfig};
pub use world::{
    assign_users, episode_return, observe, reset, reward, step, team_term, uav_sum_rate,
    Assignment,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Position3 { x, y, z }
    }

    pub fn distance(&self, other: &Position3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Global state: every UAV and user position plus the slot counter.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub uav_positions: Vec<Position3>,
    pub user_positions: Vec<Position3>,
    pub slot: usize,
}

/// What agent `n` sees: itself, its peers in index order, then all users.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub own_position: Position3,
    pub other_uav_positions: Vec<Position3>,
    pub user_positions: Vec<Position3>,
}

impl Observation {
    fn positions(&self) -> impl Iterator<Item = &Position3> {
        std::iter::once(&self.own_position)
            .chain(&self.other_uav_positions)
            .chain(&self.user_positions)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.positions().flat_map(|p| [p.x, p.y, p.z]).collect()
    }

    /// Flattened coordinates divided by `scale`, used as network input.
    pub fn features(&self, scale: f64) -> Vec<f64> {
        self.positions()
            .flat_map(|p| [p.x / scale, p.y / scale, p.z / scale])
            .collect()
    }
}

/// Planar displacement for one slot (m).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActionCmd {
    pub dx: f64,
    pub dy: f64,
}

impl ActionCmd {
    pub fn magnitude(&self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy).sqrt()
    }

    /// Scales the command down so its magnitude does not exceed `bound`.
    pub fn clipped(self, bound: f64) -> Self {
        let m = self.magnitude();
        if m > bound {
            let s = bound / m;
            ActionCmd {
                dx: self.dx * s,
                dy: self.dy * s,
            }
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    UavCollision,
    Obstacle,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Violation {
    pub agent: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    pub rewards: Vec<f64>,
    pub per_uav_rate: Vec<f64>,
    pub per_uav_flight_energy: Vec<f64>,
    pub per_uav_compute_energy: Vec<f64>,
    pub violations: Vec<Violation>,
    pub done: bool,
}

impl StepOutcome {
    /// Flight plus compute energy of each UAV.
    pub fn per_uav_energy(&self) -> Vec<f64> {
        self.per_uav_flight_energy
            .iter()
            .zip(&self.per_uav_compute_energy)
            .map(|(f, c)| f + c)
            .collect()
    }
}
