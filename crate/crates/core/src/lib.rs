//! Multi-UAV trajectory optimization for mobile edge computing with
//! personalized federated multi-agent actor-critic training.
//!
//! - [`env`]: the UAV/user world, channel and energy models, constraints.
//! - [`nn`]: small dense networks with hand-written backpropagation.
//! - [`maddpg`]: replay, centralized critics and actor updates.
//! - [`federation`]: weighted aggregation and personalized mixing.
//! - [`harness`]: configuration, training loop, metrics and outputs.

pub mod env;
mod error;
pub mod federation;
pub mod harness;
pub mod maddpg;
pub mod nn;

pub use error::{Error, Result};
