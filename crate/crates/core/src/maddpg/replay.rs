use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};

/// Joint experience of one slot. States are the concatenated per-agent
/// observation features, actions the concatenated unit-coordinate actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity ring of transitions, overwriting the oldest entry when
/// full. Transitions are reference counted so several agents may store the
/// same joint sample.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Arc<Transition>>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            items: Vec::new(),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, transition: impl Into<Arc<Transition>>) {
        let t = transition.into();
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..]
            .iter()
            .chain(&self.items[..split])
            .map(|t| t.as_ref())
    }

    /// Draws `k` transitions uniformly with replacement. Fails unless the
    /// buffer holds at least `max(k, min_size)` items.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, min_size: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        let need = k.max(min_size).max(1);
        if self.items.len() < need {
            return Err(Error::InsufficientSamples {
                have: self.items.len(),
                need,
            });
        }
        Ok(self.sample_indices(k, rng).into_iter().map(|i| self.items[i].as_ref()).collect())
    }

    pub fn sample_indices<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<usize> {
        let n = self.items.len();
        (0..k).map(|_| rng.random_range(0..n)).collect()
    }
}

/// Row-major matrices gathered from sampled transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub len: usize,
    pub state_dim: usize,
    pub action_dim: usize,
    pub states: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<f64>,
    pub dones: Vec<bool>,
    pub n_agents: usize,
}

impl Batch {
    pub fn from_transitions(samples: &[&Transition]) -> Result<Self> {
        let first = samples.first().ok_or(Error::Empty("batch"))?;
        let (sd, ad, nr) = (first.state.len(), first.actions.len(), first.rewards.len());
        let mut b = Batch {
            len: samples.len(),
            state_dim: sd,
            action_dim: ad,
            states: Vec::with_capacity(samples.len() * sd),
            actions: Vec::with_capacity(samples.len() * ad),
            rewards: Vec::with_capacity(samples.len() * nr),
            next_states: Vec::with_capacity(samples.len() * sd),
            dones: Vec::with_capacity(samples.len()),
            n_agents: nr,
        };
        for t in samples {
            crate::error::check_len("transition state", sd, t.state.len())?;
            crate::error::check_len("transition next state", sd, t.next_state.len())?;
            crate::error::check_len("transition actions", ad, t.actions.len())?;
            crate::error::check_len("transition rewards", nr, t.rewards.len())?;
            b.states.extend_from_slice(&t.state);
            b.actions.extend_from_slice(&t.actions);
            b.rewards.extend_from_slice(&t.rewards);
            b.next_states.extend_from_slice(&t.next_state);
            b.dones.push(t.done);
        }
        Ok(b)
    }

    pub fn reward(&self, i: usize, agent: usize) -> f64 {
        self.rewards[i * self.n_agents + agent]
    }
}
