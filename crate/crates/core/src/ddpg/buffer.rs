use rand::Rng;

use super::{ACTION_DIM, DESIGN_FEATURES, STATE_FEATURES};

/// One stored environment transition, in normalized feature space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: [f64; STATE_FEATURES],
    pub design: [f64; DESIGN_FEATURES],
    /// Requested action in `[-1, 1]` per dimension.
    pub action: [f64; ACTION_DIM],
    pub reward: f64,
    pub next_state: [f64; STATE_FEATURES],
    /// Set on the last step of a truncated episode. Not used to mask the
    /// bootstrap term.
    pub truncated: bool,
}

/// Fixed-capacity ring buffer with FIFO eviction and uniform sampling with
/// replacement.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
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

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn sample<'a, R: Rng + ?Sized>(&'a self, count: usize, rng: &mut R) -> Vec<&'a Transition> {
        assert!(!self.items.is_empty(), "cannot sample from an empty buffer");
        (0..count)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}
