//! Split experience replay: keep-lane and lane-change pools.

use mdp_env::Action;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One stored transition.
#[derive(Debug, Clone)]
pub struct Experience {
    pub grid: Vec<f64>,
    pub aux: [f64; 3],
    pub action: Action,
    pub reward: f64,
    pub next_grid: Vec<f64>,
    pub next_aux: [f64; 3],
    pub done: bool,
}

/// FIFO ring of experiences.
#[derive(Debug, Clone, Default)]
struct Ring {
    items: Vec<Experience>,
    head: usize,
    capacity: usize,
}

impl Ring {
    fn new(capacity: usize) -> Self {
        Ring {
            items: Vec::new(),
            head: 0,
            capacity,
        }
    }

    fn push(&mut self, exp: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(exp);
        } else {
            self.items[self.head] = exp;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    fn len(&self) -> usize {
        self.items.len()
    }
}

/// The two pools, routed by the chosen action's class.
#[derive(Debug, Clone)]
pub struct ReplayPools {
    keep: Ring,
    change: Ring,
}

impl ReplayPools {
    pub fn new(capacity_each: usize) -> Self {
        ReplayPools {
            keep: Ring::new(capacity_each),
            change: Ring::new(capacity_each),
        }
    }

    /// Store by the stored action's class: keep-lane experiences in one
    /// pool, lane-change experiences (either direction) in the other.
    pub fn push(&mut self, exp: Experience) {
        if exp.action.is_change() {
            self.change.push(exp);
        } else {
            self.keep.push(exp);
        }
    }

    pub fn keep_len(&self) -> usize {
        self.keep.len()
    }

    pub fn change_len(&self) -> usize {
        self.change.len()
    }

    pub fn total(&self) -> usize {
        self.keep.len() + self.change.len()
    }

    pub fn keep_items(&self) -> impl Iterator<Item = &Experience> {
        self.keep.items.iter()
    }

    pub fn change_items(&self) -> impl Iterator<Item = &Experience> {
        self.change.items.iter()
    }

    /// Draw a batch: half from each pool, backfilling a short change pool
    /// from the keep pool (and vice versa) so the batch always fills.
    pub fn sample<'a>(&'a self, batch: usize, rng: &mut ChaCha8Rng) -> Vec<&'a Experience> {
        assert!(self.total() >= batch.max(1), "not enough experiences");
        let half = batch / 2;
        let n_change = half.min(self.change.len());
        let n_keep = (batch - n_change).min(self.keep.len());
        let n_change = batch - n_keep; // backfill shortfalls either way
        let mut out = Vec::with_capacity(batch);
        for _ in 0..n_change {
            let i = rng.random_range(0..self.change.len());
            out.push(&self.change.items[i]);
        }
        for _ in 0..n_keep {
            let i = rng.random_range(0..self.keep.len());
            out.push(&self.keep.items[i]);
        }
        out
    }
}
