//! DQN training: TD targets, the gradient step, target-network sync,
//! and epsilon-greedy action selection.

use mdp_env::Action;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::adam::Adam;
use crate::error::QError;
use crate::network::{NetGrads, QNetwork, Workspace, ACTIONS, AUX_LEN, GRID_CELLS};
use crate::replay::{Experience, ReplayPools};

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub batch: usize,
    /// Sync the target network every this many gradient updates.
    pub target_sync: u64,
    pub learning_rate: f64,
    /// Per-component gradient clip.
    pub grad_clip: f64,
    /// Total stored experiences required before updates start.
    pub warmup: usize,
    /// Capacity of each replay pool.
    pub pool_capacity: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.95,
            batch: 32,
            target_sync: 500,
            learning_rate: 1e-4,
            grad_clip: 1.0,
            warmup: 500,
            pool_capacity: 20_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 < self.gamma && self.gamma <= 1.0) {
            return Err(format!("gamma must be in (0,1], got {}", self.gamma));
        }
        if self.batch == 0 || self.batch % 2 != 0 {
            return Err(format!("batch must be even and positive, got {}", self.batch));
        }
        if self.warmup < self.batch {
            return Err(format!("warmup {} must cover at least one batch {}", self.warmup, self.batch));
        }
        if self.learning_rate <= 0.0 || self.grad_clip <= 0.0 {
            return Err("learning_rate and grad_clip must be positive".into());
        }
        if self.pool_capacity == 0 {
            return Err("pool_capacity must be positive".into());
        }
        Ok(())
    }
}

/// TD targets for a batch: `r + gamma * max_a' Q(s', a'; target)`, or
/// plain `r` on terminal transitions.
pub fn td_targets(
    batch: &[&Experience],
    target_net: &QNetwork,
    gamma: f64,
    ws: &mut Workspace,
) -> Result<Vec<f64>, QError> {
    assert!(!batch.is_empty(), "td_targets needs a non-empty batch");
    let n = batch.len();
    let mut grids = Vec::with_capacity(n * GRID_CELLS);
    let mut auxs = Vec::with_capacity(n * AUX_LEN);
    for exp in batch {
        grids.extend_from_slice(&exp.next_grid);
        auxs.extend_from_slice(&exp.next_aux);
    }
    target_net.forward_batch(&grids, &auxs, n, ws)?;
    Ok(batch
        .iter()
        .enumerate()
        .map(|(i, exp)| {
            if exp.done {
                exp.reward
            } else {
                let q = &ws.q[i * ACTIONS..(i + 1) * ACTIONS];
                exp.reward + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect())
}

/// Copy the online parameters into the target network, bit for bit.
pub fn sync_target(net: &QNetwork, target_net: &mut QNetwork) {
    target_net.clone_from(net);
}

/// Epsilon-greedy selection; greedy ties break to the lowest action index.
pub fn select_action(
    net: &QNetwork,
    grid: &[f64],
    aux: &[f64],
    eps: f64,
    rng: &mut ChaCha8Rng,
    ws: &mut Workspace,
) -> Result<Action, QError> {
    debug_assert!((0.0..=1.0).contains(&eps));
    if rng.random::<f64>() < eps {
        return Ok(Action::from_index(rng.random_range(0..ACTIONS)));
    }
    let q = net.forward(grid, aux, ws)?;
    Ok(greedy_action(&q))
}

/// Argmax with lowest-index tie-breaking.
pub fn greedy_action(q: &[f64; 3]) -> Action {
    let mut best = 0usize;
    for i in 1..ACTIONS {
        if q[i] > q[best] {
            best = i;
        }
    }
    Action::from_index(best)
}

/// Owns the mutable training state: optimizer, scratch, sampling stream.
pub struct Trainer {
    pub config: TrainConfig,
    optimizer: Adam,
    rng: ChaCha8Rng,
    ws: Workspace,
    target_ws: Workspace,
    grads: NetGrads,
    // Batch staging buffers.
    grids: Vec<f64>,
    auxs: Vec<f64>,
    dq: Vec<f64>,
}

impl Trainer {
    pub fn new(config: TrainConfig, rng: ChaCha8Rng) -> Self {
        Trainer {
            optimizer: Adam::new(config.learning_rate),
            rng,
            ws: Workspace::new(),
            target_ws: Workspace::new(),
            grads: NetGrads::zeroed(),
            grids: Vec::new(),
            auxs: Vec::new(),
            dq: Vec::new(),
            config,
        }
    }

    /// Gradient updates applied so far.
    pub fn updates(&self) -> u64 {
        self.optimizer.updates()
    }

    /// One DQN update from the pools. Returns `None` (no update) until
    /// the warmup quota of stored experiences is met.
    pub fn train_step(
        &mut self,
        net: &mut QNetwork,
        target_net: &QNetwork,
        pools: &ReplayPools,
    ) -> Result<Option<f64>, QError> {
        if pools.total() < self.config.warmup.max(self.config.batch) {
            return Ok(None);
        }
        let batch = pools.sample(self.config.batch, &mut self.rng);
        let n = batch.len();
        let targets = td_targets(&batch, target_net, self.config.gamma, &mut self.target_ws)?;

        self.grids.clear();
        self.auxs.clear();
        for exp in &batch {
            self.grids.extend_from_slice(&exp.grid);
            self.auxs.extend_from_slice(&exp.aux);
        }
        net.forward_batch(&self.grids, &self.auxs, n, &mut self.ws)?;

        // Squared TD error on the taken actions only.
        self.dq.clear();
        self.dq.resize(n * ACTIONS, 0.0);
        let mut loss = 0.0;
        for (i, exp) in batch.iter().enumerate() {
            let a = exp.action.index();
            let q = self.ws.q[i * ACTIONS + a];
            let err = q - targets[i];
            loss += err * err;
            self.dq[i * ACTIONS + a] = 2.0 * err / n as f64;
        }
        loss /= n as f64;

        self.grads.reset();
        net.backward_batch(&self.grids, &self.auxs, n, &mut self.ws, &self.dq, &mut self.grads);
        self.optimizer.step(net, &self.grads, self.config.grad_clip);
        Ok(Some(loss))
    }
}
