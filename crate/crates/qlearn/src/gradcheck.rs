//! Finite-difference verification of the analytic backward pass.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::QError;
use crate::network::{NetGrads, QNetwork, Workspace, ACTIONS, AUX_LEN, GRID_CELLS};

/// A small labeled batch for gradient probing: states, taken actions,
/// and fixed regression targets.
#[derive(Debug, Clone)]
pub struct ProbeBatch {
    pub grids: Vec<f64>,
    pub auxs: Vec<f64>,
    pub actions: Vec<usize>,
    pub targets: Vec<f64>,
}

impl ProbeBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Random probe of up to 4 samples, deterministic per seed.
    pub fn random(seed: u64, n: usize) -> Self {
        assert!(n >= 1 && n <= 4, "probe batches stay small");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grids = Vec::with_capacity(n * GRID_CELLS);
        let mut auxs = Vec::with_capacity(n * AUX_LEN);
        let mut actions = Vec::with_capacity(n);
        let mut targets = Vec::with_capacity(n);
        for _ in 0..n {
            // Grid-like values: mostly free cells, a few occupied bands.
            for _ in 0..GRID_CELLS {
                let v: f64 = rng.random();
                grids.push(if v < 0.7 {
                    1.0
                } else {
                    rng.random_range(-0.48..0.5)
                });
            }
            auxs.push(rng.random_range(0.0..1.0));
            auxs.push(f64::from(rng.random_range(0..2) as u8));
            auxs.push(f64::from(rng.random_range(0..2) as u8));
            actions.push(rng.random_range(0..ACTIONS));
            targets.push(rng.random_range(-10.0..1.0));
        }
        ProbeBatch {
            grids,
            auxs,
            actions,
            targets,
        }
    }
}

/// Mean squared TD error of the probe under `net`, plus the ReLU firing
/// pattern of the forward pass.
fn probe_loss_masked(
    net: &QNetwork,
    probe: &ProbeBatch,
    ws: &mut Workspace,
    mask: &mut Vec<bool>,
) -> Result<f64, QError> {
    let n = probe.len();
    net.forward_batch(&probe.grids, &probe.auxs, n, ws)?;
    mask.clear();
    for slice in [&ws.act1, &ws.act2, &ws.gd, &ws.aux, &ws.fus] {
        mask.extend(slice.iter().map(|&v| v > 0.0));
    }
    let mut loss = 0.0;
    for i in 0..n {
        let err = ws.q[i * ACTIONS + probe.actions[i]] - probe.targets[i];
        loss += err * err;
    }
    Ok(loss / n as f64)
}

/// Compare analytic gradients to central finite differences (h = 1e-5)
/// over `samples` randomly chosen parameters; returns the maximum
/// relative error.
///
/// Parameters whose `+/- h` evaluations land on different sides of a
/// ReLU kink are redrawn: the loss is not differentiable there, so a
/// difference quotient measures nothing.
pub fn gradient_check(net: &QNetwork, probe: &ProbeBatch, samples: usize, seed: u64) -> Result<f64, QError> {
    assert!(!probe.is_empty() && probe.len() <= 4, "probe batch must hold 1..=4 samples");
    let n = probe.len();
    let h = 1e-5;

    // Analytic gradients at the unperturbed point.
    let mut ws = Workspace::new();
    net.forward_batch(&probe.grids, &probe.auxs, n, &mut ws)?;
    let mut dq = vec![0.0; n * ACTIONS];
    for i in 0..n {
        let q = ws.q[i * ACTIONS + probe.actions[i]];
        dq[i * ACTIONS + probe.actions[i]] = 2.0 * (q - probe.targets[i]) / n as f64;
    }
    let mut grads = NetGrads::zeroed();
    net.backward_batch(&probe.grids, &probe.auxs, n, &mut ws, &dq, &mut grads);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout: Vec<usize> = net.param_slices().iter().map(|s| s.len()).collect();
    let mut worst = 0.0f64;
    let mut scratch = net.clone();
    let mut ws2 = Workspace::new();
    let mut mask_up = Vec::new();
    let mut mask_down = Vec::new();
    let mut checked = 0usize;
    let mut attempts = 0usize;
    while checked < samples && attempts < samples * 50 {
        attempts += 1;
        let layer = rng.random_range(0..layout.len());
        let offset = rng.random_range(0..layout[layer]);

        scratch.clone_from(net);
        scratch.param_slices_mut()[layer][offset] += h;
        let up = probe_loss_masked(&scratch, probe, &mut ws2, &mut mask_up)?;
        scratch.param_slices_mut()[layer][offset] -= 2.0 * h;
        let down = probe_loss_masked(&scratch, probe, &mut ws2, &mut mask_down)?;
        if mask_up != mask_down {
            continue; // kink inside the difference interval
        }
        let numeric = (up - down) / (2.0 * h);
        let analytic = grads.slices()[layer][offset];

        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        let rel = (analytic - numeric).abs() / denom;
        if rel > worst {
            worst = rel;
        }
        checked += 1;
    }
    Ok(worst)
}
