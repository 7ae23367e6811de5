//! The convolutional Q-network and its hand-derived backward pass.
//!
//! Architecture, fixed at construction:
//!
//! ```text
//! grid 45x3x1 -> conv 3x3x16 (same pad, ReLU) -> conv 3x3x32 (same pad, ReLU)
//!             -> flatten 4320 -> dense 64 (ReLU) --\
//! aux 3 ---------------------> dense 16 (ReLU) ----+-> concat 80
//!                                                  -> dense 64 (ReLU)
//!                                                  -> dense 3 (linear)
//! ```
//!
//! Activations are kept position-major (HWC); convolutions run as im2col
//! matrix products. Everything is f64 so gradient checks can be strict.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::QError;
use crate::linalg::{matmul_acc, matmul_at_acc, transpose_into};

pub const GRID_ROWS: usize = 45;
pub const GRID_COLS: usize = 3;
pub const GRID_CELLS: usize = GRID_ROWS * GRID_COLS;
pub const AUX_LEN: usize = 3;
pub const ACTIONS: usize = 3;

pub const CONV1_FILTERS: usize = 16;
pub const CONV2_FILTERS: usize = 32;
pub const GRID_DENSE: usize = 64;
pub const AUX_DENSE: usize = 16;
pub const FUSION_DENSE: usize = 64;

const KERNEL: usize = 3;
const PATCH1: usize = KERNEL * KERNEL; // 1 input channel
const PATCH2: usize = CONV1_FILTERS * KERNEL * KERNEL;
pub const FLAT: usize = GRID_CELLS * CONV2_FILTERS; // 4320
const CONCAT: usize = GRID_DENSE + AUX_DENSE; // 80

/// One convolution layer's parameters; weights are (patch x filters).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Conv {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub patch: usize,
    pub filters: usize,
}

/// One dense layer's parameters; weights are (inputs x outputs).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub inputs: usize,
    pub outputs: usize,
}

/// The Q-network parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub(crate) conv1: Conv,
    pub(crate) conv2: Conv,
    pub(crate) grid_dense: Dense,
    pub(crate) aux_dense: Dense,
    pub(crate) fusion: Dense,
    pub(crate) out: Dense,
}

impl QNetwork {
    /// He-uniform initialization, deterministic per seed; biases are zero.
    pub fn seeded(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = |fan_in: usize, len: usize| -> Vec<f64> {
            let limit = (6.0 / fan_in as f64).sqrt();
            (0..len).map(|_| rng.random_range(-limit..limit)).collect()
        };
        QNetwork {
            conv1: Conv {
                w: init(PATCH1, PATCH1 * CONV1_FILTERS),
                b: vec![0.0; CONV1_FILTERS],
                patch: PATCH1,
                filters: CONV1_FILTERS,
            },
            conv2: Conv {
                w: init(PATCH2, PATCH2 * CONV2_FILTERS),
                b: vec![0.0; CONV2_FILTERS],
                patch: PATCH2,
                filters: CONV2_FILTERS,
            },
            grid_dense: Dense {
                w: init(FLAT, FLAT * GRID_DENSE),
                b: vec![0.0; GRID_DENSE],
                inputs: FLAT,
                outputs: GRID_DENSE,
            },
            aux_dense: Dense {
                w: init(AUX_LEN, AUX_LEN * AUX_DENSE),
                b: vec![0.0; AUX_DENSE],
                inputs: AUX_LEN,
                outputs: AUX_DENSE,
            },
            fusion: Dense {
                w: init(CONCAT, CONCAT * FUSION_DENSE),
                b: vec![0.0; FUSION_DENSE],
                inputs: CONCAT,
                outputs: FUSION_DENSE,
            },
            out: Dense {
                w: init(FUSION_DENSE, FUSION_DENSE * ACTIONS),
                b: vec![0.0; ACTIONS],
                inputs: FUSION_DENSE,
                outputs: ACTIONS,
            },
        }
    }

    /// All-zero parameters (forward of anything is exactly zero).
    pub fn zeroed() -> Self {
        let mut net = QNetwork::seeded(0);
        for slice in net.param_slices_mut() {
            slice.fill(0.0);
        }
        net
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Parameter slices in the documented checkpoint order:
    /// conv1 w/b, conv2 w/b, grid_dense w/b, aux_dense w/b, fusion w/b,
    /// out w/b.
    pub fn param_slices(&self) -> [&[f64]; 12] {
        [
            &self.conv1.w,
            &self.conv1.b,
            &self.conv2.w,
            &self.conv2.b,
            &self.grid_dense.w,
            &self.grid_dense.b,
            &self.aux_dense.w,
            &self.aux_dense.b,
            &self.fusion.w,
            &self.fusion.b,
            &self.out.w,
            &self.out.b,
        ]
    }

    pub fn param_slices_mut(&mut self) -> [&mut [f64]; 12] {
        [
            &mut self.conv1.w,
            &mut self.conv1.b,
            &mut self.conv2.w,
            &mut self.conv2.b,
            &mut self.grid_dense.w,
            &mut self.grid_dense.b,
            &mut self.aux_dense.w,
            &mut self.aux_dense.b,
            &mut self.fusion.w,
            &mut self.fusion.b,
            &mut self.out.w,
            &mut self.out.b,
        ]
    }

    /// Q-values for one state.
    pub fn forward(&self, grid: &[f64], aux: &[f64], ws: &mut Workspace) -> Result<[f64; 3], QError> {
        if grid.len() != GRID_CELLS || aux.len() != AUX_LEN {
            return Err(QError::ShapeMismatch {
                expected: format!("grid {GRID_CELLS}, aux {AUX_LEN}"),
                got: format!("grid {}, aux {}", grid.len(), aux.len()),
            });
        }
        self.forward_batch(grid, aux, 1, ws)?;
        Ok([ws.q[0], ws.q[1], ws.q[2]])
    }

    /// Q-values for a batch; `grids` is `batch` grids back to back and
    /// `auxs` is `batch` aux triples back to back. Results land in `ws.q`
    /// (`batch x 3`, row-major).
    pub fn forward_batch(
        &self,
        grids: &[f64],
        auxs: &[f64],
        batch: usize,
        ws: &mut Workspace,
    ) -> Result<(), QError> {
        if grids.len() != batch * GRID_CELLS || auxs.len() != batch * AUX_LEN {
            return Err(QError::ShapeMismatch {
                expected: format!("grids {}, auxs {}", batch * GRID_CELLS, batch * AUX_LEN),
                got: format!("grids {}, auxs {}", grids.len(), auxs.len()),
            });
        }
        ws.resize(batch);
        let positions = batch * GRID_CELLS;

        // conv1: im2col over the single input channel, then matmul.
        im2col(grids, 1, batch, &mut ws.col1);
        fill_bias(&mut ws.act1, &self.conv1.b, positions);
        matmul_acc(&mut ws.act1, &ws.col1, &self.conv1.w, positions, PATCH1, CONV1_FILTERS);
        relu(&mut ws.act1);

        // conv2 over the 16-channel activation map.
        im2col(&ws.act1, CONV1_FILTERS, batch, &mut ws.col2);
        fill_bias(&mut ws.act2, &self.conv2.b, positions);
        matmul_acc(&mut ws.act2, &ws.col2, &self.conv2.w, positions, PATCH2, CONV2_FILTERS);
        relu(&mut ws.act2);

        // grid_dense on the flattened conv output.
        fill_bias(&mut ws.gd, &self.grid_dense.b, batch);
        matmul_acc(&mut ws.gd, &ws.act2, &self.grid_dense.w, batch, FLAT, GRID_DENSE);
        relu(&mut ws.gd);

        // aux_dense on the 3-vector.
        fill_bias(&mut ws.aux, &self.aux_dense.b, batch);
        matmul_acc(&mut ws.aux, auxs, &self.aux_dense.w, batch, AUX_LEN, AUX_DENSE);
        relu(&mut ws.aux);

        // concat -> fusion -> out.
        for b in 0..batch {
            ws.concat[b * CONCAT..b * CONCAT + GRID_DENSE]
                .copy_from_slice(&ws.gd[b * GRID_DENSE..(b + 1) * GRID_DENSE]);
            ws.concat[b * CONCAT + GRID_DENSE..(b + 1) * CONCAT]
                .copy_from_slice(&ws.aux[b * AUX_DENSE..(b + 1) * AUX_DENSE]);
        }
        fill_bias(&mut ws.fus, &self.fusion.b, batch);
        matmul_acc(&mut ws.fus, &ws.concat, &self.fusion.w, batch, CONCAT, FUSION_DENSE);
        relu(&mut ws.fus);

        fill_bias(&mut ws.q, &self.out.b, batch);
        matmul_acc(&mut ws.q, &ws.fus, &self.out.w, batch, FUSION_DENSE, ACTIONS);
        Ok(())
    }

    /// Backpropagate `dq` (batch x 3) through the trace left in `ws` by
    /// the matching `forward_batch` call, accumulating into `grads`.
    ///
    /// `grids`/`auxs` must be the same inputs that produced the trace.
    pub fn backward_batch(
        &self,
        grids: &[f64],
        auxs: &[f64],
        batch: usize,
        ws: &mut Workspace,
        dq: &[f64],
        grads: &mut NetGrads,
    ) {
        let positions = batch * GRID_CELLS;
        debug_assert_eq!(dq.len(), batch * ACTIONS);

        // out layer.
        matmul_at_acc(&mut grads.out_w, &ws.fus, dq, batch, FUSION_DENSE, ACTIONS);
        bias_grad(&mut grads.out_b, dq, batch, ACTIONS);
        ws.d_fus.fill(0.0);
        transpose_into(&mut ws.wt, &self.out.w, FUSION_DENSE, ACTIONS);
        matmul_acc(&mut ws.d_fus, dq, &ws.wt, batch, ACTIONS, FUSION_DENSE);
        relu_backward(&mut ws.d_fus, &ws.fus);

        // fusion layer.
        matmul_at_acc(&mut grads.fusion_w, &ws.concat, &ws.d_fus, batch, CONCAT, FUSION_DENSE);
        bias_grad(&mut grads.fusion_b, &ws.d_fus, batch, FUSION_DENSE);
        ws.d_concat.fill(0.0);
        transpose_into(&mut ws.wt, &self.fusion.w, CONCAT, FUSION_DENSE);
        matmul_acc(&mut ws.d_concat, &ws.d_fus, &ws.wt, batch, FUSION_DENSE, CONCAT);

        // split the concat gradient.
        for b in 0..batch {
            ws.d_gd[b * GRID_DENSE..(b + 1) * GRID_DENSE]
                .copy_from_slice(&ws.d_concat[b * CONCAT..b * CONCAT + GRID_DENSE]);
            ws.d_aux[b * AUX_DENSE..(b + 1) * AUX_DENSE]
                .copy_from_slice(&ws.d_concat[b * CONCAT + GRID_DENSE..(b + 1) * CONCAT]);
        }
        relu_backward(&mut ws.d_gd, &ws.gd);
        relu_backward(&mut ws.d_aux, &ws.aux);

        // aux_dense.
        matmul_at_acc(&mut grads.aux_dense_w, auxs, &ws.d_aux, batch, AUX_LEN, AUX_DENSE);
        bias_grad(&mut grads.aux_dense_b, &ws.d_aux, batch, AUX_DENSE);

        // grid_dense.
        matmul_at_acc(&mut grads.grid_dense_w, &ws.act2, &ws.d_gd, batch, FLAT, GRID_DENSE);
        bias_grad(&mut grads.grid_dense_b, &ws.d_gd, batch, GRID_DENSE);
        ws.d_act2.fill(0.0);
        transpose_into(&mut ws.wt, &self.grid_dense.w, FLAT, GRID_DENSE);
        matmul_acc(&mut ws.d_act2, &ws.d_gd, &ws.wt, batch, GRID_DENSE, FLAT);
        relu_backward(&mut ws.d_act2, &ws.act2);

        // conv2.
        matmul_at_acc(&mut grads.conv2_w, &ws.col2, &ws.d_act2, positions, PATCH2, CONV2_FILTERS);
        bias_grad(&mut grads.conv2_b, &ws.d_act2, positions, CONV2_FILTERS);
        ws.d_col2.fill(0.0);
        transpose_into(&mut ws.wt, &self.conv2.w, PATCH2, CONV2_FILTERS);
        matmul_acc(&mut ws.d_col2, &ws.d_act2, &ws.wt, positions, CONV2_FILTERS, PATCH2);
        ws.d_act1.fill(0.0);
        col2im(&ws.d_col2, CONV1_FILTERS, batch, &mut ws.d_act1);
        relu_backward(&mut ws.d_act1, &ws.act1);

        // conv1 (no input gradient needed).
        matmul_at_acc(&mut grads.conv1_w, &ws.col1, &ws.d_act1, positions, PATCH1, CONV1_FILTERS);
        bias_grad(&mut grads.conv1_b, &ws.d_act1, positions, CONV1_FILTERS);

        let _ = grids; // inputs enter via col1, kept for signature symmetry
    }
}

/// Gradient buffers mirroring the parameter layout.
#[derive(Debug, Clone)]
pub struct NetGrads {
    pub conv1_w: Vec<f64>,
    pub conv1_b: Vec<f64>,
    pub conv2_w: Vec<f64>,
    pub conv2_b: Vec<f64>,
    pub grid_dense_w: Vec<f64>,
    pub grid_dense_b: Vec<f64>,
    pub aux_dense_w: Vec<f64>,
    pub aux_dense_b: Vec<f64>,
    pub fusion_w: Vec<f64>,
    pub fusion_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
}

impl NetGrads {
    pub fn zeroed() -> Self {
        NetGrads {
            conv1_w: vec![0.0; PATCH1 * CONV1_FILTERS],
            conv1_b: vec![0.0; CONV1_FILTERS],
            conv2_w: vec![0.0; PATCH2 * CONV2_FILTERS],
            conv2_b: vec![0.0; CONV2_FILTERS],
            grid_dense_w: vec![0.0; FLAT * GRID_DENSE],
            grid_dense_b: vec![0.0; GRID_DENSE],
            aux_dense_w: vec![0.0; AUX_LEN * AUX_DENSE],
            aux_dense_b: vec![0.0; AUX_DENSE],
            fusion_w: vec![0.0; CONCAT * FUSION_DENSE],
            fusion_b: vec![0.0; FUSION_DENSE],
            out_w: vec![0.0; FUSION_DENSE * ACTIONS],
            out_b: vec![0.0; ACTIONS],
        }
    }

    pub fn reset(&mut self) {
        for s in self.slices_mut() {
            s.fill(0.0);
        }
    }

    pub fn slices(&self) -> [&[f64]; 12] {
        [
            &self.conv1_w,
            &self.conv1_b,
            &self.conv2_w,
            &self.conv2_b,
            &self.grid_dense_w,
            &self.grid_dense_b,
            &self.aux_dense_w,
            &self.aux_dense_b,
            &self.fusion_w,
            &self.fusion_b,
            &self.out_w,
            &self.out_b,
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 12] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.grid_dense_w,
            &mut self.grid_dense_b,
            &mut self.aux_dense_w,
            &mut self.aux_dense_b,
            &mut self.fusion_w,
            &mut self.fusion_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }
}

/// Reusable activation and scratch buffers for one batch size.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    batch: usize,
    pub(crate) col1: Vec<f64>,
    pub(crate) act1: Vec<f64>,
    pub(crate) col2: Vec<f64>,
    pub(crate) act2: Vec<f64>,
    pub(crate) gd: Vec<f64>,
    pub(crate) aux: Vec<f64>,
    pub(crate) concat: Vec<f64>,
    pub(crate) fus: Vec<f64>,
    pub q: Vec<f64>,
    pub(crate) d_fus: Vec<f64>,
    pub(crate) d_concat: Vec<f64>,
    pub(crate) d_gd: Vec<f64>,
    pub(crate) d_aux: Vec<f64>,
    pub(crate) d_act2: Vec<f64>,
    pub(crate) d_col2: Vec<f64>,
    pub(crate) d_act1: Vec<f64>,
    /// Scratch for transposed weight matrices during backward.
    pub(crate) wt: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Workspace::default()
    }

    fn resize(&mut self, batch: usize) {
        if self.batch == batch {
            return;
        }
        self.batch = batch;
        let positions = batch * GRID_CELLS;
        self.col1.resize(positions * PATCH1, 0.0);
        self.act1.resize(positions * CONV1_FILTERS, 0.0);
        self.col2.resize(positions * PATCH2, 0.0);
        self.act2.resize(positions * CONV2_FILTERS, 0.0);
        self.gd.resize(batch * GRID_DENSE, 0.0);
        self.aux.resize(batch * AUX_DENSE, 0.0);
        self.concat.resize(batch * CONCAT, 0.0);
        self.fus.resize(batch * FUSION_DENSE, 0.0);
        self.q.resize(batch * ACTIONS, 0.0);
        self.d_fus.resize(batch * FUSION_DENSE, 0.0);
        self.d_concat.resize(batch * CONCAT, 0.0);
        self.d_gd.resize(batch * GRID_DENSE, 0.0);
        self.d_aux.resize(batch * AUX_DENSE, 0.0);
        self.d_act2.resize(positions * CONV2_FILTERS, 0.0);
        self.d_col2.resize(positions * PATCH2, 0.0);
        self.d_act1.resize(positions * CONV1_FILTERS, 0.0);
    }
}

/// Gather 3x3 same-padded patches: input is (batch x 45 x 3 x channels)
/// position-major; output rows are positions, columns are
/// `(channel * 9 + (dy+1) * 3 + (dx+1))`.
fn im2col(input: &[f64], channels: usize, batch: usize, col: &mut [f64]) {
    let patch = channels * KERNEL * KERNEL;
    debug_assert_eq!(col.len(), batch * GRID_CELLS * patch);
    debug_assert_eq!(input.len(), batch * GRID_CELLS * channels);
    let mut row = 0usize;
    for b in 0..batch {
        let base = b * GRID_CELLS * channels;
        for h in 0..GRID_ROWS as i64 {
            for w in 0..GRID_COLS as i64 {
                let out = &mut col[row * patch..(row + 1) * patch];
                for c in 0..channels {
                    for dy in -1..=1i64 {
                        for dx in -1..=1i64 {
                            let (y, x) = (h + dy, w + dx);
                            let k = c * 9 + ((dy + 1) * 3 + (dx + 1)) as usize;
                            out[k] = if (0..GRID_ROWS as i64).contains(&y)
                                && (0..GRID_COLS as i64).contains(&x)
                            {
                                input[base + (y as usize * GRID_COLS + x as usize) * channels + c]
                            } else {
                                0.0
                            };
                        }
                    }
                }
                row += 1;
            }
        }
    }
}

/// Scatter-add the column gradient back to input positions (the im2col
/// adjoint).
fn col2im(d_col: &[f64], channels: usize, batch: usize, d_input: &mut [f64]) {
    let patch = channels * KERNEL * KERNEL;
    let mut row = 0usize;
    for b in 0..batch {
        let base = b * GRID_CELLS * channels;
        for h in 0..GRID_ROWS as i64 {
            for w in 0..GRID_COLS as i64 {
                let src = &d_col[row * patch..(row + 1) * patch];
                for c in 0..channels {
                    for dy in -1..=1i64 {
                        for dx in -1..=1i64 {
                            let (y, x) = (h + dy, w + dx);
                            if (0..GRID_ROWS as i64).contains(&y) && (0..GRID_COLS as i64).contains(&x) {
                                let k = c * 9 + ((dy + 1) * 3 + (dx + 1)) as usize;
                                d_input[base + (y as usize * GRID_COLS + x as usize) * channels + c] +=
                                    src[k];
                            }
                        }
                    }
                }
                row += 1;
            }
        }
    }
}

fn fill_bias(out: &mut [f64], bias: &[f64], rows: usize) {
    let n = bias.len();
    for r in 0..rows {
        out[r * n..(r + 1) * n].copy_from_slice(bias);
    }
}

fn relu(xs: &mut [f64]) {
    for x in xs {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Zero the gradient wherever the forward activation was clamped.
fn relu_backward(dxs: &mut [f64], activations: &[f64]) {
    for (dx, &a) in dxs.iter_mut().zip(activations) {
        if a <= 0.0 {
            *dx = 0.0;
        }
    }
}

fn bias_grad(db: &mut [f64], dy: &[f64], rows: usize, n: usize) {
    for r in 0..rows {
        for (acc, v) in db.iter_mut().zip(&dy[r * n..(r + 1) * n]) {
            *acc += v;
        }
    }
}
