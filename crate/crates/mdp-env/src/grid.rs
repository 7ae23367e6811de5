//! Occupancy-grid state encoding.
//!
//! The grid is a 45x3 matrix covering 60 m ahead to 30 m behind the ego
//! across the three lanes. Row 0 is farthest ahead and each row spans 2 m
//! of longitudinal distance. Every vehicle in the window paints four
//! consecutive rows of its lane's column, centered on its body, with its
//! speed normalized to `+/- speed/100` (positive for the ego, negative
//! for interference cars); free cells hold 1.0.

use highway_sim::WorldState;

pub const GRID_ROWS: usize = 45;
pub const GRID_COLS: usize = 3;

/// Forward extent of the window, m.
const AHEAD: f64 = 60.0;
/// Backward extent of the window, m.
const BEHIND: f64 = 30.0;
/// Longitudinal span of one row, m.
const ROW_SPAN: f64 = 2.0;
/// Rows painted per vehicle.
const ROWS_PER_CAR: usize = 4;
/// Value of an unoccupied cell.
const FREE: f64 = 1.0;

/// The 45x3 matrix fed to the Q-network, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    cells: Vec<f64>,
}

impl OccupancyGrid {
    fn free() -> Self {
        OccupancyGrid {
            cells: vec![FREE; GRID_ROWS * GRID_COLS],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * GRID_COLS + col]
    }

    fn set(&mut self, row: usize, col: usize, value: f64) {
        self.cells[row * GRID_COLS + col] = value;
    }

    /// Row-major cell values, length 135.
    pub fn as_slice(&self) -> &[f64] {
        &self.cells
    }
}

/// The 3-vector companion input: normalized ego speed and lane-exists flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxFeatures {
    /// Ego speed / 50, in [0, 1).
    pub s1: f64,
    /// 1 when a lane exists to the left.
    pub s2: f64,
    /// 1 when a lane exists to the right.
    pub s3: f64,
}

impl AuxFeatures {
    pub fn as_array(&self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }
}

/// Top row index of the four-row window for a vehicle at `rel` meters
/// relative to the ego (positive ahead).
///
/// Rows `k..k+4` span `[52 - 2k, 60 - 2k)`, centered at `56 - 2k`, so the
/// window centered nearest to `rel` has `k = round_half_up((56 - rel)/2)`.
/// May fall outside `0..45`; callers clip.
fn window_top_row(rel: f64) -> i64 {
    ((AHEAD - 2.0 * ROW_SPAN - rel) / ROW_SPAN + 0.5).floor() as i64
}

/// Encode the world into the grid and aux features.
///
/// Vehicles are painted far-to-near so the nearest vehicle wins any
/// contested cell; among equally distant vehicles the smaller id wins.
pub fn encode_state(world: &WorldState) -> (OccupancyGrid, AuxFeatures) {
    let mut grid = OccupancyGrid::free();
    let ego = &world.ego;

    // (|rel|, id, rel, lane, value) per vehicle inside the window.
    let mut painters: Vec<(f64, u32, f64, usize, f64)> = Vec::with_capacity(world.npcs.len() + 1);
    painters.push((0.0, ego.id, 0.0, ego.lane(), ego.speed / 100.0));
    for npc in &world.npcs {
        let rel = world.signed_gap(ego.s, npc.s);
        if !(-BEHIND..AHEAD).contains(&rel) {
            continue;
        }
        painters.push((rel.abs(), npc.id, rel, npc.lane(), -npc.speed / 100.0));
    }
    // Paint order: far first, and for ties the larger id first, so the
    // near / smaller-id vehicle overwrites.
    painters.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| b.1.cmp(&a.1))
    });

    for &(_, _, rel, lane, value) in &painters {
        let top = window_top_row(rel);
        for row in top..top + ROWS_PER_CAR as i64 {
            if (0..GRID_ROWS as i64).contains(&row) {
                grid.set(row as usize, lane, value);
            }
        }
    }

    let lane = ego.lane();
    let aux = AuxFeatures {
        s1: ego.speed / 50.0,
        s2: if lane > 0 { 1.0 } else { 0.0 },
        s3: if lane + 1 < GRID_COLS { 1.0 } else { 0.0 },
    };
    (grid, aux)
}
