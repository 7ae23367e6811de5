//! World state and tick-level stepping.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;
use crate::track::TrackMap;
use crate::units::{mph_to_mps, move_toward, mps_to_mph, TICK_SECONDS};
use crate::vehicle::{lane_center, lane_of, NpcBehavior, VehicleState, LANE_COUNT};

/// Upper bound on interference cars.
pub const MAX_NPC_COUNT: usize = 12;

/// NPC speed change per tick equivalent to 5 m/s^2.
const NPC_DELTA_MPH_PER_TICK: f64 = 5.0 * TICK_SECONDS / crate::units::MPH_TO_MPS;

/// Lateral rate of an NPC lane change in m/s (only with the flag enabled).
const NPC_LATERAL_RATE: f64 = 1.0;

/// One tick of the ego's planned path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub x: f64,
    pub y: f64,
    /// Frenet coordinates matching `(x, y)`.
    pub s: f64,
    pub d: f64,
    /// Planned speed arriving at this point, m/s.
    pub speed_mps: f64,
    /// Planned longitudinal acceleration at this point, m/s^2.
    pub accel_mps2: f64,
}

/// Complete simulation state at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub tick: u64,
    /// Simulated seconds, always `tick * 0.02`.
    pub time: f64,
    pub ego: VehicleState,
    pub npcs: Vec<VehicleState>,
    pub behaviors: Vec<NpcBehavior>,
    /// Loop length of the track this world runs on.
    pub loop_length: f64,
    /// Ego longitudinal acceleration carried between planner calls, m/s^2.
    pub ego_lon_accel: f64,
    /// Recycle cars that drop far behind the ego to fresh slots ahead,
    /// keeping the interference field populated for a whole episode.
    pub rolling_traffic: bool,
    /// Target lane of an NPC mid lane-change (only with the flag enabled).
    npc_target_lane: Vec<Option<usize>>,
    rng: ChaCha8Rng,
}

/// A car this far behind the ego leaves the relevant window.
const RECYCLE_BEHIND: f64 = 80.0;

/// Recycled cars reappear this far ahead of the ego: beyond the state
/// window and the shield horizon, near enough to matter within a minute.
const RECYCLE_AHEAD_MIN: f64 = 80.0;
const RECYCLE_AHEAD_MAX: f64 = 260.0;

/// Cruise speed law for interference cars, MPH in [30, 48]: mostly
/// near-flow traffic with a slower minority that actually needs passing.
fn draw_cruise_speed(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_range(0.0..1.0) < 0.2 {
        rng.random_range(30.0..36.0)
    } else {
        rng.random_range(45.0..48.0)
    }
}

impl WorldState {
    /// Assemble a world; behaviors default to cruising at the spawn speed.
    pub fn new(track: &TrackMap, ego: VehicleState, npcs: Vec<VehicleState>, seed: u64) -> Self {
        let behaviors = npcs
            .iter()
            .map(|v| NpcBehavior::cruising(v.speed))
            .collect();
        let count = npcs.len();
        WorldState {
            tick: 0,
            time: 0.0,
            ego,
            npcs,
            behaviors,
            loop_length: track.total_length(),
            ego_lon_accel: 0.0,
            rolling_traffic: false,
            npc_target_lane: vec![None; count],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn enable_npc_lane_changes(&mut self) {
        for b in &mut self.behaviors {
            b.lane_change_enabled = true;
        }
    }

    fn wrap(&self, s: f64) -> f64 {
        let l = self.loop_length;
        let mut w = s % l;
        if w < 0.0 {
            w += l;
        }
        w
    }

    /// Signed wrap distance from `from` to `to`, in `(-L/2, L/2]`.
    pub fn signed_gap(&self, from: f64, to: f64) -> f64 {
        let l = self.loop_length;
        let mut d = (to - from) % l;
        if d > l / 2.0 {
            d -= l;
        } else if d <= -l / 2.0 {
            d += l;
        }
        d
    }

    /// Forward wrap distance from `from` to `to`, in `[0, L)`.
    pub fn forward_gap(&self, from: f64, to: f64) -> f64 {
        let l = self.loop_length;
        let mut d = (to - from) % l;
        if d < 0.0 {
            d += l;
        }
        d
    }

    /// Nearest vehicle ahead of `(s, lane)`, with its forward center gap.
    ///
    /// Scans NPCs and optionally the ego; a vehicle exactly at `s` does not
    /// count as ahead.
    pub fn leader_in_lane(&self, s: f64, lane: usize, include_ego: bool) -> Option<(&VehicleState, f64)> {
        let mut best: Option<(&VehicleState, f64)> = None;
        for v in self
            .npcs
            .iter()
            .chain(include_ego.then_some(&self.ego))
        {
            if v.lane() != lane {
                continue;
            }
            let gap = self.forward_gap(s, v.s);
            if gap <= 1e-9 {
                continue;
            }
            if best.map_or(true, |(_, g)| gap < g) {
                best = Some((v, gap));
            }
        }
        best
    }
}

/// Place `count` interference cars on lane centers.
///
/// Same-lane center gaps come out at 30 m or more, speeds are uniform in
/// [30, 48] MPH, and lane 1 is kept clear near s = 0 where the ego
/// starts. Cars are concentrated in a window ahead of the start line so
/// a faster ego actually has traffic to negotiate during its lap.
pub fn spawn_npcs(track: &TrackMap, seed: u64, count: usize) -> Result<Vec<VehicleState>, SimError> {
    if count > MAX_NPC_COUNT {
        return Err(SimError::InvalidArgument(format!(
            "npc count {count} exceeds the {MAX_NPC_COUNT}-car limit"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let length = track.total_length();
    // Traffic pack ahead of the start line, compact enough that the ego
    // catches it early and then drives inside it for most of the lap.
    let window_start = (0.05 * length).min(150.0);
    let window_end = window_start + (0.25 * length).min(750.0);
    let mut placed: Vec<VehicleState> = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while placed.len() < count {
        attempts += 1;
        if attempts > 10_000 {
            return Err(SimError::InvalidArgument(format!(
                "could not place {count} cars with 30 m same-lane gaps"
            )));
        }
        let lane = rng.random_range(0..LANE_COUNT);
        let s: f64 = rng.random_range(window_start..window_end);
        let speed = draw_cruise_speed(&mut rng);
        // Keep the ego spawn corridor clear. The ego starts stationary at
        // s = 0 in lane 1; a fast car close behind could not brake inside
        // the 15 m follow rule, so the exclusion reaches further back.
        if lane == 1 {
            let mut rel = s % length;
            if rel > length / 2.0 {
                rel -= length;
            }
            if (-90.0..40.0).contains(&rel) {
                continue;
            }
        }
        let clear = placed.iter().all(|other| {
            if lane_of(other.d) != lane {
                return true;
            }
            let mut gap = (other.s - s) % length;
            if gap < 0.0 {
                gap += length;
            }
            gap.min(length - gap) >= 30.0
        });
        if !clear {
            continue;
        }
        let id = placed.len() as u32 + 1;
        placed.push(VehicleState::new(id, s, lane_center(lane), speed));
    }
    Ok(placed)
}

/// Advance the world by one tick.
///
/// The ego adopts the first point of `ego_path_segment`; each NPC applies
/// gap-keeping against the vehicle ahead in its lane and moves at its
/// (possibly adjusted) speed.
pub fn step_world(world: &mut WorldState, ego_path_segment: &[PathPoint], dt: f64) -> Result<(), SimError> {
    if (dt - TICK_SECONDS).abs() > 1e-12 {
        return Err(SimError::InvalidArgument(format!(
            "tick must be {TICK_SECONDS} s, got {dt}"
        )));
    }
    let point = ego_path_segment.first().ok_or(SimError::PlannerStarvation)?;

    // Decisions for this tick read the state at tick entry.
    let snapshot: Vec<(f64, usize, f64)> = world
        .npcs
        .iter()
        .chain(std::iter::once(&world.ego))
        .map(|v| (v.s, v.lane(), v.speed))
        .collect();

    world.ego.s = world.wrap(point.s);
    world.ego.d = point.d;
    world.ego.speed = mps_to_mph(point.speed_mps);
    world.ego_lon_accel = point.accel_mps2;
    debug_assert!(world.ego.speed < 50.0, "ego speed {} >= 50", world.ego.speed);

    for i in 0..world.npcs.len() {
        let (my_s, my_lane, _) = snapshot[i];
        let behavior = world.behaviors[i];

        let mut leader: Option<(f64, f64)> = None; // (gap, speed)
        for (j, &(s, lane, speed)) in snapshot.iter().enumerate() {
            if j == i || lane != my_lane {
                continue;
            }
            let gap = {
                let mut g = (s - my_s) % world.loop_length;
                if g < 0.0 {
                    g += world.loop_length;
                }
                g
            };
            if gap <= 1e-9 {
                continue;
            }
            if leader.map_or(true, |(g, _)| gap < g) {
                leader = Some((gap, speed));
            }
        }

        let target = match leader {
            Some((gap, leader_speed)) if gap < behavior.follow_gap => {
                leader_speed.min(behavior.cruise_speed)
            }
            _ => behavior.cruise_speed,
        };
        let npc = &mut world.npcs[i];
        npc.speed = move_toward(npc.speed, target, NPC_DELTA_MPH_PER_TICK);
        npc.s = {
            let mut s = (npc.s + mph_to_mps(npc.speed) * dt) % world.loop_length;
            if s < 0.0 {
                s += world.loop_length;
            }
            s
        };

        if behavior.lane_change_enabled {
            step_npc_lane_change(world, i, &snapshot, dt);
        }
    }

    if world.rolling_traffic {
        recycle_dropped_cars(world);
    }

    world.tick += 1;
    world.time = world.tick as f64 * TICK_SECONDS;
    Ok(())
}

/// Move cars that fell out of the window behind the ego to fresh slots
/// ahead, with a new cruise speed and clear same-lane spacing.
fn recycle_dropped_cars(world: &mut WorldState) {
    for i in 0..world.npcs.len() {
        let gap = world.signed_gap(world.ego.s, world.npcs[i].s);
        if gap > -RECYCLE_BEHIND {
            continue;
        }
        for _ in 0..50 {
            let ahead = world
                .rng
                .random_range(RECYCLE_AHEAD_MIN..RECYCLE_AHEAD_MAX);
            let lane = world.rng.random_range(0..LANE_COUNT);
            let speed = draw_cruise_speed(&mut world.rng);
            // Stage slower cars farther out so obstacles arrive at a
            // steady cadence instead of piling up around a slowed ego.
            let stagger = 12.0 * (48.0 - speed).max(0.0);
            let s = (world.ego.s + ahead + stagger).rem_euclid(world.loop_length);
            let clear = (0..world.npcs.len()).all(|j| {
                if j == i || world.npcs[j].lane() != lane {
                    return true;
                }
                world.signed_gap(s, world.npcs[j].s).abs() >= 30.0
            });
            if clear {
                let npc = &mut world.npcs[i];
                npc.s = s;
                npc.d = lane_center(lane);
                npc.speed = speed;
                world.behaviors[i].cruise_speed = speed;
                world.npc_target_lane[i] = None;
                break;
            }
        }
    }
}

/// Minimal lane-change behavior for NPCs, off by default.
fn step_npc_lane_change(world: &mut WorldState, i: usize, snapshot: &[(f64, usize, f64)], dt: f64) {
    if let Some(target) = world.npc_target_lane[i] {
        let center = lane_center(target);
        let d = world.npcs[i].d;
        let next = move_toward(d, center, NPC_LATERAL_RATE * dt);
        world.npcs[i].d = next;
        if (next - center).abs() < 1e-9 {
            world.npc_target_lane[i] = None;
        }
        return;
    }
    let (my_s, my_lane, my_speed) = snapshot[i];
    let behavior = world.behaviors[i];
    // Only consider moving when blocked by a slower leader.
    let blocked = snapshot.iter().enumerate().any(|(j, &(s, lane, speed))| {
        if j == i || lane != my_lane {
            return false;
        }
        let mut gap = (s - my_s) % world.loop_length;
        if gap < 0.0 {
            gap += world.loop_length;
        }
        gap > 1e-9 && gap < behavior.follow_gap && speed < my_speed - 2.0
    });
    if !blocked {
        return;
    }
    for target in [my_lane.checked_sub(1), (my_lane + 1 < LANE_COUNT).then_some(my_lane + 1)]
        .into_iter()
        .flatten()
    {
        let open = snapshot.iter().enumerate().all(|(j, &(s, lane, _))| {
            if j == i || lane != target {
                return true;
            }
            let mut gap = (s - my_s) % world.loop_length;
            if gap < 0.0 {
                gap += world.loop_length;
            }
            gap.min(world.loop_length - gap) > 2.0 * behavior.follow_gap
        });
        if open {
            world.npc_target_lane[i] = Some(target);
            return;
        }
    }
}

/// True when the ego's frenet footprint overlaps any NPC's.
///
/// Footprints are axis-aligned in frenet coordinates: overlap needs both
/// the wrapped `s` distance under the mean length and the `d` distance
/// under the mean width.
pub fn detect_collision(world: &WorldState) -> bool {
    let ego = &world.ego;
    world.npcs.iter().any(|npc| {
        let ds = world.signed_gap(ego.s, npc.s).abs();
        let dd = (ego.d - npc.d).abs();
        ds < (ego.length + npc.length) / 2.0 && dd < (ego.width + npc.width) / 2.0
    })
}

impl WorldState {
    /// Deterministic draw from the world's own stream (reserved for
    /// stochastic behaviors; stepping itself is deterministic).
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
