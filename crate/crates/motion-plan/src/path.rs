//! Spline path generation for lane keeping and lane changes.
//!
//! Lateral motion follows a natural cubic spline anchored at the ego pose
//! with target-lane-center anchors 30/60/90 m ahead. Longitudinal motion
//! realizes the rule-based setpoint with an acceleration- and
//! jerk-limited tracker, and every emitted point is spaced so the planar
//! distance per tick equals the realized speed.

use highway_sim::{
    lane_center, lane_of, move_toward, mph_to_mps, PathPoint, TrackMap, VehicleState, WorldState,
    LANE_COUNT, TICK_SECONDS,
};

use crate::error::PlanError;
use crate::speed::{rule_setpoint, SpeedControlConfig};

/// High-level lateral intent of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Maneuver {
    Keep,
    ChangeLeft,
    ChangeRight,
}

/// A tick-sampled drivable path.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub points: Vec<PathPoint>,
    pub target_lane: usize,
    pub maneuver: Maneuver,
}

/// Longitudinal distances of the lane-change anchors, m.
const ANCHORS: [f64; 4] = [0.0, 30.0, 60.0, 90.0];

/// Longitudinal acceleration cap of the tracker, m/s^2.
const LON_ACCEL_MAX: f64 = 5.0;

/// Longitudinal jerk cap of the tracker, m/s^3.
const LON_JERK_MAX: f64 = 6.0;

/// Lateral correction rate while lane keeping, m/s.
const KEEP_LATERAL_RATE: f64 = 0.5;

/// Ticks in a keep-lane decision period (1.0 s).
const KEEP_TICKS: usize = 50;

/// Hard cap on path length; only reachable when the ego is boxed in at
/// zero speed mid-maneuver.
const MAX_PLAN_TICKS: usize = 3000;

/// Plan the path executing `maneuver` from the ego's current pose.
///
/// Interference cars are frozen to constant-speed lane-keeping
/// predictions for the internal speed rule; the real world is re-read at
/// the next decision.
pub fn plan_path(
    track: &TrackMap,
    world: &WorldState,
    maneuver: Maneuver,
    config: &SpeedControlConfig,
) -> Result<PlannedPath, PlanError> {
    let ego = &world.ego;
    if !(0.0..=12.0).contains(&ego.d) {
        return Err(PlanError::OutsideRoad { d: ego.d });
    }
    let current_lane = ego.lane();
    let target_lane = match maneuver {
        Maneuver::Keep => current_lane,
        Maneuver::ChangeLeft => {
            let t = current_lane as i64 - 1;
            if t < 0 {
                return Err(PlanError::IllegalTarget { target: t });
            }
            t as usize
        }
        Maneuver::ChangeRight => {
            let t = current_lane + 1;
            if t >= LANE_COUNT {
                return Err(PlanError::IllegalTarget { target: t as i64 });
            }
            t
        }
    };
    let target_d = lane_center(target_lane);

    let lateral = match maneuver {
        Maneuver::Keep => None,
        _ => {
            let ys = [ego.d, target_d, target_d, target_d];
            Some(NaturalCubic::new(&ANCHORS, &ys))
        }
    };

    let npcs: Vec<VehicleState> = world.npcs.clone();
    let loop_len = world.loop_length;
    let dt = TICK_SECONDS;

    let mut points = Vec::new();
    let mut s = ego.s;
    let mut d = ego.d;
    let mut v = mph_to_mps(ego.speed);
    let mut a = world.ego_lon_accel;
    let mut progress = 0.0; // longitudinal meters since the plan start
    let (mut px, mut py) = track.frenet_to_cartesian(s, d)?;

    for k in 0.. {
        match maneuver {
            Maneuver::Keep => {
                if points.len() >= KEEP_TICKS {
                    break;
                }
            }
            _ => {
                // Stop before the flat extension past the last anchor so
                // the emitted path never carries the landing kink; the
                // spline is already within millimeters of the target
                // center here.
                if progress + (v + LON_ACCEL_MAX * dt) * dt >= ANCHORS[3] {
                    break;
                }
                if points.len() >= MAX_PLAN_TICKS {
                    break; // boxed in at zero speed; resume as keep next decision
                }
            }
        }

        // Same-lane leader among constant-velocity NPC predictions at the
        // time of this tick.
        let t_future = (k + 1) as f64 * dt;
        let lane_now = lane_of(d);
        let mut leader: Option<(f64, f64)> = None;
        for npc in &npcs {
            if npc.lane() != lane_now {
                continue;
            }
            let npc_s = (npc.s + mph_to_mps(npc.speed) * t_future).rem_euclid(loop_len);
            let mut gap = (npc_s - s) % loop_len;
            if gap < 0.0 {
                gap += loop_len;
            }
            if gap <= 1e-9 {
                continue;
            }
            if leader.map_or(true, |(g, _)| gap < g) {
                leader = Some((gap, npc.speed));
            }
        }

        let ego_mph = v / highway_sim::MPH_TO_MPS;
        let (setpoint_mph, raw_mph) = rule_setpoint(ego_mph, leader, config);
        let (v_next, a_next) = advance_speed(v, a, mph_to_mps(setpoint_mph), mph_to_mps(raw_mph), dt);

        let step_len = v_next * dt;
        let (s_next, d_next, x_next, y_next) = if step_len < 1e-12 {
            let d_hold = match &lateral {
                Some(spline) => spline.eval(progress),
                None => move_toward(d, lane_center(current_lane), KEEP_LATERAL_RATE * dt),
            };
            let (x, y) = track.frenet_to_cartesian(s, d_hold)?;
            (s, d_hold, x, y)
        } else {
            // Solve the longitudinal advance so the cartesian spacing
            // equals the realized speed times dt.
            let eval_d = |ds: f64| -> f64 {
                match &lateral {
                    Some(spline) => spline.eval(progress + ds),
                    None => move_toward(d, lane_center(current_lane), KEEP_LATERAL_RATE * dt),
                }
            };
            let dist = |ds: f64| -> Result<f64, PlanError> {
                let (x, y) = track.frenet_to_cartesian(s + ds, eval_d(ds))?;
                Ok(((x - px).powi(2) + (y - py).powi(2)).sqrt())
            };
            let mut x0 = step_len;
            let mut f0 = dist(x0)? - step_len;
            let mut x1 = step_len * (1.0 - f0.signum() * 0.01).max(0.1);
            let mut f1 = dist(x1)? - step_len;
            for _ in 0..12 {
                if f1.abs() < 1e-10 || (f1 - f0).abs() < 1e-15 {
                    break;
                }
                let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
                let x2 = x2.clamp(0.0, 2.0 * step_len);
                x0 = x1;
                f0 = f1;
                x1 = x2;
                f1 = dist(x1)? - step_len;
            }
            let ds = x1;
            let dn = eval_d(ds);
            let (x, y) = track.frenet_to_cartesian(s + ds, dn)?;
            ((s + ds).rem_euclid(loop_len), dn, x, y)
        };

        progress += v_next * dt;
        s = s_next;
        d = d_next;
        v = v_next;
        a = a_next;
        px = x_next;
        py = y_next;
        points.push(PathPoint {
            x: px,
            y: py,
            s,
            d,
            speed_mps: v,
            accel_mps2: a,
        });
    }

    Ok(PlannedPath {
        points,
        target_lane,
        maneuver,
    })
}

/// One tick of the acceleration- and jerk-limited speed tracker.
///
/// `setpoint` is the slew-limited command, `raw_target` the speed it
/// converges to; anticipating the raw target lets acceleration ramp out
/// in time instead of overshooting.
fn advance_speed(v: f64, a: f64, setpoint: f64, raw_target: f64, dt: f64) -> (f64, f64) {
    let chase = ((setpoint - v) / dt).clamp(-LON_ACCEL_MAX, LON_ACCEL_MAX);
    let headroom = raw_target - v;
    // Largest acceleration that can still ramp to zero at jerk J without
    // passing the target, in discrete ticks: sum a*dt while a steps down
    // by J*dt equals a^2/(2J) + a*dt/2.
    let ramp_cap = |h: f64| -> f64 {
        let half = LON_JERK_MAX * dt / 2.0;
        -half + (half * half + 2.0 * LON_JERK_MAX * h).sqrt()
    };
    let a_des = if headroom >= 0.0 {
        chase.min(ramp_cap(headroom))
    } else {
        chase.max(-ramp_cap(-headroom))
    };
    let a_next = move_toward(a, a_des, LON_JERK_MAX * dt);
    let v_next = (v + a_next * dt).max(0.0);
    (v_next, a_next)
}

/// Natural cubic spline through a handful of knots, clamped flat outside.
struct NaturalCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots (zero at both ends).
    m: Vec<f64>,
}

impl NaturalCubic {
    fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        assert!(n >= 3 && ys.len() == n);
        let mut m = vec![0.0; n];
        // Thomas algorithm on the interior knots.
        let count = n - 2;
        let mut diag = vec![0.0; count];
        let mut upper = vec![0.0; count];
        let mut rhs = vec![0.0; count];
        for i in 0..count {
            let h0 = xs[i + 1] - xs[i];
            let h1 = xs[i + 2] - xs[i + 1];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0);
        }
        for i in 1..count {
            let h0 = xs[i + 1] - xs[i]; // lower coefficient of row i
            let w = h0 / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        if count > 0 {
            m[count] = rhs[count - 1] / diag[count - 1];
            for i in (1..count).rev() {
                m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
            }
        }
        NaturalCubic {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let mut i = 0;
        while i + 2 < n && x > self.xs[i + 1] {
            i += 1;
        }
        let h = self.xs[i + 1] - self.xs[i];
        let lo = self.xs[i + 1] - x;
        let hi = x - self.xs[i];
        (self.m[i] * lo.powi(3) + self.m[i + 1] * hi.powi(3)) / (6.0 * h)
            + (self.ys[i] / h - self.m[i] * h / 6.0) * lo
            + (self.ys[i + 1] / h - self.m[i + 1] * h / 6.0) * hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_interpolates_knots() {
        let xs = [0.0, 30.0, 60.0, 90.0];
        let ys = [6.0, 2.0, 2.0, 2.0];
        let spline = NaturalCubic::new(&xs, &ys);
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert!((spline.eval(*x) - y).abs() < 1e-12);
        }
        assert_eq!(spline.eval(-5.0), 6.0);
        assert_eq!(spline.eval(120.0), 2.0);
    }

    #[test]
    fn tracker_holds_steady_state() {
        let v = mph_to_mps(49.5);
        let (v2, a2) = advance_speed(v, 0.0, v, v, TICK_SECONDS);
        assert_eq!(v2, v);
        assert_eq!(a2, 0.0);
    }

    #[test]
    fn tracker_respects_accel_and_jerk_caps() {
        let mut v = 0.0;
        let mut a = 0.0;
        let target = mph_to_mps(49.5);
        let mut setpoint = 0.0f64;
        let mut prev_a = 0.0;
        for _ in 0..3000 {
            setpoint = move_toward(setpoint, target, mph_to_mps(0.224));
            let (v2, a2) = advance_speed(v, a, setpoint, target, TICK_SECONDS);
            assert!(a2.abs() <= LON_ACCEL_MAX + 1e-9);
            assert!((a2 - prev_a).abs() <= LON_JERK_MAX * TICK_SECONDS + 1e-9);
            prev_a = a2;
            v = v2;
            a = a2;
            assert!(v <= target + 0.005, "overshoot: {v} vs {target}");
        }
        assert!((v - target).abs() < 1e-3, "did not converge: {v}");
    }
}
