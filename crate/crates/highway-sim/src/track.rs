//! Closed-loop reference line with frenet <-> cartesian conversions.
//!
//! The reference line is stored as ordered waypoints `(x, y, s, nx, ny)`
//! and evaluated between waypoints with a cubic Hermite segment whose
//! endpoint tangents come from central differences. That keeps the line
//! tangent-continuous around the whole loop, including across the wrap
//! from `s = total_length` back to `s = 0`.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SimError;

/// One sample of the lane-0 reference line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    /// Arc length from the loop start, strictly increasing, `< total_length`.
    pub s: f64,
    /// Unit normal toward increasing `d` (the road side).
    pub nx: f64,
    pub ny: f64,
}

/// Closed reference line of the highway loop.
#[derive(Debug, Clone)]
pub struct TrackMap {
    waypoints: Vec<Waypoint>,
    total_length: f64,
    /// Tangent dp/ds at each waypoint (central difference, wrapped).
    tangents: Vec<(f64, f64)>,
    /// Coarse spatial hash over waypoints for nearest-segment lookup.
    grid: HashMap<(i64, i64), Vec<u32>>,
    cell: f64,
}

/// How far off the reference line a point may be and still project.
const CORRIDOR_HALF_WIDTH: f64 = 20.0;

impl TrackMap {
    /// Build a track from waypoints, validating the loop invariants.
    pub fn new(waypoints: Vec<Waypoint>, total_length: f64) -> Result<Self, SimError> {
        if waypoints.len() < 8 {
            return Err(SimError::InvalidArgument(format!(
                "track needs at least 8 waypoints, got {}",
                waypoints.len()
            )));
        }
        if !total_length.is_finite() || total_length <= 0.0 {
            return Err(SimError::InvalidArgument(format!(
                "total_length must be positive and finite, got {total_length}"
            )));
        }
        if waypoints[0].s != 0.0 {
            return Err(SimError::InvalidArgument(
                "first waypoint must sit at s = 0".into(),
            ));
        }
        for pair in waypoints.windows(2) {
            if pair[1].s <= pair[0].s {
                return Err(SimError::InvalidArgument(
                    "waypoint s values must be strictly increasing".into(),
                ));
            }
        }
        let last = waypoints.last().unwrap();
        if last.s >= total_length {
            return Err(SimError::InvalidArgument(
                "last waypoint s must be below total_length".into(),
            ));
        }
        for (i, wp) in waypoints.iter().enumerate() {
            if ![wp.x, wp.y, wp.s, wp.nx, wp.ny].iter().all(|v| v.is_finite()) {
                return Err(SimError::InvalidArgument(format!(
                    "waypoint {i} has non-finite fields"
                )));
            }
            let norm = (wp.nx * wp.nx + wp.ny * wp.ny).sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(SimError::InvalidArgument(format!(
                    "waypoint {i} normal has norm {norm}, expected 1"
                )));
            }
        }
        // The closing segment must be geometrically consistent with its
        // nominal arc length, otherwise the "loop" does not close.
        let closing_chord =
            ((last.x - waypoints[0].x).powi(2) + (last.y - waypoints[0].y).powi(2)).sqrt();
        let closing_ds = total_length - last.s;
        if (closing_chord - closing_ds).abs() > 0.2 * closing_ds + 0.5 {
            return Err(SimError::InvalidArgument(
                "waypoints do not close into a loop of the stated length".into(),
            ));
        }

        let tangents = central_tangents(&waypoints, total_length);
        let (grid, cell) = build_spatial_grid(&waypoints);
        Ok(TrackMap {
            waypoints,
            total_length,
            tangents,
            grid,
            cell,
        })
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    fn wrap_s(&self, s: f64) -> f64 {
        let l = self.total_length;
        let mut w = s % l;
        if w < 0.0 {
            w += l;
        }
        w
    }

    /// Signed wrap-around distance from `from` to `to`, in `(-L/2, L/2]`.
    pub fn signed_s_distance(&self, from: f64, to: f64) -> f64 {
        let l = self.total_length;
        let mut d = (to - from) % l;
        if d > l / 2.0 {
            d -= l;
        } else if d <= -l / 2.0 {
            d += l;
        }
        d
    }

    /// Forward wrap-around distance from `from` to `to`, in `[0, L)`.
    pub fn forward_s_distance(&self, from: f64, to: f64) -> f64 {
        let l = self.total_length;
        let mut d = (to - from) % l;
        if d < 0.0 {
            d += l;
        }
        d
    }

    /// Index of the segment containing wrapped arc length `s`.
    fn segment_of(&self, s: f64) -> usize {
        let n = self.waypoints.len();
        // partition_point returns the first waypoint with wp.s > s.
        let idx = self.waypoints.partition_point(|wp| wp.s <= s);
        if idx == 0 {
            n - 1 // cannot happen for s >= 0, kept for safety
        } else {
            idx - 1
        }
    }

    /// Hermite data for segment `i`: start/end points, tangents, span.
    fn segment(&self, i: usize) -> Segment {
        let n = self.waypoints.len();
        let a = &self.waypoints[i];
        let b = &self.waypoints[(i + 1) % n];
        let s_end = if i + 1 == n { self.total_length } else { b.s };
        Segment {
            p0: (a.x, a.y),
            p1: (b.x, b.y),
            m0: self.tangents[i],
            m1: self.tangents[(i + 1) % n],
            s0: a.s,
            h: s_end - a.s,
        }
    }

    /// Reference-line position at arc length `s` (wrapped).
    pub fn reference_point(&self, s: f64) -> (f64, f64) {
        let sw = self.wrap_s(s);
        let seg = self.segment(self.segment_of(sw));
        seg.position((sw - seg.s0) / seg.h)
    }

    /// Unit normal (toward increasing d) at arc length `s` (wrapped).
    pub fn normal(&self, s: f64) -> (f64, f64) {
        let sw = self.wrap_s(s);
        let seg = self.segment(self.segment_of(sw));
        let (tx, ty) = seg.derivative((sw - seg.s0) / seg.h);
        let norm = (tx * tx + ty * ty).sqrt();
        (ty / norm, -tx / norm)
    }

    /// Convert frenet `(s, d)` to map coordinates.
    pub fn frenet_to_cartesian(&self, s: f64, d: f64) -> Result<(f64, f64), SimError> {
        if !s.is_finite() || !d.is_finite() {
            return Err(SimError::InvalidArgument(format!(
                "non-finite frenet coordinates ({s}, {d})"
            )));
        }
        let (px, py) = self.reference_point(s);
        let (nx, ny) = self.normal(s);
        Ok((px + d * nx, py + d * ny))
    }

    /// Project map coordinates back to frenet `(s, d)`.
    ///
    /// Solves `(q - p(s)) . p'(s) = 0` with Newton iterations on the
    /// Hermite segments near the closest waypoint.
    pub fn cartesian_to_frenet(&self, x: f64, y: f64) -> Result<(f64, f64), SimError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(SimError::InvalidArgument(format!(
                "non-finite map coordinates ({x}, {y})"
            )));
        }
        let n = self.waypoints.len();
        let nearest = self.nearest_waypoint(x, y);
        let mut best: Option<(f64, f64, f64)> = None; // (s, d, residual)
        for off in -3i64..=2 {
            let i = (nearest as i64 + off).rem_euclid(n as i64) as usize;
            if let Some((s, d, res)) = self.project_on_segment(i, x, y) {
                let better = match best {
                    None => true,
                    Some((_, bd, bres)) => {
                        res < bres - 1e-9 || (res < bres + 1e-9 && d.abs() < bd.abs())
                    }
                };
                if better {
                    best = Some((s, d, res));
                }
            }
        }
        if best.is_none() {
            // Rare fallback: scan every segment (imported tracks, far points).
            for i in 0..n {
                if let Some((s, d, res)) = self.project_on_segment(i, x, y) {
                    let better = match best {
                        None => true,
                        Some((_, _, bres)) => res < bres,
                    };
                    if better {
                        best = Some((s, d, res));
                    }
                }
            }
        }
        match best {
            Some((s, d, res)) if res < 1e-3 && d.abs() <= CORRIDOR_HALF_WIDTH => {
                Ok((self.wrap_s(s), d))
            }
            Some((_, d, _)) => Err(SimError::OutOfCorridor {
                x,
                y,
                distance: d.abs(),
            }),
            None => {
                let (wx, wy) = (self.waypoints[nearest].x, self.waypoints[nearest].y);
                Err(SimError::OutOfCorridor {
                    x,
                    y,
                    distance: ((x - wx).powi(2) + (y - wy).powi(2)).sqrt(),
                })
            }
        }
    }

    /// Newton-project `(x, y)` onto segment `i`.
    ///
    /// Returns `(s, d, residual)` when the foot of the perpendicular lies
    /// within the segment (small tolerance at the ends).
    fn project_on_segment(&self, i: usize, x: f64, y: f64) -> Option<(f64, f64, f64)> {
        let seg = self.segment(i);
        let mut u = 0.5;
        for _ in 0..30 {
            let (px, py) = seg.position(u);
            let (dx, dy) = seg.derivative(u);
            let (ddx, ddy) = seg.second_derivative(u);
            let qx = x - px;
            let qy = y - py;
            let f = qx * dx + qy * dy;
            let fp = -(dx * dx + dy * dy) + qx * ddx + qy * ddy;
            if fp.abs() < 1e-12 {
                return None;
            }
            let step = f / fp;
            u -= step / seg.h; // f is in s units; u is normalized
            if !u.is_finite() {
                return None;
            }
            if u < -0.2 || u > 1.2 {
                return None;
            }
            if step.abs() < 1e-11 {
                break;
            }
        }
        if !(-1e-9..=1.0 + 1e-9).contains(&u) {
            return None;
        }
        let u = u.clamp(0.0, 1.0);
        let (px, py) = seg.position(u);
        let (dx, dy) = seg.derivative(u);
        let norm = (dx * dx + dy * dy).sqrt();
        let (nx, ny) = (dy / norm, -dx / norm);
        let d = (x - px) * nx + (y - py) * ny;
        let rx = x - px - d * nx;
        let ry = y - py - d * ny;
        let residual = (rx * rx + ry * ry).sqrt();
        Some((seg.s0 + u * seg.h, d, residual))
    }

    fn nearest_waypoint(&self, x: f64, y: f64) -> usize {
        let cx = (x / self.cell).floor() as i64;
        let cy = (y / self.cell).floor() as i64;
        let mut best = usize::MAX;
        let mut best_d2 = f64::INFINITY;
        for ring in 0..64i64 {
            let mut any = false;
            for gx in (cx - ring)..=(cx + ring) {
                for gy in (cy - ring)..=(cy + ring) {
                    if gx > cx - ring && gx < cx + ring && gy > cy - ring && gy < cy + ring {
                        continue; // interior already visited
                    }
                    if let Some(idxs) = self.grid.get(&(gx, gy)) {
                        any = true;
                        for &i in idxs {
                            let wp = &self.waypoints[i as usize];
                            let d2 = (wp.x - x).powi(2) + (wp.y - y).powi(2);
                            if d2 < best_d2 {
                                best_d2 = d2;
                                best = i as usize;
                            }
                        }
                    }
                }
            }
            // One extra ring after the first hit covers cell-boundary cases.
            if any && best != usize::MAX && ring as f64 * self.cell > best_d2.sqrt() {
                break;
            }
        }
        if best == usize::MAX {
            // Point far outside the grid: linear scan.
            for (i, wp) in self.waypoints.iter().enumerate() {
                let d2 = (wp.x - x).powi(2) + (wp.y - y).powi(2);
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = i;
                }
            }
        }
        best
    }

    /// Write waypoints as CSV lines `x,y,s,nx,ny` with a header.
    pub fn to_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y,s,nx,ny")?;
        for wp in &self.waypoints {
            writeln!(
                out,
                "{:.9},{:.9},{:.9},{:.12},{:.12}",
                wp.x, wp.y, wp.s, wp.nx, wp.ny
            )?;
        }
        Ok(())
    }

    /// Read waypoints from CSV (`x,y,s,nx,ny`, header optional).
    ///
    /// The loop length is taken as the last `s` plus the closing chord back
    /// to the first waypoint.
    pub fn from_csv<R: BufRead>(input: R) -> Result<Self, SimError> {
        let mut waypoints = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| SimError::TrackFormat(e.to_string()))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(SimError::TrackFormat(format!(
                    "line {}: expected 5 comma-separated fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            if lineno == 0 && fields[0].parse::<f64>().is_err() {
                continue; // header
            }
            let mut vals = [0.0f64; 5];
            for (k, raw) in fields.iter().enumerate() {
                vals[k] = raw.parse::<f64>().map_err(|_| {
                    SimError::TrackFormat(format!("line {}: bad number {raw:?}", lineno + 1))
                })?;
            }
            waypoints.push(Waypoint {
                x: vals[0],
                y: vals[1],
                s: vals[2],
                nx: vals[3],
                ny: vals[4],
            });
        }
        if waypoints.len() < 8 {
            return Err(SimError::TrackFormat(
                "track file holds fewer than 8 waypoints".into(),
            ));
        }
        let first = waypoints[0];
        let last = *waypoints.last().unwrap();
        let closing = ((last.x - first.x).powi(2) + (last.y - first.y).powi(2)).sqrt();
        TrackMap::new(waypoints, last.s + closing)
    }
}

struct Segment {
    p0: (f64, f64),
    p1: (f64, f64),
    m0: (f64, f64),
    m1: (f64, f64),
    s0: f64,
    h: f64,
}

impl Segment {
    fn position(&self, u: f64) -> (f64, f64) {
        let u2 = u * u;
        let u3 = u2 * u;
        let b0 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let b1 = u3 - 2.0 * u2 + u;
        let b2 = -2.0 * u3 + 3.0 * u2;
        let b3 = u3 - u2;
        (
            b0 * self.p0.0 + b1 * self.h * self.m0.0 + b2 * self.p1.0 + b3 * self.h * self.m1.0,
            b0 * self.p0.1 + b1 * self.h * self.m0.1 + b2 * self.p1.1 + b3 * self.h * self.m1.1,
        )
    }

    /// dp/ds at normalized parameter `u`.
    fn derivative(&self, u: f64) -> (f64, f64) {
        let u2 = u * u;
        let b0 = (6.0 * u2 - 6.0 * u) / self.h;
        let b1 = 3.0 * u2 - 4.0 * u + 1.0;
        let b2 = (-6.0 * u2 + 6.0 * u) / self.h;
        let b3 = 3.0 * u2 - 2.0 * u;
        (
            b0 * self.p0.0 + b1 * self.m0.0 + b2 * self.p1.0 + b3 * self.m1.0,
            b0 * self.p0.1 + b1 * self.m0.1 + b2 * self.p1.1 + b3 * self.m1.1,
        )
    }

    /// d2p/ds2 at normalized parameter `u`.
    fn second_derivative(&self, u: f64) -> (f64, f64) {
        let b0 = (12.0 * u - 6.0) / (self.h * self.h);
        let b1 = (6.0 * u - 4.0) / self.h;
        let b2 = (-12.0 * u + 6.0) / (self.h * self.h);
        let b3 = (6.0 * u - 2.0) / self.h;
        (
            b0 * self.p0.0 + b1 * self.m0.0 + b2 * self.p1.0 + b3 * self.m1.0,
            b0 * self.p0.1 + b1 * self.m0.1 + b2 * self.p1.1 + b3 * self.m1.1,
        )
    }
}

fn central_tangents(waypoints: &[Waypoint], total_length: f64) -> Vec<(f64, f64)> {
    let n = waypoints.len();
    let mut tangents = Vec::with_capacity(n);
    for i in 0..n {
        let prev = &waypoints[(i + n - 1) % n];
        let next = &waypoints[(i + 1) % n];
        let mut ds = next.s - prev.s;
        if ds <= 0.0 {
            ds += total_length;
        }
        tangents.push(((next.x - prev.x) / ds, (next.y - prev.y) / ds));
    }
    tangents
}

fn build_spatial_grid(waypoints: &[Waypoint]) -> (HashMap<(i64, i64), Vec<u32>>, f64) {
    let cell = 50.0;
    let mut grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for (i, wp) in waypoints.iter().enumerate() {
        let key = ((wp.x / cell).floor() as i64, (wp.y / cell).floor() as i64);
        grid.entry(key).or_default().push(i as u32);
    }
    (grid, cell)
}

/// Generate a smooth random closed loop of exactly `length` meters.
///
/// A unit circle is perturbed with a few low-order radial harmonics,
/// sampled, and rescaled so the polyline perimeter hits `length`.
pub fn generate_track(seed: u64, length: f64) -> Result<TrackMap, SimError> {
    if !length.is_finite() || length <= 1000.0 {
        return Err(SimError::InvalidArgument(format!(
            "track length must be finite and above 1000 m, got {length}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut harmonics = Vec::new();
    for k in 2..=6u32 {
        let amp: f64 = rng.random_range(0.002..0.02) / k as f64;
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        harmonics.push((k as f64, amp, phase));
    }

    let n = ((length / 10.0).round() as usize).max(256);
    let radius = length / std::f64::consts::TAU;
    let mut pts: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let phi = std::f64::consts::TAU * j as f64 / n as f64;
            let rho: f64 = 1.0
                + harmonics
                    .iter()
                    .map(|&(k, a, ph)| a * (k * phi + ph).cos())
                    .sum::<f64>();
            (radius * rho * phi.cos(), radius * rho * phi.sin())
        })
        .collect();

    let mut perimeter = 0.0;
    for j in 0..n {
        let a = pts[j];
        let b = pts[(j + 1) % n];
        perimeter += ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    }
    let scale = length / perimeter;
    for p in &mut pts {
        p.0 *= scale;
        p.1 *= scale;
    }

    let mut s_acc = 0.0;
    let mut raw: Vec<(f64, f64, f64)> = Vec::with_capacity(n);
    for j in 0..n {
        raw.push((pts[j].0, pts[j].1, s_acc));
        let b = pts[(j + 1) % n];
        s_acc += ((b.0 - pts[j].0).powi(2) + (b.1 - pts[j].1).powi(2)).sqrt();
    }

    // Normals from the same central differences the evaluator uses, so the
    // stored normal at a waypoint equals the evaluated normal there.
    let mut waypoints = Vec::with_capacity(n);
    for j in 0..n {
        let (px, py, s) = raw[j];
        let (ax, ay, sa) = raw[(j + n - 1) % n];
        let (bx, by, sb) = raw[(j + 1) % n];
        let mut ds = sb - sa;
        if ds <= 0.0 {
            ds += length;
        }
        let tx = (bx - ax) / ds;
        let ty = (by - ay) / ds;
        let norm = (tx * tx + ty * ty).sqrt();
        waypoints.push(Waypoint {
            x: px,
            y: py,
            s,
            nx: ty / norm,
            ny: -tx / norm,
        });
    }
    TrackMap::new(waypoints, length)
}
