//! Sphere-threat detour planner.
//!
//! The route is a polyline of waypoints. Each straight leg is intersected
//! with closed threat spheres; every conflicted stretch is replaced by cubic
//! Bezier detours that leave the leg `l_s` before the sphere, pass an apex
//! offset over, under or beside it, and rejoin the leg `l_s` after it. All
//! detour tangents at joins lie along the leg direction. Durations are
//! stretched afterwards until sampled speed and acceleration respect the
//! limits.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{atan2, ceil, sqrt, Vec3};
use crate::trajectory::{Reference, ReferenceSample, YawPolicy, YawTracker};

/// Duration given to segments that need no time at all (zero length).
pub const MIN_DURATION: f64 = 0.01;
/// Margin inflation attempts after the first build.
pub const MAX_INFLATIONS: usize = 5;
pub const INFLATION_FACTOR: f64 = 1.5;

const SPEED_GRID: usize = 1024;
const LIMIT_GRID: usize = 256;
/// Legs with `|d_z|` above this have too little horizontal run for a
/// vertical apex and detour sideways instead.
const STEEP_LEG: f64 = 0.9;
const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSphere {
    pub id: u32,
    /// m, E-frame
    pub center: Vec3,
    /// m
    pub r_safe: f64,
}

impl ObstacleSphere {
    pub fn new(id: u32, center: Vec3, r_safe: f64) -> Self {
        Self { id, center, r_safe }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        if !(self.r_safe > 0.0) || !self.r_safe.is_finite() {
            return Err(PlannerError::InvalidRequest("sphere r_safe must be > 0"));
        }
        if !self.center.is_finite() {
            return Err(PlannerError::InvalidRequest("sphere center must be finite"));
        }
        Ok(())
    }

    /// Distance from `p` to the sphere surface; negative inside.
    pub fn clearance(&self, p: Vec3) -> f64 {
        p.distance(self.center) - self.r_safe
    }
}

fn default_margin() -> f64 {
    0.5
}

fn default_ls_factor() -> f64 {
    2.0
}

fn default_sample_dt() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    pub waypoints: Vec<Vec3>,
    /// m/s
    pub v_max: f64,
    /// m/s²
    pub a_max: f64,
    /// m
    pub z_min: f64,
    /// m
    pub z_max: f64,
    /// s
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    /// Apex standoff beyond `r_safe` (m).
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// `l_s` as a multiple of `r_safe`.
    #[serde(default = "default_ls_factor")]
    pub ls_factor: f64,
}

impl PlanRequest {
    pub fn new(waypoints: Vec<Vec3>, v_max: f64, a_max: f64, z_min: f64, z_max: f64) -> Self {
        Self {
            waypoints,
            v_max,
            a_max,
            z_min,
            z_max,
            sample_dt: default_sample_dt(),
            margin: default_margin(),
            ls_factor: default_ls_factor(),
        }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = PlannerError::InvalidRequest;
        if self.waypoints.len() < 2 {
            return Err(bad("need at least 2 waypoints"));
        }
        if self.waypoints.iter().any(|w| !w.is_finite()) {
            return Err(bad("waypoints must be finite"));
        }
        if !(self.v_max > 0.0) || !self.v_max.is_finite() {
            return Err(bad("v_max must be > 0"));
        }
        if !(self.a_max > 0.0) || !self.a_max.is_finite() {
            return Err(bad("a_max must be > 0"));
        }
        if !(self.z_min < self.z_max) {
            return Err(bad("z_min must be < z_max"));
        }
        if !(self.sample_dt > 0.0) || !self.sample_dt.is_finite() {
            return Err(bad("sample_dt must be > 0"));
        }
        if !(self.margin >= 0.0) || !self.margin.is_finite() {
            return Err(bad("margin must be >= 0"));
        }
        if !(self.ls_factor >= 0.0) || !self.ls_factor.is_finite() {
            return Err(bad("ls_factor must be >= 0"));
        }
        Ok(())
    }

    /// Arc step used for clearance sampling: the distance covered at
    /// `v_max` in `min(sample_dt, 0.05 s)`.
    pub fn arc_step(&self) -> f64 {
        self.v_max * self.sample_dt.min(0.05)
    }

    fn in_corridor(&self, z: f64) -> bool {
        z >= self.z_min - GEOM_EPS && z <= self.z_max + GEOM_EPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfeasibleReason {
    WaypointInsideObstacle {
        id: u32,
    },
    /// Smallest surface distance reached by the last attempt (m).
    Clearance {
        min_clearance: f64,
    },
    Corridor,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PlannerError {
    #[error("invalid plan request: {0}")]
    InvalidRequest(&'static str),
    #[error("neither detour apex fits the altitude corridor")]
    NoVerticalRoom,
    #[error("no feasible plan: {0:?}")]
    PlanInfeasible(InfeasibleReason),
}

/// One leg/sphere intersection. Parameters are along the leg, `0` at its
/// start waypoint and `1` at its end, and may lie outside `[0, 1]` when the
/// sphere covers a waypoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub leg: usize,
    pub sphere_id: u32,
    /// Index into the obstacle slice.
    pub sphere: usize,
    pub t_entry: f64,
    pub t_exit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerticalChoice {
    Over,
    Under,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Over,
    Under,
    /// Toward `ẑ × d`.
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detour {
    pub leg: usize,
    pub sphere_ids: Vec<u32>,
    pub side: Side,
    /// Signed apex offset from the leg along the detour direction (m).
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BezierSegment {
    pub points: [Vec3; 4],
    /// s
    pub duration: f64,
}

impl BezierSegment {
    pub fn straight(a: Vec3, b: Vec3) -> Self {
        Self {
            points: [a, a.lerp(b, 1.0 / 3.0), a.lerp(b, 2.0 / 3.0), b],
            duration: MIN_DURATION,
        }
    }

    /// Curve from `a` to `b` that leaves and arrives along the unit
    /// direction `d`.
    pub fn tangent_blend(a: Vec3, b: Vec3, d: Vec3) -> Self {
        let l = a.distance(b) / 3.0;
        Self {
            points: [a, a + d * l, b - d * l, b],
            duration: MIN_DURATION,
        }
    }

    pub fn start(&self) -> Vec3 {
        self.points[0]
    }

    pub fn end(&self) -> Vec3 {
        self.points[3]
    }

    pub fn point(&self, s: f64) -> Vec3 {
        let [p0, p1, p2, p3] = self.points;
        let u = 1.0 - s;
        p0 * (u * u * u) + p1 * (3.0 * u * u * s) + p2 * (3.0 * u * s * s) + p3 * (s * s * s)
    }

    /// `dB/ds`
    pub fn tangent(&self, s: f64) -> Vec3 {
        let [p0, p1, p2, p3] = self.points;
        let u = 1.0 - s;
        ((p1 - p0) * (u * u) + (p2 - p1) * (2.0 * u * s) + (p3 - p2) * (s * s)) * 3.0
    }

    /// `d²B/ds²`
    pub fn second(&self, s: f64) -> Vec3 {
        let [p0, p1, p2, p3] = self.points;
        ((p2 - p1 * 2.0 + p0) * (1.0 - s) + (p3 - p2 * 2.0 + p1) * s) * 6.0
    }

    pub fn velocity(&self, s: f64) -> Vec3 {
        self.tangent(s) * (1.0 / self.duration)
    }

    pub fn acceleration(&self, s: f64) -> Vec3 {
        self.second(s) * (1.0 / (self.duration * self.duration))
    }

    /// Control polygon length, an upper bound on arc length.
    pub fn polygon_length(&self) -> f64 {
        let p = &self.points;
        p[0].distance(p[1]) + p[1].distance(p[2]) + p[2].distance(p[3])
    }

    /// `max |dB/ds|` over the segment.
    pub fn max_tangent_norm(&self) -> f64 {
        let f = |s: f64| -self.tangent(s).norm();
        let (best, _) = grid_min(&f, SPEED_GRID);
        -best
    }

    /// `max |d²B/ds²|`; the second derivative is linear in `s`, so the
    /// endpoints bound it.
    pub fn max_second_norm(&self) -> f64 {
        self.second(0.0).norm().max(self.second(1.0).norm())
    }

    /// Exact range of one coordinate (0 = x, 1 = y, 2 = z).
    pub fn axis_range(&self, axis: usize) -> (f64, f64) {
        let c: [f64; 4] = core::array::from_fn(|i| self.points[i].to_array()[axis]);
        let mut lo = c[0].min(c[3]);
        let mut hi = c[0].max(c[3]);
        // dB/ds ∝ a s² + b s + k
        let a = -c[0] + 3.0 * c[1] - 3.0 * c[2] + c[3];
        let b = 2.0 * (c[0] - 2.0 * c[1] + c[2]);
        let k = c[1] - c[0];
        let mut consider = |s: f64| {
            if s > 0.0 && s < 1.0 {
                let u = 1.0 - s;
                let v = c[0] * u * u * u
                    + 3.0 * c[1] * u * u * s
                    + 3.0 * c[2] * u * s * s
                    + c[3] * s * s * s;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        };
        if a.abs() < 1e-12 {
            if b.abs() > 1e-12 {
                consider(-k / b);
            }
        } else {
            let disc = b * b - 4.0 * a * k;
            if disc >= 0.0 {
                let r = sqrt(disc);
                consider((-b + r) / (2.0 * a));
                consider((-b - r) / (2.0 * a));
            }
        }
        (lo, hi)
    }
}

/// Minimum of `f` on `[0, 1]`: grid scan followed by golden-section
/// refinement of every local minimum on the grid. Returns `(f_min, s_min)`.
fn grid_min(f: &dyn Fn(f64) -> f64, n: usize) -> (f64, f64) {
    let vals: Vec<f64> = (0..=n).map(|k| f(k as f64 / n as f64)).collect();
    let mut best = (vals[0], 0.0);
    for k in 0..=n {
        let left = if k == 0 { f64::INFINITY } else { vals[k - 1] };
        let right = if k == n { f64::INFINITY } else { vals[k + 1] };
        if vals[k] <= left && vals[k] <= right {
            let a = (k.max(1) - 1) as f64 / n as f64;
            let b = (k + 1).min(n) as f64 / n as f64;
            let (x, fx) = golden(f, a, b);
            let cand = if fx < vals[k] {
                (fx, x)
            } else {
                (vals[k], k as f64 / n as f64)
            };
            if cand.0 < best.0 {
                best = cand;
            }
        }
    }
    best
}

fn golden(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const R: f64 = 0.618_033_988_749_894_8;
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - R * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + R * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub velocity: bool,
    pub acceleration: bool,
    pub corridor: bool,
}

/// Geometry of one join between consecutive segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoinDefect {
    /// Endpoint mismatch (m).
    pub gap: f64,
    /// Angle between outgoing and incoming tangents (rad); zero when either
    /// tangent vanishes.
    pub angle: f64,
    /// The join sits on a user waypoint, where the route may turn.
    pub corner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub segments: Vec<BezierSegment>,
    /// `corners[i]` marks the join between segments `i` and `i + 1` as a
    /// user waypoint.
    pub corners: Vec<bool>,
    pub detours: Vec<Detour>,
    /// Distance to the nearest sphere surface at each clearance sample (m).
    pub clearance: Vec<f64>,
    /// Smallest surface distance along the whole path, refined between
    /// samples (m). Infinite without obstacles.
    pub min_clearance: f64,
    /// Apex margin that produced this path (m).
    pub margin: f64,
    pub feasibility: Feasibility,
}

impl PlannedPath {
    /// Straight polyline through `waypoints` with minimal durations.
    pub fn polyline(waypoints: &[Vec3]) -> Self {
        let segments: Vec<BezierSegment> = waypoints
            .windows(2)
            .map(|w| BezierSegment::straight(w[0], w[1]))
            .collect();
        let corners = alloc::vec![true; segments.len().saturating_sub(1)];
        Self {
            segments,
            corners,
            detours: Vec::new(),
            clearance: Vec::new(),
            min_clearance: f64::INFINITY,
            margin: 0.0,
            feasibility: Feasibility {
                velocity: false,
                acceleration: false,
                corridor: true,
            },
        }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn start(&self) -> Vec3 {
        self.segments.first().map_or(Vec3::ZERO, |s| s.start())
    }

    pub fn end(&self) -> Vec3 {
        self.segments.last().map_or(Vec3::ZERO, |s| s.end())
    }

    /// Segment index and local parameter at time `t`, clamped to the path.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let mut start = 0.0;
        let last = self.segments.len() - 1;
        for (i, seg) in self.segments.iter().enumerate() {
            let end = start + seg.duration;
            if t < end || i == last {
                let s = ((t - start) / seg.duration).clamp(0.0, 1.0);
                return (i, s);
            }
            start = end;
        }
        (last, 1.0)
    }

    pub fn join_defects(&self) -> Vec<JoinDefect> {
        self.segments
            .windows(2)
            .zip(&self.corners)
            .map(|(w, &corner)| {
                let a = w[0].tangent(1.0);
                let b = w[1].tangent(0.0);
                let angle = if a.norm() < GEOM_EPS || b.norm() < GEOM_EPS {
                    0.0
                } else {
                    atan2(a.cross(b).norm(), a.dot(b))
                };
                JoinDefect {
                    gap: w[0].end().distance(w[1].start()),
                    angle,
                    corner,
                }
            })
            .collect()
    }

    /// Smallest surface distance to any of `obstacles`, refined between a
    /// grid of `per_segment` samples on each segment.
    pub fn min_clearance_to(&self, obstacles: &[ObstacleSphere], per_segment: usize) -> f64 {
        let mut best = f64::INFINITY;
        for seg in &self.segments {
            for o in obstacles {
                let f = |s: f64| seg.point(s).distance(o.center);
                let (d, _) = grid_min(&f, per_segment.max(2));
                best = best.min(d - o.r_safe);
            }
        }
        best
    }
}

impl Reference for PlannedPath {
    fn sample(&self, t: f64) -> ReferenceSample {
        let total = self.duration();
        if t >= total {
            return ReferenceSample {
                t,
                pos: self.end(),
                ..ReferenceSample::default()
            };
        }
        let (i, s) = self.locate(t.max(0.0));
        let seg = &self.segments[i];
        ReferenceSample {
            t,
            pos: seg.point(s),
            vel: seg.velocity(s),
            acc: seg.acceleration(s),
            ..ReferenceSample::default()
        }
    }
}

struct Leg {
    p0: Vec3,
    p1: Vec3,
    d: Vec3,
    len: f64,
}

impl Leg {
    fn new(p0: Vec3, p1: Vec3) -> Self {
        let len = p0.distance(p1);
        let d = (p1 - p0).normalized().unwrap_or(Vec3::new(1.0, 0.0, 0.0));
        Self { p0, p1, d, len }
    }

    fn at(&self, s: f64) -> Vec3 {
        self.p0 + self.d * s
    }
}

/// Exact leg/sphere intersections, ordered along the route.
pub fn detect_conflicts(request: &PlanRequest, obstacles: &[ObstacleSphere]) -> Vec<Conflict> {
    let mut out = Vec::new();
    for (leg, w) in request.waypoints.windows(2).enumerate() {
        let dv = w[1] - w[0];
        let a = dv.dot(dv);
        if a == 0.0 {
            continue;
        }
        let mut on_leg = Vec::new();
        for (k, o) in obstacles.iter().enumerate() {
            let m = w[0] - o.center;
            let b = 2.0 * dv.dot(m);
            let c = m.dot(m) - o.r_safe * o.r_safe;
            let disc = b * b - 4.0 * a * c;
            // tangency counts; allow for rounding in the discriminant
            if disc < -1e-12 * (b * b + (4.0 * a * c).abs()) {
                continue;
            }
            let r = sqrt(disc.max(0.0));
            let t0 = (-b - r) / (2.0 * a);
            let t1 = (-b + r) / (2.0 * a);
            if t1 >= 0.0 && t0 <= 1.0 {
                on_leg.push(Conflict {
                    leg,
                    sphere_id: o.id,
                    sphere: k,
                    t_entry: t0,
                    t_exit: t1,
                });
            }
        }
        on_leg.sort_by(|x, y| {
            x.t_entry
                .total_cmp(&y.t_entry)
                .then(x.t_exit.total_cmp(&y.t_exit))
                .then(x.sphere_id.cmp(&y.sphere_id))
        });
        out.extend(on_leg);
    }
    out
}

/// Stretch of a leg replaced by one detour, in arc length from the leg
/// start. `apexes` holds `(arc length of closest approach, sphere index)`.
struct Window {
    s0: f64,
    s1: f64,
    apexes: Vec<(f64, usize)>,
}

fn window_for(leg: &Leg, c: &Conflict, o: &ObstacleSphere, ls_factor: f64) -> Window {
    let s_in = c.t_entry * leg.len;
    let s_out = c.t_exit * leg.len;
    let ls = ls_factor * o.r_safe;
    let sc = (o.center - leg.p0)
        .dot(leg.d)
        .clamp(s_in.max(0.0), s_out.min(leg.len));
    Window {
        s0: (s_in - ls).max(0.0),
        s1: (s_out + ls).min(leg.len),
        apexes: alloc::vec![(sc, c.sphere)],
    }
}

fn merge_windows(mut ws: Vec<Window>) -> Vec<Window> {
    ws.sort_by(|a, b| a.s0.total_cmp(&b.s0));
    let mut out: Vec<Window> = Vec::new();
    for w in ws {
        match out.last_mut() {
            Some(last) if w.s0 <= last.s1 => {
                last.s1 = last.s1.max(w.s1);
                last.apexes.extend(w.apexes);
            }
            _ => out.push(w),
        }
    }
    for w in &mut out {
        w.apexes.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

/// Detour through apexes offset by `h` along `u`.
struct Candidate {
    h: f64,
    points: Vec<Vec3>,
    length: f64,
    in_corridor: bool,
}

fn candidate(
    leg: &Leg,
    w: &Window,
    obstacles: &[ObstacleSphere],
    u: Vec3,
    positive: bool,
    margin: f64,
    request: &PlanRequest,
) -> Candidate {
    let mut h = if positive {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    for &(sc, k) in &w.apexes {
        let o = &obstacles[k];
        let rel = (o.center - leg.at(sc)).dot(u);
        if positive {
            h = h.max(rel + o.r_safe + margin);
        } else {
            h = h.min(rel - o.r_safe - margin);
        }
    }
    let mut points = Vec::with_capacity(w.apexes.len() + 2);
    points.push(leg.at(w.s0));
    let mut last_s = f64::NEG_INFINITY;
    let mut in_corridor = true;
    for &(sc, _) in &w.apexes {
        if sc - last_s > GEOM_EPS {
            let a = leg.at(sc) + u * h;
            in_corridor &= request.in_corridor(a.z);
            points.push(a);
            last_s = sc;
        }
    }
    points.push(leg.at(w.s1));
    let length = points.windows(2).map(|p| p[0].distance(p[1])).sum();
    Candidate {
        h,
        points,
        length,
        in_corridor,
    }
}

/// `Some(true)` for the positive candidate, `Some(false)` for the negative
/// one, `None` when neither fits the corridor. Ties go positive.
fn pick(pos: &Candidate, neg: &Candidate, scale: f64) -> Option<bool> {
    match (pos.in_corridor, neg.in_corridor) {
        (true, true) => Some(pos.length <= neg.length + 1e-9 * (1.0 + scale)),
        (true, false) => Some(true),
        (false, true) => Some(false),
        (false, false) => None,
    }
}

fn vertical_for_window(
    leg: &Leg,
    w: &Window,
    obstacles: &[ObstacleSphere],
    request: &PlanRequest,
    margin: f64,
) -> Result<(VerticalChoice, Candidate), PlannerError> {
    let up = Vec3::new(0.0, 0.0, 1.0);
    let over = candidate(leg, w, obstacles, up, true, margin, request);
    let under = candidate(leg, w, obstacles, up, false, margin, request);
    let scale = over.length.max(under.length);
    match pick(&over, &under, scale) {
        Some(true) => Ok((VerticalChoice::Over, over)),
        Some(false) => Ok((VerticalChoice::Under, under)),
        None => Err(PlannerError::NoVerticalRoom),
    }
}

/// Over or under for one conflict: compares the Euclidean detour length
/// entry → apex → exit of both apex candidates inside the corridor.
pub fn vertical_decision(
    conflict: &Conflict,
    sphere: &ObstacleSphere,
    request: &PlanRequest,
) -> Result<VerticalChoice, PlannerError> {
    let wp = &request.waypoints;
    let leg = Leg::new(wp[conflict.leg], wp[conflict.leg + 1]);
    let mut local = *conflict;
    local.sphere = 0;
    let w = window_for(&leg, &local, sphere, request.ls_factor);
    vertical_for_window(
        &leg,
        &w,
        core::slice::from_ref(sphere),
        request,
        request.margin,
    )
    .map(|(c, _)| c)
}

fn decide(
    leg: &Leg,
    w: &Window,
    obstacles: &[ObstacleSphere],
    request: &PlanRequest,
    margin: f64,
) -> Result<(Side, Candidate), PlannerError> {
    if leg.d.z.abs() < STEEP_LEG {
        match vertical_for_window(leg, w, obstacles, request, margin) {
            Ok((VerticalChoice::Over, c)) => return Ok((Side::Over, c)),
            Ok((VerticalChoice::Under, c)) => return Ok((Side::Under, c)),
            Err(_) => {}
        }
    }
    let n = Vec3::new(0.0, 0.0, 1.0)
        .cross(leg.d)
        .normalized()
        .unwrap_or(Vec3::new(1.0, 0.0, 0.0));
    let left = candidate(leg, w, obstacles, n, true, margin, request);
    let right = candidate(leg, w, obstacles, n, false, margin, request);
    let scale = left.length.max(right.length);
    match pick(&left, &right, scale) {
        Some(true) => Ok((Side::Left, left)),
        Some(false) => Ok((Side::Right, right)),
        None => Err(PlannerError::PlanInfeasible(InfeasibleReason::Corridor)),
    }
}

fn build(
    request: &PlanRequest,
    obstacles: &[ObstacleSphere],
    conflicts: &[Conflict],
    margin: f64,
) -> Result<PlannedPath, PlannerError> {
    let mut segments = Vec::new();
    let mut corners = Vec::new();
    let mut detours = Vec::new();
    for (i, w) in request.waypoints.windows(2).enumerate() {
        let leg = Leg::new(w[0], w[1]);
        let windows = merge_windows(
            conflicts
                .iter()
                .filter(|c| c.leg == i)
                .map(|c| window_for(&leg, c, &obstacles[c.sphere], request.ls_factor))
                .collect(),
        );
        let first = segments.len();
        let mut cursor = 0.0;
        for win in &windows {
            if win.s0 - cursor > GEOM_EPS {
                segments.push(BezierSegment::straight(leg.at(cursor), leg.at(win.s0)));
            }
            let (side, cand) = decide(&leg, win, obstacles, request, margin)?;
            let pts = &cand.points;
            let last = pts.len() - 1;
            segments.push(BezierSegment::tangent_blend(pts[0], pts[1], leg.d));
            for k in 1..last - 1 {
                segments.push(BezierSegment::straight(pts[k], pts[k + 1]));
            }
            segments.push(BezierSegment::tangent_blend(
                pts[last - 1],
                pts[last],
                leg.d,
            ));
            let mut ids: Vec<u32> = win.apexes.iter().map(|&(_, k)| obstacles[k].id).collect();
            ids.sort_unstable();
            ids.dedup();
            detours.push(Detour {
                leg: i,
                sphere_ids: ids,
                side,
                offset: cand.h,
            });
            cursor = win.s1;
        }
        if leg.len - cursor > GEOM_EPS || segments.len() == first {
            segments.push(BezierSegment::straight(leg.at(cursor), leg.p1));
        }
        // pin the leg end exactly on the waypoint
        if let Some(s) = segments.last_mut() {
            s.points[3] = leg.p1;
        }
        if let Some(s) = segments.get_mut(first) {
            s.points[0] = leg.p0;
        }
        for k in first..segments.len() {
            if k > 0 {
                corners.push(k == first);
            }
        }
    }
    let corridor = segments.iter().all(|s| {
        let (lo, hi) = s.axis_range(2);
        request.in_corridor(lo) && request.in_corridor(hi)
    });
    Ok(PlannedPath {
        segments,
        corners,
        detours,
        clearance: Vec::new(),
        min_clearance: f64::INFINITY,
        margin,
        feasibility: Feasibility {
            velocity: false,
            acceleration: false,
            corridor,
        },
    })
}

/// Surface distance at arc-step samples plus the refined minimum.
fn sample_clearance(
    path: &PlannedPath,
    obstacles: &[ObstacleSphere],
    step: f64,
) -> (Vec<f64>, f64) {
    let nearest = |p: Vec3| {
        obstacles
            .iter()
            .map(|o| o.clearance(p))
            .fold(f64::INFINITY, f64::min)
    };
    let mut samples = Vec::new();
    let mut refine_n = 8;
    for (i, seg) in path.segments.iter().enumerate() {
        let n = (ceil(seg.polygon_length() / step) as usize).max(1);
        refine_n = refine_n.max(n);
        let k0 = if i == 0 { 0 } else { 1 };
        for k in k0..=n {
            samples.push(nearest(seg.point(k as f64 / n as f64)));
        }
    }
    let sampled_min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let refined = path.min_clearance_to(obstacles, refine_n.min(4096));
    (samples, sampled_min.min(refined))
}

/// Builds a detoured route around `obstacles` and times it against the
/// request's speed and acceleration limits.
pub fn plan_detour(
    request: &PlanRequest,
    obstacles: &[ObstacleSphere],
) -> Result<PlannedPath, PlannerError> {
    request.validate()?;
    for o in obstacles {
        o.validate()?;
    }
    for w in &request.waypoints {
        if let Some(o) = obstacles.iter().find(|o| o.clearance(*w) < 0.0) {
            return Err(PlannerError::PlanInfeasible(
                InfeasibleReason::WaypointInsideObstacle { id: o.id },
            ));
        }
    }
    let conflicts = detect_conflicts(request, obstacles);
    let step = request.arc_step();
    let mut margin = request.margin;
    let mut failure = InfeasibleReason::Corridor;
    for _ in 0..=MAX_INFLATIONS {
        match build(request, obstacles, &conflicts, margin) {
            Ok(mut path) => {
                let (clearance, min) = sample_clearance(&path, obstacles, step);
                path.clearance = clearance;
                path.min_clearance = min;
                if !path.feasibility.corridor {
                    failure = InfeasibleReason::Corridor;
                } else if min < 0.0 {
                    failure = InfeasibleReason::Clearance { min_clearance: min };
                } else {
                    return Ok(time_parameterize(&path, request.v_max, request.a_max));
                }
            }
            Err(PlannerError::PlanInfeasible(r)) => failure = r,
            Err(e) => return Err(e),
        }
        margin *= INFLATION_FACTOR;
    }
    Err(PlannerError::PlanInfeasible(failure))
}

/// Gives every segment the shortest duration for which its speed stays at
/// or below `v_max` and its acceleration at or below `a_max`.
pub fn time_parameterize(path: &PlannedPath, v_max: f64, a_max: f64) -> PlannedPath {
    let mut out = path.clone();
    for seg in &mut out.segments {
        let tv = seg.max_tangent_norm() / v_max;
        let ta = sqrt(seg.max_second_norm() / a_max);
        let t = tv.max(ta);
        seg.duration = if t.is_finite() && t > MIN_DURATION {
            t
        } else {
            MIN_DURATION
        };
    }
    let (v, a) = sampled_limits(&out);
    out.feasibility.velocity = v <= v_max * (1.0 + 1e-3);
    out.feasibility.acceleration = a <= a_max * (1.0 + 1e-3);
    out
}

/// Largest sampled speed and acceleration over the path.
pub fn sampled_limits(path: &PlannedPath) -> (f64, f64) {
    let mut v: f64 = 0.0;
    let mut a: f64 = 0.0;
    for seg in &path.segments {
        for k in 0..=LIMIT_GRID {
            let s = k as f64 / LIMIT_GRID as f64;
            v = v.max(seg.velocity(s).norm());
            a = a.max(seg.acceleration(s).norm());
        }
    }
    (v, a)
}

/// Samples at `k·dt` for `k = 0..=⌊T/dt⌋` with yaw from `yaw`.
pub fn sample_path(path: &PlannedPath, dt: f64, yaw: YawPolicy) -> Vec<ReferenceSample> {
    let n = crate::math::step_count(path.duration(), dt);
    let mut tracker = YawTracker::new(yaw);
    (0..=n)
        .map(|k| {
            let mut r = path.sample(k as f64 * dt);
            r.psi = tracker.next(r.vel.x, r.vel.y);
            r
        })
        .collect()
}
