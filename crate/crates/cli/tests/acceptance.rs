//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use nlvg_cli::config::{ControllerMode, ScheduleSet, TrajectoryKind};
use nlvg_cli::{run, RunConfig};
use nlvg_core::control::Channel;
use nlvg_core::metrics::{ChannelMetrics, ComparisonTable, Metric};
use nlvg_core::planner::{InfeasibleReason, PlannedPath};
use nlvg_core::tuning::EsConfig;
use nlvg_core::{
    es_descend, grad_estimate, hover_input, iae, itae, itse, nlvg_gain, plan_detour, step_rk4,
    ChannelGains, ControlInput, ErrorSeries, GainVector, NlvgSchedule, ObstacleSphere, PlanRequest,
    PlannerError, QuadParams, StateVector, TuningError, Vec3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:?}, limit {limit:?}");
    Ok(took)
}

// 1 ----------------------------------------------------------------------

fn gain_law() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0usize;
    for n in 0..10_000 {
        let d1 = if n % 10 == 0 {
            0.0
        } else {
            rng.random_range(0.0..1.0)
        };
        let s = NlvgSchedule {
            k1: rng.random_range(0.0..50.0),
            a: if n % 17 == 0 {
                0.0
            } else {
                rng.random_range(0.0..10.0)
            },
            delta1: d1,
            delta2: d1 + rng.random_range(1e-3..2.0),
        };
        let g = |x: f64| nlvg_gain(x, &s).unwrap();
        let (lo, hi) = (s.k1, s.upper());

        let mut grid: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0 * 1.5 * s.delta2).collect();
        grid.extend([s.delta1, s.delta2, s.delta2 * 3.0 + 1.0]);
        grid.extend((0..16).map(|_| rng.random_range(0.0..2.0 * s.delta2)));
        grid.sort_by(f64::total_cmp);
        let mut prev = f64::NEG_INFINITY;
        for &x in &grid {
            let v = g(x);
            ensure!(
                v >= lo && v <= hi,
                "schedule {s:?}: g({x}) = {v} outside [{lo}, {hi}]"
            );
            ensure!(v >= prev, "schedule {s:?}: not monotone at {x}");
            if x < s.delta1 {
                ensure!(v == lo, "schedule {s:?}: g({x}) = {v} != k1 below delta1");
            }
            if x >= s.delta2 {
                ensure!(
                    v == hi,
                    "schedule {s:?}: g({x}) = {v} != k1 + 2A from delta2 on"
                );
            }
            prev = v;
            checked += 1;
        }
        for (edge, eps) in [
            (s.delta1, 1e-12),
            (s.delta2, 1e-12),
            (s.delta1, 1e-9),
            (s.delta2, 1e-9),
        ] {
            let below = g((edge - eps).max(0.0));
            let jump = (g(edge + eps) - below).abs();
            ensure!(jump < 1e-6, "schedule {s:?}: jump {jump} at {edge}");
        }
    }
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!(
        "10000 schedules, {checked} grid points, {took:.2?}"
    ))
}

// 2 ----------------------------------------------------------------------

fn degenerate_equivalence() -> Outcome {
    let mut pid = RunConfig::paper_defaults()
        .with_kind(TrajectoryKind::Storm)
        .with_mode(ControllerMode::Pid);
    pid.t_total = 140.0;
    let mut nlvg = pid.with_mode(ControllerMode::Nlvg);
    let (d1, d2) = (0.01, 0.838);
    for ch in Channel::ALL {
        let [kp, ki, kd] = pid.controller.pid.get(ch);
        nlvg.controller.nlvg.set(
            ch,
            ScheduleSet::from_array([
                NlvgSchedule::constant(kp, d1, d2),
                NlvgSchedule::constant(ki, d1, d2),
                NlvgSchedule::constant(kd, d1, d2),
            ]),
        );
    }
    let cascade = nlvg.cascade().map_err(|e| e.to_string())?;
    ensure!(
        Channel::ALL
            .iter()
            .all(|&ch| matches!(cascade.gains(ch), ChannelGains::Nlvg { .. })),
        "candidate is not running the scheduled law"
    );
    let a = run::simulate(&pid).map_err(|e| e.to_string())?;
    let b = run::simulate(&nlvg).map_err(|e| e.to_string())?;
    let (ra, rb) = (&a[0].log.rows, &b[0].log.rows);
    ensure!(
        ra.len() == 14_001 && rb.len() == ra.len(),
        "row counts {} / {}",
        ra.len(),
        rb.len()
    );
    for (x, y) in ra.iter().zip(rb) {
        let same = x
            .control
            .to_array()
            .iter()
            .zip(y.control.to_array())
            .all(|(p, q)| p.to_bits() == q.to_bits());
        ensure!(same, "commands differ at t = {}", x.t);
        ensure!(
            x.state
                .to_array()
                .iter()
                .zip(y.state.to_array())
                .all(|(p, q)| p.to_bits() == q.to_bits()),
            "states differ at t = {}",
            x.t
        );
    }
    Ok(format!(
        "{} steps bitwise identical over 140 s storm",
        ra.len()
    ))
}

// 3 ----------------------------------------------------------------------

fn integrate(s0: StateVector, u: &ControlInput, p: &QuadParams, dt: f64, n: usize) -> StateVector {
    (0..n).fold(s0, |s, _| step_rk4(&s, u, p, dt).unwrap())
}

fn dynamics_oracles() -> Outcome {
    let start = Instant::now();
    let p = QuadParams::default();
    let s0 = StateVector::at_rest(2.0, -1.0, 10.0);
    let hover = integrate(s0, &hover_input(&p), &p, 0.01, 1000);
    let drift = hover
        .to_array()
        .iter()
        .zip(s0.to_array())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure!(drift < 1e-9, "hover drift {drift:e}");

    let vacuum = QuadParams {
        kdx: 0.0,
        kdy: 0.0,
        kdz: 0.0,
        ..p
    };
    let mut b0 = StateVector::at_rest(0.0, 0.0, 100.0);
    b0.x_dot = 1.5;
    b0.z_dot = 2.0;
    let b = integrate(b0, &ControlInput::default(), &vacuum, 0.01, 100);
    let want = Vec3::new(1.5, 0.0, 100.0 + 2.0 - 0.5 * p.g);
    let ballistic = Vec3::new(b.x, b.y, b.z).distance(want);
    ensure!(ballistic < 1e-6, "ballistic error {ballistic:e} m");

    // ẍ = −c·ẋ has x(t) = v0/c·(1 − e^{−ct})
    let c = 2.0;
    let drag = QuadParams {
        kdx: c * p.mass,
        ..p
    };
    let mut d0 = StateVector::at_rest(0.0, 0.0, 10.0);
    d0.x_dot = 3.0;
    let exact = 3.0 / c * (1.0 - (-c * 2.0f64).exp());
    let err = |dt: f64| {
        (integrate(
            d0,
            &hover_input(&drag),
            &drag,
            dt,
            (2.0 / dt).round() as usize,
        )
        .x - exact)
            .abs()
    };
    let ratio = err(0.2) / err(0.1);
    ensure!(ratio >= 8.0, "error ratio {ratio}");
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!(
        "hover drift {drift:.1e}, ballistic {ballistic:.1e} m, RK4 ratio {ratio:.2}, {took:.2?}"
    ))
}

// 4 ----------------------------------------------------------------------

struct Quadratic {
    h: [[f64; 3]; 3],
    c: [f64; 3],
    b: [f64; 3],
}

impl Quadratic {
    fn value(&self, k: &GainVector) -> f64 {
        let d: Vec<f64> = (0..3).map(|i| k[i] - self.c[i]).collect();
        let mut j = 0.0;
        for i in 0..3 {
            j += self.b[i] * k[i];
            for l in 0..3 {
                j += d[i] * self.h[i][l] * d[l];
            }
        }
        j
    }

    fn gradient(&self, k: &GainVector) -> [f64; 3] {
        let mut g = self.b;
        for (i, gi) in g.iter_mut().enumerate() {
            for l in 0..3 {
                *gi += 2.0 * self.h[i][l] * (k[l] - self.c[l]);
            }
        }
        g
    }
}

fn random_spd(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let m: Vec<[f64; 3]> = (0..3)
        .map(|_| [0, 1, 2].map(|_| rng.random_range(-1.0..1.0)))
        .collect();
    let mut h = [[0.0; 3]; 3];
    for i in 0..3 {
        for l in 0..3 {
            h[i][l] = (0..3).map(|r| m[r][i] * m[r][l]).sum::<f64>();
        }
        h[i][i] += 0.5;
    }
    h
}

fn es_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let delta = EsConfig::default().delta;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let q = Quadratic {
            h: random_spd(&mut rng),
            c: [0, 1, 2].map(|_| rng.random_range(0.0..10.0)),
            b: [0, 1, 2].map(|_| rng.random_range(-2.0..2.0)),
        };
        let k = GainVector::from_array([0, 1, 2].map(|_| rng.random_range(delta..10.0)));
        let cost = |k: &GainVector| -> Result<f64, TuningError> { Ok(q.value(k)) };
        let g = grad_estimate(&k, delta, &cost).map_err(|e| e.to_string())?;
        ensure!(
            g.one_sided.iter().all(|s| !s),
            "unexpected one-sided difference at {k:?}"
        );
        let exact = q.gradient(&k);
        for (i, e) in exact.iter().enumerate() {
            worst = worst.max((g.value[i] - e).abs());
        }
    }
    ensure!(worst <= 1e-9, "central difference error {worst:e}");

    let q = Quadratic {
        h: [[3.0, 1.0, 0.0], [1.0, 2.0, 0.5], [0.0, 0.5, 1.0]],
        c: [3.0, 1.5, 0.8],
        b: [0.0; 3],
    };
    let cost = |k: &GainVector| -> Result<f64, TuningError> { Ok(q.value(k)) };
    let cfg = EsConfig {
        alpha: 0.1,
        max_iters: 200,
        tol: 1e-14,
        ..EsConfig::default()
    };
    let out =
        es_descend(&GainVector::new(10.0, 0.0, 5.0), &cfg, &cost).map_err(|e| e.to_string())?;
    let iters = out.trace.len() - 1;
    let miss = (0..3)
        .map(|i| (out.best[i] - q.c[i]).abs())
        .fold(0.0, f64::max);
    ensure!(iters <= 200, "{iters} iterations");
    ensure!(miss < 1e-3, "minimizer missed by {miss:e}");

    let cfg = RunConfig::paper_defaults();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ta = tune_into(&cfg, a.path())?;
    let tb = tune_into(&cfg, b.path())?;
    ensure!(ta.len() == 3, "{} trace files", ta.len());
    ensure!(ta == tb, "trace CSVs differ between identical tunes");
    let bytes: usize = ta.iter().map(|(_, b)| b.len()).sum();
    Ok(format!(
        "central diff error {worst:.1e}, descent miss {miss:.1e} in {iters} iters, {} traces ({bytes} B) identical",
        ta.len()
    ))
}

// 5, 6 -------------------------------------------------------------------

fn row(t: &ComparisonTable, ch: Channel, m: Metric) -> Result<(f64, f64, f64), String> {
    let r = t
        .row(ch, m)
        .ok_or_else(|| format!("no {} row for {}", m.name(), ch.name()))?;
    Ok((r.baseline, r.candidate, r.improvement_pct))
}

fn attitude_steps(tuned: &RunConfig, started: Instant) -> Outcome {
    let cmp = run::experiment(tuned, TrajectoryKind::Step).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for (name, table) in &cmp.tables {
        let ch = if name.ends_with("phi") {
            Channel::Phi
        } else {
            Channel::Theta
        };
        for m in Metric::ALL {
            let (pid, nlvg, pct) = row(table, ch, m)?;
            ensure!(
                nlvg <= pid,
                "{} {}: NLVG {nlvg:.6e} > PID {pid:.6e}",
                ch.name(),
                m.name()
            );
            if m == Metric::Iae {
                ensure!(pct >= 5.0, "{} IAE improvement {pct:.2}% < 5%", ch.name());
                detail.push(format!(
                    "{} IAE {pid:.3} -> {nlvg:.3} deg ({pct:.1}%)",
                    ch.name()
                ));
            }
        }
    }
    ensure!(
        detail.len() == 2,
        "expected phi and theta steps, got {}",
        detail.len()
    );
    let took = within(Duration::from_secs(120), started)?;
    Ok(format!("{}, tune + runs {took:.2?}", detail.join(", ")))
}

fn lissajous(tuned: &RunConfig) -> Outcome {
    let cmp = run::experiment(tuned, TrajectoryKind::Lissajous).map_err(|e| e.to_string())?;
    let (_, table) = &cmp.tables[0];
    let mut detail = Vec::new();
    let mut sums = [(0.0, 0.0); 2];
    for ch in Channel::ALL {
        let (pid, nlvg, pct) = row(table, ch, Metric::Iae)?;
        let family = usize::from(ch.is_attitude());
        sums[family].0 += pid;
        sums[family].1 += nlvg;
        if pid == 0.0 && nlvg == 0.0 {
            continue;
        }
        let need = if ch.is_attitude() { 20.0 } else { 5.0 };
        ensure!(
            pct >= need,
            "{} IAE improvement {pct:.2}% < {need}%",
            ch.name()
        );
        detail.push(format!("{} {pct:.1}%", ch.name()));
    }
    let pct = |(a, b): (f64, f64)| 100.0 * (a - b) / a;
    Ok(format!(
        "IAE improvement {}; attitude total {:.1}%, position total {:.1}%",
        detail.join(", "),
        pct(sums[1]),
        pct(sums[0])
    ))
}

// 7 ----------------------------------------------------------------------

const PLAN_SCENES: u64 = 60;

fn random_scene(seed: u64) -> (PlanRequest, Vec<ObstacleSphere>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wps = vec![Vec3::new(0.0, 0.0, 10.0)];
    for _ in 0..rng.random_range(1..4) {
        wps.push(Vec3::new(
            rng.random_range(-40.0..40.0),
            rng.random_range(-40.0..40.0),
            rng.random_range(6.0..14.0),
        ));
    }
    let mut obstacles = Vec::with_capacity(20);
    while obstacles.len() < 20 {
        let leg = rng.random_range(0..wps.len() - 1);
        let s: f64 = rng.random_range(0.0..1.0);
        let on = wps[leg].lerp(wps[leg + 1], s);
        let jitter = Vec3::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-2.0..2.0),
        );
        let r = rng.random_range(0.5..2.5);
        let center = on + jitter;
        // waypoints stay outside every sphere
        if wps.iter().all(|w| w.distance(center) > r + 1.0) {
            obstacles.push(ObstacleSphere::new(obstacles.len() as u32, center, r));
        }
    }
    let mut req = PlanRequest::new(wps, 2.0, 2.0, 0.0, 25.0);
    req.margin = 0.5;
    (req, obstacles)
}

/// Dense brute-force check of a returned path: surface distance and corridor
/// at ten times the planner's arc resolution.
fn oracle(path: &PlannedPath, req: &PlanRequest, obstacles: &[ObstacleSphere]) -> (f64, bool) {
    let step = req.arc_step() / 10.0;
    let mut min = f64::INFINITY;
    let mut in_corridor = true;
    for seg in &path.segments {
        let n = ((seg.polygon_length() / step).ceil() as usize).max(10);
        for k in 0..=n {
            let p = seg.point(k as f64 / n as f64);
            for o in obstacles {
                min = min.min(p.distance(o.center) - o.r_safe);
            }
            in_corridor &= p.z >= req.z_min - 1e-9 && p.z <= req.z_max + 1e-9;
        }
    }
    (min, in_corridor)
}

fn planner_scenes() -> Outcome {
    let (mut feasible, mut detours) = (0, 0);
    let mut infeasible = [0usize; 3];
    let mut tightest = f64::INFINITY;
    let mut worst_gap: f64 = 0.0;
    let mut worst_angle: f64 = 0.0;
    for seed in 0..PLAN_SCENES {
        let (req, obstacles) = random_scene(seed);
        match plan_detour(&req, &obstacles) {
            Ok(path) => {
                feasible += 1;
                detours += path.detours.len();
                let (dense, corridor) = oracle(&path, &req, &obstacles);
                ensure!(dense >= 0.0, "scene {seed}: dense clearance {dense:e} < 0");
                ensure!(corridor, "scene {seed}: path leaves [z_min, z_max]");
                let sampled = path.clearance.iter().copied().fold(f64::INFINITY, f64::min);
                ensure!(
                    sampled >= 0.0,
                    "scene {seed}: sampled clearance {sampled:e} < 0"
                );
                ensure!(
                    path.min_clearance <= dense + 1e-9 && dense - path.min_clearance < 1e-3,
                    "scene {seed}: planner min {} vs oracle {dense}",
                    path.min_clearance
                );
                tightest = tightest.min(dense);
                for (i, j) in path.join_defects().iter().enumerate() {
                    worst_gap = worst_gap.max(j.gap);
                    ensure!(j.gap <= 1e-9, "scene {seed}: join {i} gap {:e}", j.gap);
                    if !j.corner {
                        worst_angle = worst_angle.max(j.angle);
                        ensure!(
                            j.angle <= 1e-6,
                            "scene {seed}: join {i} angle {:e}",
                            j.angle
                        );
                    }
                }
                ensure!(
                    path.start() == req.waypoints[0],
                    "scene {seed}: wrong start"
                );
                ensure!(
                    path.end() == *req.waypoints.last().unwrap(),
                    "scene {seed}: wrong end"
                );
            }
            Err(PlannerError::PlanInfeasible(r)) => {
                let k = match r {
                    InfeasibleReason::WaypointInsideObstacle { .. } => 0,
                    InfeasibleReason::Clearance { .. } => 1,
                    InfeasibleReason::Corridor => 2,
                };
                infeasible[k] += 1;
            }
            Err(PlannerError::NoVerticalRoom) => infeasible[2] += 1,
            Err(e) => return Err(format!("scene {seed}: unexpected error {e}")),
        }
    }
    ensure!(
        feasible >= PLAN_SCENES / 2,
        "only {feasible} feasible scenes"
    );
    ensure!(detours > 0, "no scene needed a detour");

    // a waypoint inside a sphere can never be satisfied
    let (req, mut obstacles) = random_scene(0);
    obstacles.push(ObstacleSphere::new(99, req.waypoints[1], 1.0));
    ensure!(
        matches!(
            plan_detour(&req, &obstacles),
            Err(PlannerError::PlanInfeasible(
                InfeasibleReason::WaypointInsideObstacle { .. }
            ))
        ),
        "waypoint inside a sphere was not rejected"
    );
    Ok(format!(
        "{PLAN_SCENES} scenes x 20 spheres: {feasible} paths ({detours} detours), infeasible {} \
         (waypoint {}, clearance {}, corridor {}); \
         tightest clearance {tightest:.3} m, max gap {worst_gap:.1e} m, max angle {worst_angle:.1e} rad",
        infeasible.iter().sum::<usize>(),
        infeasible[0],
        infeasible[1],
        infeasible[2],
    ))
}

// 8 ----------------------------------------------------------------------

fn series(f: impl Fn(f64) -> f64, dt: f64, t: f64) -> ErrorSeries {
    let n = (t / dt).round() as usize;
    ErrorSeries::new(Channel::X, dt, (0..=n).map(|k| f(k as f64 * dt)).collect()).unwrap()
}

fn metrics_suite() -> Outcome {
    let t = 2.0;
    let dt = 1e-4;
    let cases: [(&str, ErrorSeries, [f64; 3]); 3] = [
        (
            "constant",
            series(|_| -1.5, dt, t),
            [1.5, 1.5 * t / 2.0, 2.25 * t / 2.0],
        ),
        (
            "linear",
            series(|x| 0.7 * x, dt, t),
            [0.7 * t / 2.0, 0.7 * t * t / 3.0, 0.49 * t.powi(3) / 4.0],
        ),
        (
            "quadratic",
            series(|x| x * x, dt, t),
            [t * t / 3.0, t.powi(3) / 4.0, t.powi(5) / 6.0],
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, s, want) in &cases {
        let got = [iae(s, t), itae(s, t), itse(s, t)].map(|r| r.unwrap());
        for (g, w) in got.iter().zip(want) {
            let e = (g - w).abs();
            ensure!(e <= 1e-6, "{name}: {g} vs closed form {w}");
            worst = worst.max(e);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..2000 {
        let n = rng.random_range(2..400);
        let dt = rng.random_range(0.001..0.1);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let s = ErrorSeries::new(Channel::Phi, dt, v).unwrap();
        let c = rng.random_range(-5.0..5.0);
        let t = s.duration();
        let m = ChannelMetrics::compute(&s, t).unwrap();
        let k = ChannelMetrics::compute(&s.scaled(c), t).unwrap();
        let neg = ChannelMetrics::compute(&s.scaled(-1.0), t).unwrap();
        ensure!(neg == m, "sign changed the metrics");
        ensure!(
            m.iae >= 0.0 && m.itae >= 0.0 && m.itse >= 0.0,
            "negative metric"
        );
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        let abs_w: Vec<f64> = s.samples.iter().map(|x| x.abs()).collect();
        let sa = ErrorSeries::new(Channel::Phi, dt, abs_w).unwrap();
        let sb = ErrorSeries::new(Channel::Phi, dt, w.clone()).unwrap();
        let sum: Vec<f64> = sa.samples.iter().zip(&w).map(|(a, b)| a + b).collect();
        let ss = ErrorSeries::new(Channel::Phi, dt, sum).unwrap();
        let checks = [
            rel(k.iae, c.abs() * m.iae),
            rel(k.itae, c.abs() * m.itae),
            rel(k.itse, c * c * m.itse),
            rel(
                iae(&ss, t).unwrap(),
                iae(&sa, t).unwrap() + iae(&sb, t).unwrap(),
            ),
            rel(
                itae(&ss, t).unwrap(),
                itae(&sa, t).unwrap() + itae(&sb, t).unwrap(),
            ),
        ];
        for r in checks {
            if r.is_finite() {
                worst_rel = worst_rel.max(r);
            }
        }
    }
    ensure!(worst_rel < 1e-12, "identity relative error {worst_rel:e}");
    Ok(format!(
        "closed-form error {worst:.1e}, identity relative error {worst_rel:.1e}"
    ))
}

// 9 ----------------------------------------------------------------------

fn determinism() -> Outcome {
    let mut files = 0;
    for kind in GOLDEN_KINDS {
        files += simulate_twice(&RunConfig::paper_defaults().with_kind(kind))?;
        check_golden(kind)?;
    }
    Ok(format!(
        "{files} CSVs byte-identical across runs; step, storm, lissajous goldens match"
    ))
}

// ------------------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "NLVG gain law properties", guarded(gain_law)),
        (
            2,
            "A=0 schedules equal fixed PID",
            guarded(degenerate_equivalence),
        ),
        (3, "dynamics oracles", guarded(dynamics_oracles)),
        (4, "extremum-seeking correctness", guarded(es_correctness)),
    ];

    let tuned_dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let tuned = guarded(|| {
        tune_into(&RunConfig::paper_defaults(), tuned_dir.path())?;
        Ok(String::new())
    })
    .map(|_| with_fragment(&tuned_dir.path().join("nlvg.toml")));
    match &tuned {
        Ok(cfg) => {
            results.push((
                5,
                "attitude steps after tuning",
                guarded(|| attitude_steps(cfg, started)),
            ));
            results.push((6, "Lissajous improvement", guarded(|| lissajous(cfg))));
        }
        Err(e) => {
            results.push((
                5,
                "attitude steps after tuning",
                Err(format!("tuning failed: {e}")),
            ));
            results.push((
                6,
                "Lissajous improvement",
                Err(format!("tuning failed: {e}")),
            ));
        }
    }

    results.push((
        7,
        "planner on random 20-sphere scenes",
        guarded(planner_scenes),
    ));
    results.push((
        8,
        "metrics closed forms and identities",
        guarded(metrics_suite),
    ));
    results.push((
        9,
        "end-to-end determinism and goldens",
        guarded(determinism),
    ));

    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(d) => println!("PASS {n} {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {n} {name}: {d}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
