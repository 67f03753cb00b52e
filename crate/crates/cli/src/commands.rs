//! Subcommand bodies: run, write CSV/SVG/TOML into the output directory and
//! return a printable summary.

use std::fmt::Write as _;
use std::path::Path;

use nlvg_core::metrics::ComparisonTable;
use nlvg_core::planner::sample_path;
use nlvg_core::sim::SimLog;
use nlvg_core::tuning::RestartRun;
use nlvg_core::{Channel, Reference};

use crate::config::{NlvgFragment, RunConfig, TrajectoryKind};
use crate::output;
use crate::plot::{thin, write_panels, Panel, Series};
use crate::run::{self, CliError, Comparison, RunResult};

const PLOT_POINTS: usize = 2000;

fn to_deg(ch: Channel) -> f64 {
    if ch.is_attitude() {
        180.0 / std::f64::consts::PI
    } else {
        1.0
    }
}

fn unit(ch: Channel) -> &'static str {
    if ch.is_attitude() {
        "deg"
    } else {
        "m"
    }
}

fn state_of(row: &nlvg_core::sim::LogRow, ch: Channel) -> f64 {
    let s = &row.state;
    match ch {
        Channel::X => s.x,
        Channel::Y => s.y,
        Channel::Z => s.z,
        Channel::Phi => s.phi,
        Channel::Theta => s.theta,
        Channel::Psi => s.psi,
    }
}

fn signal(log: &SimLog, f: impl Fn(&nlvg_core::sim::LogRow) -> f64) -> Vec<(f64, f64)> {
    thin(log.rows.iter().map(|r| (r.t, f(r))).collect(), PLOT_POINTS)
}

fn response_panel(ch: Channel, logs: &[(&str, &SimLog)]) -> Panel {
    let c = to_deg(ch);
    let mut series = vec![Series::new(
        "reference",
        signal(logs[0].1, |r| r.reference[ch.index()] * c),
    )];
    for (label, log) in logs {
        series.push(Series::new(*label, signal(log, |r| state_of(r, ch) * c)));
    }
    Panel {
        title: format!("{} response", ch.name()),
        x_label: "t (s)".into(),
        y_label: format!("{} ({})", ch.name(), unit(ch)),
        series,
        ..Panel::default()
    }
}

fn error_panel(ch: Channel, logs: &[(&str, &SimLog)]) -> Panel {
    let c = to_deg(ch);
    Panel {
        title: format!("{} error", ch.name()),
        x_label: "t (s)".into(),
        y_label: format!("e ({})", unit(ch)),
        series: logs
            .iter()
            .map(|(label, log)| Series::new(*label, signal(log, |r| r.errors[ch.index()] * c)))
            .collect(),
        ..Panel::default()
    }
}

fn top_view(logs: &[(&str, &SimLog)], circles: Vec<(f64, f64, f64)>) -> Panel {
    let log0 = logs[0].1;
    let mut series = vec![Series::new(
        "reference",
        thin(
            log0.rows
                .iter()
                .map(|r| (r.reference[0], r.reference[1]))
                .collect(),
            PLOT_POINTS,
        ),
    )];
    for (label, log) in logs {
        series.push(Series::new(
            *label,
            thin(
                log.rows.iter().map(|r| (r.state.x, r.state.y)).collect(),
                PLOT_POINTS,
            ),
        ));
    }
    Panel {
        title: "top view".into(),
        x_label: "x (m)".into(),
        y_label: "y (m)".into(),
        series,
        circles,
        equal_aspect: true,
    }
}

fn run_figure(
    path: &Path,
    result: &RunResult,
    logs: &[(&str, &SimLog)],
    circles: Vec<(f64, f64, f64)>,
) -> Result<(), CliError> {
    let panels = if result.spec.path_following {
        let mut p = vec![top_view(logs, circles)];
        for ch in [
            Channel::X,
            Channel::Y,
            Channel::Z,
            Channel::Phi,
            Channel::Theta,
        ] {
            p.push(error_panel(ch, logs));
        }
        p
    } else {
        let ch = result.spec.channels[0];
        vec![response_panel(ch, logs), error_panel(ch, logs)]
    };
    write_panels(path, &panels).map_err(CliError::Plot)
}

fn scene_circles(cfg: &RunConfig) -> Vec<(f64, f64, f64)> {
    match (cfg.trajectory.kind, cfg.scene()) {
        (TrajectoryKind::Plan, Ok(Some(s))) => s
            .obstacles
            .iter()
            .map(|o| (o.center[0], o.center[1], o.r_safe))
            .collect(),
        _ => Vec::new(),
    }
}

pub fn format_reports(results: &[RunResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14} {:<6} {:>4} {:>14} {:>14} {:>14}",
        "run", "chan", "unit", "IAE", "ITAE", "ITSE"
    );
    for r in results {
        for m in &r.report.channels {
            let _ = writeln!(
                s,
                "{:<14} {:<6} {:>4} {:>14.6e} {:>14.6e} {:>14.6e}",
                r.name,
                m.channel.name(),
                m.unit(),
                m.iae,
                m.itae,
                m.itse
            );
        }
    }
    s
}

pub fn format_tables(tables: &[(String, ComparisonTable)]) -> String {
    let mut s = String::new();
    for (run, t) in tables {
        let _ = writeln!(s, "{run}: {} -> {}", t.baseline, t.candidate);
        let _ = writeln!(
            s,
            "  {:<6} {:<5} {:>14} {:>14} {:>9}",
            "chan", "metric", t.baseline, t.candidate, "improv%"
        );
        for r in &t.rows {
            let _ = writeln!(
                s,
                "  {:<6} {:<5} {:>14.6e} {:>14.6e} {:>9.2}",
                r.channel.name(),
                r.metric.name(),
                r.baseline,
                r.candidate,
                r.improvement_pct
            );
        }
    }
    s
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let results = run::simulate(cfg)?;
    let label = cfg.controller.mode.name();
    let circles = scene_circles(cfg);
    let mut rows = Vec::new();
    for r in &results {
        output::write_log(&out.join(format!("{}.csv", r.name)), &r.log)?;
        run_figure(
            &out.join(format!("{}.svg", r.name)),
            r,
            &[(label, &r.log)],
            circles.clone(),
        )?;
        for m in &r.report.channels {
            rows.push((label, r.name.as_str(), m));
        }
    }
    output::write_metrics(&out.join("metrics.csv"), &rows)?;
    Ok(format_reports(&results))
}

pub fn write_comparison(cmp: &Comparison, cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let circles = scene_circles(cfg);
    let mut rows = Vec::new();
    for (a, b) in cmp.baseline.iter().zip(&cmp.candidate) {
        let (la, lb) = (a.report.controller.as_str(), b.report.controller.as_str());
        output::write_log(&out.join(format!("{}_{la}.csv", a.name)), &a.log)?;
        output::write_log(&out.join(format!("{}_{lb}.csv", b.name)), &b.log)?;
        run_figure(
            &out.join(format!("{}.svg", a.name)),
            a,
            &[(la, &a.log), (lb, &b.log)],
            circles.clone(),
        )?;
        for m in &a.report.channels {
            rows.push((la, a.name.as_str(), m));
        }
        for m in &b.report.channels {
            rows.push((lb, b.name.as_str(), m));
        }
    }
    output::write_metrics(&out.join("metrics.csv"), &rows)?;
    output::write_comparison(&out.join("comparison.csv"), &cmp.tables)?;
    Ok(format_tables(&cmp.tables))
}

pub fn compare(
    baseline: &RunConfig,
    candidate: &RunConfig,
    out: &Path,
) -> Result<String, CliError> {
    let cmp = run::compare(baseline, candidate)?;
    write_comparison(&cmp, baseline, out)
}

/// Fixed PID against NLVG on one of the built-in experiments.
pub fn experiment(cfg: &RunConfig, kind: TrajectoryKind, out: &Path) -> Result<String, CliError> {
    let cmp = run::experiment(cfg, kind)?;
    write_comparison(&cmp, &cfg.with_kind(kind), out)
}

fn convergence_panels(runs: &[&RestartRun], channel: Channel) -> Vec<Panel> {
    ["K1", "K2"]
        .iter()
        .map(|phase| Panel {
            title: format!("{} {phase} best cost", channel.name()),
            x_label: "iteration".into(),
            y_label: "J".into(),
            series: runs
                .iter()
                .filter(|r| r.phase.name() == *phase)
                .map(|r| {
                    Series::new(
                        format!("restart {}", r.restart),
                        r.outcome
                            .trace
                            .iter()
                            .map(|t| (t.iter as f64, t.best_cost))
                            .collect(),
                    )
                })
                .collect(),
            ..Panel::default()
        })
        .collect()
}

pub fn tune(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let result = run::tune(cfg)?;
    let mut s = String::new();
    for (c, b) in &result.campaigns {
        let name = c.channel.name();
        let runs: Vec<&RestartRun> = b.k1.runs.iter().chain(&b.k2.runs).collect();
        output::write_trace(&out.join(format!("trace_{name}.csv")), &runs)?;
        write_panels(
            &out.join(format!("convergence_{name}.svg")),
            &convergence_panels(&runs, c.channel),
        )
        .map_err(CliError::Plot)?;
        let k = |g: &nlvg_core::GainVector| format!("({:.6}, {:.6}, {:.6})", g.kp, g.ki, g.kd);
        let _ = writeln!(
            s,
            "{name}: K1 = {} (J = {:.6e}), K2 = {} (J = {:.6e})",
            k(&b.k1.best),
            b.k1.best_cost,
            k(&b.k2.best),
            b.k2.best_cost
        );
        for (i, g) in ["kp", "ki", "kd"].iter().enumerate() {
            if b.inverted[i] {
                let _ = writeln!(
                    s,
                    "  warning: {g} bounds inverted (K2 < K1), amplitude set to 0"
                );
            }
        }
    }
    let frag = NlvgFragment {
        nlvg: result.fragment,
    };
    let text = toml::to_string(&frag).map_err(|e| CliError::Plot(e.to_string()))?;
    output::write_text(&out.join("nlvg.toml"), &text)?;
    let _ = writeln!(
        s,
        "schedules written to {}",
        out.join("nlvg.toml").display()
    );
    Ok(s)
}

pub fn plan(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let (scene, path) = run::plan(cfg)?;
    let samples = sample_path(&path, cfg.dt, cfg.controller.yaw);
    output::write_samples(&out.join("path.csv"), &samples)?;
    output::write_segments(&out.join("segments.csv"), &path)?;
    let ref_xy: Vec<(f64, f64)> = samples.iter().map(|r| (r.pos.x, r.pos.y)).collect();
    let ref_xz: Vec<(f64, f64)> = samples.iter().map(|r| (r.pos.x, r.pos.z)).collect();
    let wp = &scene.waypoints;
    let panels = vec![
        Panel {
            title: "top view".into(),
            x_label: "x (m)".into(),
            y_label: "y (m)".into(),
            series: vec![
                Series::new("route", wp.iter().map(|w| (w[0], w[1])).collect()),
                Series::new("path", thin(ref_xy, PLOT_POINTS)),
            ],
            circles: scene
                .obstacles
                .iter()
                .map(|o| (o.center[0], o.center[1], o.r_safe))
                .collect(),
            equal_aspect: true,
        },
        Panel {
            title: "side view".into(),
            x_label: "x (m)".into(),
            y_label: "z (m)".into(),
            series: vec![
                Series::new("route", wp.iter().map(|w| (w[0], w[2])).collect()),
                Series::new("path", thin(ref_xz, PLOT_POINTS)),
            ],
            circles: scene
                .obstacles
                .iter()
                .map(|o| (o.center[0], o.center[2], o.r_safe))
                .collect(),
            equal_aspect: true,
        },
    ];
    write_panels(&out.join("plan.svg"), &panels).map_err(CliError::Plot)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "segments {}  detours {}  duration {:.3} s  min clearance {:.4} m  margin {:.4} m",
        path.segments.len(),
        path.detours.len(),
        path.duration(),
        path.min_clearance,
        path.margin
    );
    for d in &path.detours {
        let _ = writeln!(
            s,
            "  leg {} spheres {:?} {:?} offset {:.3} m",
            d.leg, d.sphere_ids, d.side, d.offset
        );
    }
    let end = path.sample(path.duration()).pos;
    let _ = writeln!(s, "ends at ({:.3}, {:.3}, {:.3})", end.x, end.y, end.z);
    Ok(s)
}
