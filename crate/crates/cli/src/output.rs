//! CSV writers. Numbers use `{:.8e}` (9 significant digits), rows end in LF.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::Path;

use nlvg_core::metrics::{ChannelMetrics, ComparisonTable};
use nlvg_core::planner::PlannedPath;
use nlvg_core::sim::SimLog;
use nlvg_core::tuning::{Phase, RestartRun};
use nlvg_core::ReferenceSample;

pub const LOG_HEADER: [&str; 31] = [
    "t",
    "phi",
    "phi_dot",
    "theta",
    "theta_dot",
    "psi",
    "psi_dot",
    "x",
    "x_dot",
    "y",
    "y_dot",
    "z",
    "z_dot",
    "ref_x",
    "ref_y",
    "ref_z",
    "ref_phi",
    "ref_theta",
    "ref_psi",
    "u_x",
    "u_y",
    "thrust",
    "torque_x",
    "torque_y",
    "torque_z",
    "err_x",
    "err_y",
    "err_z",
    "err_phi",
    "err_theta",
    "err_psi",
];

pub fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn writer(path: &Path) -> io::Result<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

fn finish(mut w: csv::Writer<File>) -> io::Result<()> {
    w.flush()
}

/// Full per-step simulation log.
pub fn write_log(path: &Path, log: &SimLog) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(LOG_HEADER)?;
    for r in &log.rows {
        let mut rec = Vec::with_capacity(LOG_HEADER.len());
        rec.push(num(r.t));
        rec.extend(r.state.to_array().iter().map(|&v| num(v)));
        rec.extend(r.reference.iter().map(|&v| num(v)));
        rec.extend(r.control.to_array().iter().map(|&v| num(v)));
        rec.extend(r.errors.iter().map(|&v| num(v)));
        w.write_record(&rec)?;
    }
    finish(w)
}

/// One metrics row: controller label, run name and channel metrics.
pub type MetricsRow<'a> = (&'a str, &'a str, &'a ChannelMetrics);

pub fn write_metrics(path: &Path, rows: &[MetricsRow<'_>]) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "controller",
        "run",
        "channel",
        "unit",
        "t_peak",
        "iae",
        "itae",
        "itse",
    ])?;
    for (label, run, m) in rows {
        w.write_record([
            label.to_string(),
            run.to_string(),
            m.channel.name().to_string(),
            m.unit().to_string(),
            num(m.t_peak),
            num(m.iae),
            num(m.itae),
            num(m.itse),
        ])?;
    }
    finish(w)
}

pub fn write_comparison(path: &Path, tables: &[(String, ComparisonTable)]) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "run",
        "channel",
        "metric",
        "baseline",
        "candidate",
        "baseline_value",
        "candidate_value",
        "improvement_pct",
    ])?;
    for (run, t) in tables {
        for r in &t.rows {
            w.write_record([
                run.clone(),
                r.channel.name().to_string(),
                r.metric.name().to_string(),
                t.baseline.clone(),
                t.candidate.clone(),
                num(r.baseline),
                num(r.candidate),
                num(r.improvement_pct),
            ])?;
        }
    }
    finish(w)
}

/// ES trace: one row per iteration of every restart of both phases.
pub fn write_trace(path: &Path, runs: &[&RestartRun]) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "phase",
        "restart",
        "iter",
        "kp",
        "ki",
        "kd",
        "J",
        "one_sided",
    ])?;
    for run in runs {
        let phase = match run.phase {
            Phase::K1 => "K1",
            Phase::K2 => "K2",
        };
        for row in &run.outcome.trace {
            w.write_record([
                phase.to_string(),
                run.restart.to_string(),
                row.iter.to_string(),
                num(row.k.kp),
                num(row.k.ki),
                num(row.k.kd),
                num(row.cost),
                u8::from(row.one_sided).to_string(),
            ])?;
        }
    }
    finish(w)
}

/// Sampled reference along a planned path.
pub fn write_samples(path: &Path, samples: &[ReferenceSample]) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "t", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az", "psi",
    ])?;
    for s in samples {
        let mut rec = vec![num(s.t)];
        for v in [s.pos, s.vel, s.acc] {
            rec.extend(v.to_array().iter().map(|&c| num(c)));
        }
        rec.push(num(s.psi));
        w.write_record(&rec)?;
    }
    finish(w)
}

/// Control points and durations of every Bezier segment.
pub fn write_segments(path: &Path, plan: &PlannedPath) -> io::Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["segment".to_string(), "duration".to_string()];
    for k in 0..4 {
        for c in ["x", "y", "z"] {
            header.push(format!("p{k}_{c}"));
        }
    }
    header.push("corner_after".to_string());
    w.write_record(&header)?;
    for (i, seg) in plan.segments.iter().enumerate() {
        let mut rec = vec![i.to_string(), num(seg.duration)];
        for p in seg.points {
            rec.extend(p.to_array().iter().map(|&c| num(c)));
        }
        let corner = plan.corners.get(i).copied().unwrap_or(false);
        rec.push(u8::from(corner).to_string());
        w.write_record(&rec)?;
    }
    finish(w)
}

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = File::create(path)?;
    f.write_all(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(num(1.0), "1.00000000e0");
        assert_eq!(num(-0.0123456789), "-1.23456789e-2");
        assert_eq!(num(9.81), "9.81000000e0");
    }

    #[test]
    fn lf_terminated() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_metrics(&p, &[]).unwrap();
        let s = std::fs::read_to_string(&p).unwrap();
        assert_eq!(s, "controller,run,channel,unit,t_peak,iae,itae,itse\n");
    }
}
