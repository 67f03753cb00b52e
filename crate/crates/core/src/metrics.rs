//! IAE / ITAE / ITSE tracking metrics and controller comparison tables.
//!
//! Every metric is the trapezoidal integral over `[0, t_peak]` of the
//! uniformly-sampled error series, normalized by `t_peak`. When `t_peak`
//! falls between samples the last partial interval is integrated against the
//! linearly interpolated error.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::Channel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("window t_peak = {t_peak} s exceeds series duration {duration} s")]
    WindowTooLong { t_peak: f64, duration: f64 },
    #[error("invalid window t_peak = {0}")]
    InvalidWindow(f64),
    #[error("invalid series: {0}")]
    InvalidSeries(&'static str),
    #[error("reports cover different channels or windows")]
    MismatchedChannels,
}

/// Uniformly sampled error of one channel; sample `k` is at `k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub channel: Channel,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl ErrorSeries {
    pub fn new(channel: Channel, dt: f64, samples: Vec<f64>) -> Result<Self, MetricsError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(MetricsError::InvalidSeries("dt must be > 0"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::InvalidSeries("samples must be finite"));
        }
        Ok(Self {
            channel,
            dt,
            samples,
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 * self.dt
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            channel: self.channel,
            dt: self.dt,
            samples: self.samples.iter().map(|v| v * c).collect(),
        }
    }
}

/// Trapezoidal `∫₀^t_peak integrand(t, e(t)) dt`, not normalized.
pub fn integrate(
    series: &ErrorSeries,
    t_peak: f64,
    integrand: impl Fn(f64, f64) -> f64,
) -> Result<f64, MetricsError> {
    if !(t_peak > 0.0) || !t_peak.is_finite() {
        return Err(MetricsError::InvalidWindow(t_peak));
    }
    let duration = series.duration();
    let dt = series.dt;
    let slack = 1e-9 * dt;
    if t_peak > duration + slack {
        return Err(MetricsError::WindowTooLong { t_peak, duration });
    }
    let steps = t_peak / dt;
    let mut whole = libm::floor(steps + 1e-9) as usize;
    whole = whole.min(series.samples.len() - 1);
    let e = &series.samples;
    let mut total = 0.0;
    for k in 0..whole {
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        total += 0.5 * dt * (integrand(t0, e[k]) + integrand(t1, e[k + 1]));
    }
    let t_whole = whole as f64 * dt;
    let rest = t_peak - t_whole;
    if rest > slack && whole + 1 < e.len() {
        let s = rest / dt;
        let e_end = e[whole] + s * (e[whole + 1] - e[whole]);
        total += 0.5 * rest * (integrand(t_whole, e[whole]) + integrand(t_peak, e_end));
    }
    Ok(total)
}

fn windowed(
    series: &ErrorSeries,
    t_peak: f64,
    integrand: impl Fn(f64, f64) -> f64,
) -> Result<f64, MetricsError> {
    Ok(integrate(series, t_peak, integrand)? / t_peak)
}

/// `(1/t_peak)·∫₀^t_peak |e| dt`
pub fn iae(series: &ErrorSeries, t_peak: f64) -> Result<f64, MetricsError> {
    windowed(series, t_peak, |_, e| e.abs())
}

/// `(1/t_peak)·∫₀^t_peak t·|e| dt`
pub fn itae(series: &ErrorSeries, t_peak: f64) -> Result<f64, MetricsError> {
    windowed(series, t_peak, |t, e| t * e.abs())
}

/// `(1/t_peak)·∫₀^t_peak t·e² dt`
pub fn itse(series: &ErrorSeries, t_peak: f64) -> Result<f64, MetricsError> {
    windowed(series, t_peak, |t, e| t * e * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub channel: Channel,
    /// Integration window actually used (s).
    pub t_peak: f64,
    pub iae: f64,
    pub itae: f64,
    pub itse: f64,
}

impl ChannelMetrics {
    pub fn compute(series: &ErrorSeries, t_peak: f64) -> Result<Self, MetricsError> {
        Ok(Self {
            channel: series.channel,
            t_peak,
            iae: iae(series, t_peak)?,
            itae: itae(series, t_peak)?,
            itse: itse(series, t_peak)?,
        })
    }

    /// Unit of the underlying error: degrees for attitude channels, metres
    /// for position channels.
    pub fn unit(&self) -> &'static str {
        if self.channel.is_attitude() {
            "deg"
        } else {
            "m"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub controller: String,
    pub channels: Vec<ChannelMetrics>,
}

impl MetricReport {
    pub fn get(&self, ch: Channel) -> Option<&ChannelMetrics> {
        self.channels.iter().find(|m| m.channel == ch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    Iae,
    Itae,
    Itse,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Iae, Metric::Itae, Metric::Itse];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Iae => "IAE",
            Metric::Itae => "ITAE",
            Metric::Itse => "ITSE",
        }
    }

    pub fn of(self, m: &ChannelMetrics) -> f64 {
        match self {
            Metric::Iae => m.iae,
            Metric::Itae => m.itae,
            Metric::Itse => m.itse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub channel: Channel,
    pub metric: Metric,
    pub baseline: f64,
    pub candidate: f64,
    /// `100·(baseline − candidate)/baseline`; positive means the candidate
    /// has less error.
    pub improvement_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub baseline: String,
    pub candidate: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, ch: Channel, metric: Metric) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.channel == ch && r.metric == metric)
    }
}

pub fn improvement_pct(baseline: f64, candidate: f64) -> f64 {
    if baseline == candidate {
        0.0
    } else if baseline == 0.0 {
        f64::NEG_INFINITY
    } else {
        100.0 * (baseline - candidate) / baseline
    }
}

/// Per-channel, per-metric comparison of `a` (baseline) against `b`.
pub fn compare(a: &MetricReport, b: &MetricReport) -> Result<ComparisonTable, MetricsError> {
    if a.channels.len() != b.channels.len() {
        return Err(MetricsError::MismatchedChannels);
    }
    let mut rows = Vec::with_capacity(3 * a.channels.len());
    for ma in &a.channels {
        let mb = b.get(ma.channel).ok_or(MetricsError::MismatchedChannels)?;
        if ma.t_peak != mb.t_peak {
            return Err(MetricsError::MismatchedChannels);
        }
        for metric in Metric::ALL {
            let (x, y) = (metric.of(ma), metric.of(mb));
            rows.push(ComparisonRow {
                channel: ma.channel,
                metric,
                baseline: x,
                candidate: y,
                improvement_pct: improvement_pct(x, y),
            });
        }
    }
    Ok(ComparisonTable {
        baseline: a.controller.clone(),
        candidate: b.controller.clone(),
        rows,
    })
}
