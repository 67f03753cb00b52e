//! Fixed-step closed-loop simulation: reference → cascade → saturate → RK4.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{cascade_update, CascadeConfig, CascadeState, Channel, ControlError};
use crate::dynamics::{step_rk4, ControlInput, DynamicsError, QuadParams, StateVector};
use crate::math::step_count;
use crate::metrics::{ChannelMetrics, ErrorSeries, MetricReport, MetricsError};
use crate::trajectory::{Reference, YawPolicy, YawTracker};

/// States farther than this from the origin (m or m/s) count as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimErrorKind {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("state left the finite bound of {DIVERGENCE_BOUND}")]
    Diverged,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("simulation failed at step {step} (t = {t} s): {kind}")]
pub struct SimError {
    pub step: usize,
    pub t: f64,
    pub kind: SimErrorKind,
}

impl SimError {
    fn at(step: usize, t: f64, kind: impl Into<SimErrorKind>) -> Self {
        Self {
            step,
            t,
            kind: kind.into(),
        }
    }

    /// Whether the failure is a runaway state rather than a bad config.
    pub fn is_divergence(&self) -> bool {
        matches!(
            self.kind,
            SimErrorKind::Diverged
                | SimErrorKind::Dynamics(DynamicsError::GimbalLock { .. })
                | SimErrorKind::Dynamics(DynamicsError::NonFinite)
                | SimErrorKind::Control(ControlError::NonFinite)
                | SimErrorKind::Control(ControlError::Dynamics(_))
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub plant: QuadParams,
    pub cascade: CascadeConfig,
    pub yaw: YawPolicy,
    /// s
    pub dt: f64,
    /// s
    pub t_total: f64,
    pub initial: StateVector,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            plant: QuadParams::default(),
            cascade: CascadeConfig::initial_gains(),
            yaw: YawPolicy::Zero,
            dt: 0.01,
            t_total: 140.0,
            initial: StateVector::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |k: SimErrorKind| SimError::at(0, 0.0, k);
        self.plant
            .validate()
            .map_err(|e| bad(SimErrorKind::Dynamics(e)))?;
        self.cascade
            .validate()
            .map_err(|e| bad(SimErrorKind::Control(e)))?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(bad(SimErrorKind::InvalidConfig("dt must be > 0")));
        }
        if !(self.t_total >= self.dt) || !self.t_total.is_finite() {
            return Err(bad(SimErrorKind::InvalidConfig("t_total must be >= dt")));
        }
        if !self.initial.is_finite() {
            return Err(bad(SimErrorKind::InvalidConfig(
                "initial state must be finite",
            )));
        }
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        step_count(self.t_total, self.dt)
    }
}

/// One logged step. The control is the one applied over `[t, t + dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub state: StateVector,
    /// `[x_d, y_d, z_d, φ_d, θ_d, ψ_d]`
    pub reference: [f64; 6],
    pub control: ControlInput,
    /// Indexed by [`Channel::index`].
    pub errors: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimLog {
    pub dt: f64,
    pub rows: Vec<LogRow>,
}

impl SimLog {
    /// Error of one channel from `t = 0`, in radians or metres.
    pub fn error_series(&self, ch: Channel) -> ErrorSeries {
        ErrorSeries {
            channel: ch,
            dt: self.dt,
            samples: self.rows.iter().map(|r| r.errors[ch.index()]).collect(),
        }
    }

    /// Metrics for `channels`; attitude errors are converted to degrees.
    pub fn report(
        &self,
        label: &str,
        channels: &[Channel],
        windows: &MetricWindows,
    ) -> Result<MetricReport, MetricsError> {
        let mut out = Vec::with_capacity(channels.len());
        for &ch in channels {
            let mut s = self.error_series(ch);
            if ch.is_attitude() {
                s = s.scaled(180.0 / crate::math::PI);
            }
            out.push(ChannelMetrics::compute(&s, windows.for_channel(ch))?);
        }
        Ok(MetricReport {
            controller: String::from(label),
            channels: out,
        })
    }
}

/// Metric integration windows per channel family (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricWindows {
    pub t_peak_attitude: f64,
    pub t_peak_position: f64,
}

impl Default for MetricWindows {
    fn default() -> Self {
        Self {
            t_peak_attitude: 0.15,
            t_peak_position: 0.37,
        }
    }
}

impl MetricWindows {
    pub fn for_channel(&self, ch: Channel) -> f64 {
        if ch.is_attitude() {
            self.t_peak_attitude
        } else {
            self.t_peak_position
        }
    }
}

fn check_bounds(s: &StateVector) -> bool {
    s.is_finite() && s.to_array().iter().all(|v| v.abs() < DIVERGENCE_BOUND)
}

/// Runs the closed loop for `⌊t_total/dt⌋ + 1` logged samples.
pub fn run_closed_loop(config: &SimConfig, reference: &dyn Reference) -> Result<SimLog, SimError> {
    config.validate()?;
    let n = config.step_count();
    let dt = config.dt;
    let mut rows = Vec::with_capacity(n + 1);
    let mut state = config.initial;
    let mut channels = CascadeState::default();
    let mut yaw = YawTracker::new(config.yaw);
    let yaw_applies = reference.yaw_policy_applies();

    for k in 0..=n {
        let t = k as f64 * dt;
        let mut r = reference.sample(t);
        if yaw_applies {
            r.psi = yaw.next(r.vel.x, r.vel.y);
        }
        let (out, next) = cascade_update(&state, &r, &config.cascade, &config.plant, &channels, dt)
            .map_err(|e| SimError::at(k, t, e))?;
        channels = next;
        rows.push(LogRow {
            t,
            state,
            reference: [
                r.pos.x,
                r.pos.y,
                r.pos.z,
                out.desired_attitude.0,
                out.desired_attitude.1,
                r.psi,
            ],
            control: out.input,
            errors: out.errors,
        });
        if k < n {
            state = step_rk4(&state, &out.input, &config.plant, dt)
                .map_err(|e| SimError::at(k + 1, t + dt, e))?;
            if !check_bounds(&state) {
                return Err(SimError::at(k + 1, t + dt, SimErrorKind::Diverged));
            }
        }
    }
    Ok(SimLog { dt, rows })
}
