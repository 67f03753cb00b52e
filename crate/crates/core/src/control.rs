//! Fixed-gain and nonlinear variable-gain (NLVG) PID channel controllers,
//! and the cascaded position → attitude law that produces the wrench.
//!
//! Controller state is always passed in and returned by value; nothing here
//! mutates hidden state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    saturate, ControlInput, DynamicsError, QuadParams, StateVector, GIMBAL_LIMIT,
};
use crate::math::{cos, sin, PI};
use crate::trajectory::ReferenceSample;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ControlError {
    #[error("scheduling signal must be >= 0, got {0}")]
    NegativeSignal(f64),
    #[error("non-finite controller input")]
    NonFinite,
    #[error("time step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// The six controlled channels, in the order of the input vector
/// `[Ux, Uy, Uz, Uφ, Uθ, Uψ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
    Z,
    Phi,
    Theta,
    Psi,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::X,
        Channel::Y,
        Channel::Z,
        Channel::Phi,
        Channel::Theta,
        Channel::Psi,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_attitude(self) -> bool {
        matches!(self, Channel::Phi | Channel::Theta | Channel::Psi)
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Z => "z",
            Channel::Phi => "phi",
            Channel::Theta => "theta",
            Channel::Psi => "psi",
        }
    }

    pub fn from_name(s: &str) -> Option<Channel> {
        Channel::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// One gain's nonlinear schedule: `k1` below `delta1`, `k1 + 2·a` above
/// `delta2`, and a raised-cosine blend in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlvgSchedule {
    pub k1: f64,
    pub a: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl NlvgSchedule {
    /// A schedule that always returns `k`.
    pub fn constant(k: f64, delta1: f64, delta2: f64) -> Self {
        Self {
            k1: k,
            a: 0.0,
            delta1,
            delta2,
        }
    }

    pub fn upper(&self) -> f64 {
        self.k1 + 2.0 * self.a
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let v = [self.k1, self.a, self.delta1, self.delta2];
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ControlError::NonFinite);
        }
        if self.k1 < 0.0 || self.a < 0.0 {
            return Err(ControlError::InvalidConfig("schedule gains must be >= 0"));
        }
        if !(0.0 <= self.delta1 && self.delta1 < self.delta2) {
            return Err(ControlError::InvalidConfig(
                "schedule thresholds need 0 <= delta1 < delta2",
            ));
        }
        Ok(())
    }
}

/// Gain of an NLVG schedule for scheduling-signal magnitude `s`.
///
/// The blend `A·(1 − cos(π·(s−δ1)/(δ2−δ1)))` is evaluated as
/// `2A·sin²(π·(s−δ1)/(2(δ2−δ1)))`, which is the same curve without the
/// cancellation near `δ1` and hits `k1 + 2A` exactly at `δ2`.
pub fn nlvg_gain(s: f64, sched: &NlvgSchedule) -> Result<f64, ControlError> {
    if s.is_nan() {
        return Err(ControlError::NonFinite);
    }
    if s < 0.0 {
        return Err(ControlError::NegativeSignal(s));
    }
    let gain = if s < sched.delta1 {
        sched.k1
    } else if s <= sched.delta2 {
        let half = sin(0.5 * PI * (s - sched.delta1) / (sched.delta2 - sched.delta1));
        sched.k1 + 2.0 * sched.a * (half * half)
    } else {
        sched.k1 + 2.0 * sched.a
    };
    Ok(gain)
}

/// Which signal each NLVG gain is scheduled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleSignals {
    /// `Kp` on `|e|`, `Ki` on `|ė|`, `Kd` on `|∫e|`.
    #[default]
    Paper,
    /// Each gain on its own term: `Kp` on `|e|`, `Ki` on `|∫e|`, `Kd` on `|ė|`.
    Matched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelGains {
    Fixed {
        kp: f64,
        ki: f64,
        kd: f64,
    },
    Nlvg {
        p: NlvgSchedule,
        i: NlvgSchedule,
        d: NlvgSchedule,
    },
}

impl ChannelGains {
    pub fn fixed(kp: f64, ki: f64, kd: f64) -> Self {
        ChannelGains::Fixed { kp, ki, kd }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        match self {
            ChannelGains::Fixed { kp, ki, kd } => {
                if [kp, ki, kd].iter().any(|v| !v.is_finite()) {
                    return Err(ControlError::NonFinite);
                }
                if *kp < 0.0 || *ki < 0.0 || *kd < 0.0 {
                    return Err(ControlError::InvalidConfig("gains must be >= 0"));
                }
                Ok(())
            }
            ChannelGains::Nlvg { p, i, d } => {
                p.validate()?;
                i.validate()?;
                d.validate()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidChannelState {
    pub integral: f64,
    pub prev_error: f64,
    pub prev_valid: bool,
}

impl PidChannelState {
    pub fn reset() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidOptions {
    /// Clamp on `|∫e dτ|`, in error·s.
    pub anti_windup: f64,
    #[serde(default)]
    pub schedule_signals: ScheduleSignals,
}

impl Default for PidOptions {
    fn default() -> Self {
        Self {
            anti_windup: 10.0,
            schedule_signals: ScheduleSignals::Paper,
        }
    }
}

/// One PID update.
///
/// The integral is trapezoidal from the first sample (which contributes
/// nothing) and clamped to `±anti_windup`; the derivative is a backward
/// difference on the error and is zero on the first call after a reset.
pub fn pid_step(
    state: &PidChannelState,
    error: f64,
    dt: f64,
    gains: &ChannelGains,
    opts: &PidOptions,
) -> Result<(f64, PidChannelState), ControlError> {
    if !error.is_finite() {
        return Err(ControlError::NonFinite);
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(ControlError::InvalidStep(dt));
    }
    let limit = opts.anti_windup;
    let (integral, derivative) = if state.prev_valid {
        let i = state.integral + 0.5 * (state.prev_error + error) * dt;
        (i.clamp(-limit, limit), (error - state.prev_error) / dt)
    } else {
        (state.integral.clamp(-limit, limit), 0.0)
    };

    let (kp, ki, kd) = match gains {
        ChannelGains::Fixed { kp, ki, kd } => (*kp, *ki, *kd),
        ChannelGains::Nlvg { p, i, d } => {
            let (i_signal, d_signal) = match opts.schedule_signals {
                ScheduleSignals::Paper => (derivative.abs(), integral.abs()),
                ScheduleSignals::Matched => (integral.abs(), derivative.abs()),
            };
            (
                nlvg_gain(error.abs(), p)?,
                nlvg_gain(i_signal, i)?,
                nlvg_gain(d_signal, d)?,
            )
        }
    };
    let command = kp * error + ki * integral + kd * derivative;
    Ok((
        command,
        PidChannelState {
            integral,
            prev_error: error,
            prev_valid: true,
        },
    ))
}

/// Small-angle inversion of the planar acceleration command into desired
/// roll and pitch, each clamped to `±clamp`.
pub fn outer_to_attitude(ux: f64, uy: f64, psi: f64, g: f64, clamp: f64) -> (f64, f64) {
    let (s, c) = (sin(psi), cos(psi));
    let phi_d = (ux * s - uy * c) / g;
    let theta_d = (ux * c + uy * s) / g;
    (phi_d.clamp(-clamp, clamp), theta_d.clamp(-clamp, clamp))
}

/// Gains and options for the full position → attitude cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    /// Indexed by [`Channel::index`].
    pub gains: [ChannelGains; 6],
    pub pid: PidOptions,
    /// Limit on the desired roll/pitch handed to the inner loop (rad).
    pub attitude_clamp: f64,
}

impl CascadeConfig {
    /// Fixed gains: `(5, 0.2, 5)` on the position channels and `(8, 0.1, 5)`
    /// on the attitude channels.
    pub fn initial_gains() -> Self {
        let outer = ChannelGains::fixed(5.0, 0.2, 5.0);
        let inner = ChannelGains::fixed(8.0, 0.1, 5.0);
        Self {
            gains: [outer, outer, outer, inner, inner, inner],
            pid: PidOptions::default(),
            attitude_clamp: 0.6,
        }
    }

    pub fn gains(&self, ch: Channel) -> &ChannelGains {
        &self.gains[ch.index()]
    }

    pub fn set_gains(&mut self, ch: Channel, g: ChannelGains) {
        self.gains[ch.index()] = g;
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        for g in &self.gains {
            g.validate()?;
        }
        if !(self.pid.anti_windup >= 0.0) {
            return Err(ControlError::InvalidConfig("anti_windup must be >= 0"));
        }
        if !(self.attitude_clamp > 0.0 && self.attitude_clamp < GIMBAL_LIMIT) {
            return Err(ControlError::InvalidConfig(
                "attitude clamp must lie in (0, 85 deg)",
            ));
        }
        Ok(())
    }
}

/// Integrator and derivative memory of all six channels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CascadeState {
    pub channels: [PidChannelState; 6],
}

impl CascadeState {
    pub fn reset(&self) -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeOutput {
    /// Saturated wrench.
    pub input: ControlInput,
    /// `(φ_d, θ_d)` handed to the inner loop.
    pub desired_attitude: (f64, f64),
    /// `e_i = i_desired − i_real`, indexed by [`Channel::index`].
    pub errors: [f64; 6],
}

/// One cascade update: position PID (with acceleration feedforward) →
/// desired attitude → attitude PID → torques, plus thrust with a hover
/// feedforward. An attitude override on the reference bypasses the planar
/// position loops.
pub fn cascade_update(
    state: &StateVector,
    reference: &ReferenceSample,
    config: &CascadeConfig,
    plant: &QuadParams,
    channels: &CascadeState,
    dt: f64,
) -> Result<(CascadeOutput, CascadeState), ControlError> {
    if !reference.is_finite() {
        return Err(ControlError::NonFinite);
    }
    if !state.is_finite() {
        return Err(ControlError::NonFinite);
    }
    if state.theta.abs() >= GIMBAL_LIMIT {
        return Err(DynamicsError::GimbalLock { theta: state.theta }.into());
    }
    let mut next = *channels;
    let mut errors = [0.0; 6];
    let clamp = config.attitude_clamp;

    let run = |ch: Channel, e: f64, next: &mut CascadeState| -> Result<f64, ControlError> {
        let i = ch.index();
        let (u, s) = pid_step(&channels.channels[i], e, dt, &config.gains[i], &config.pid)?;
        next.channels[i] = s;
        Ok(u)
    };

    errors[Channel::X.index()] = reference.pos.x - state.x;
    errors[Channel::Y.index()] = reference.pos.y - state.y;
    errors[Channel::Z.index()] = reference.pos.z - state.z;

    let (ux, uy, phi_d, theta_d) = match reference.attitude {
        Some(att) => (
            0.0,
            0.0,
            att.phi.clamp(-clamp, clamp),
            att.theta.clamp(-clamp, clamp),
        ),
        None => {
            let ux = reference.acc.x + run(Channel::X, errors[0], &mut next)?;
            let uy = reference.acc.y + run(Channel::Y, errors[1], &mut next)?;
            let (phi_d, theta_d) = outer_to_attitude(ux, uy, state.psi, plant.g, clamp);
            (ux, uy, phi_d, theta_d)
        }
    };

    let feedforward = plant.mass * plant.g / (cos(state.phi) * cos(state.theta));
    let thrust = feedforward + run(Channel::Z, errors[2], &mut next)?;

    errors[Channel::Phi.index()] = phi_d - state.phi;
    errors[Channel::Theta.index()] = theta_d - state.theta;
    errors[Channel::Psi.index()] = reference.psi - state.psi;
    let torque_x = run(Channel::Phi, errors[3], &mut next)?;
    let torque_y = run(Channel::Theta, errors[4], &mut next)?;
    let torque_z = run(Channel::Psi, errors[5], &mut next)?;

    let input = saturate(
        &ControlInput {
            ux,
            uy,
            thrust,
            torque_x,
            torque_y,
            torque_z,
        },
        plant,
    );
    Ok((
        CascadeOutput {
            input,
            desired_attitude: (phi_d, theta_d),
            errors,
        },
        next,
    ))
}
