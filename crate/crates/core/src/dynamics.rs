//! Rigid-body quadcopter model.
//!
//! An X-configuration Newton–Euler model with diagonal inertia, linear drag
//! and gyroscopic coupling, driven at the wrench level (total thrust plus
//! three body torques). Body rates are treated as Euler-angle rates, which is
//! only valid away from the pitch singularity, so every evaluation is guarded
//! at 85° of pitch.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{cos, sin, PI};

/// Pitch magnitude at which Euler-rate kinematics are refused.
pub const GIMBAL_LIMIT: f64 = 85.0 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DynamicsError {
    #[error("gimbal lock: |theta| = {theta} rad reaches the 85 degree guard")]
    GimbalLock { theta: f64 },
    #[error("non-finite value in state or input")]
    NonFinite,
    #[error("invalid quadcopter parameter: {0}")]
    InvalidParams(&'static str),
    #[error("integration step must be positive, got {0}")]
    InvalidStep(f64),
}

/// Quadcopter state, ordered as `[φ φ̇ θ θ̇ ψ ψ̇ x ẋ y ẏ z ż]`.
///
/// The same layout is used for state derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateVector {
    pub phi: f64,
    pub phi_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub psi: f64,
    pub psi_dot: f64,
    pub x: f64,
    pub x_dot: f64,
    pub y: f64,
    pub y_dot: f64,
    pub z: f64,
    pub z_dot: f64,
}

impl StateVector {
    pub const LEN: usize = 12;

    /// At rest, level, at the given position.
    pub fn at_rest(x: f64, y: f64, z: f64) -> Self {
        Self {
            x,
            y,
            z,
            ..Self::default()
        }
    }

    pub fn to_array(&self) -> [f64; 12] {
        [
            self.phi,
            self.phi_dot,
            self.theta,
            self.theta_dot,
            self.psi,
            self.psi_dot,
            self.x,
            self.x_dot,
            self.y,
            self.y_dot,
            self.z,
            self.z_dot,
        ]
    }

    pub fn from_array(a: [f64; 12]) -> Self {
        Self {
            phi: a[0],
            phi_dot: a[1],
            theta: a[2],
            theta_dot: a[3],
            psi: a[4],
            psi_dot: a[5],
            x: a[6],
            x_dot: a[7],
            y: a[8],
            y_dot: a[9],
            z: a[10],
            z_dot: a[11],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    fn axpy(&self, k: f64, d: &StateVector) -> StateVector {
        let mut a = self.to_array();
        for (ai, di) in a.iter_mut().zip(d.to_array()) {
            *ai += k * di;
        }
        StateVector::from_array(a)
    }
}

/// Plant parameters for the wrench-level model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadParams {
    /// kg
    pub mass: f64,
    /// kg·m²
    pub ix: f64,
    pub iy: f64,
    pub iz: f64,
    /// m/s²
    pub g: f64,
    /// Linear drag, N·s/m.
    pub kdx: f64,
    pub kdy: f64,
    pub kdz: f64,
    /// Upper thrust limit, N (lower limit is 0).
    pub f_max: f64,
    /// Symmetric torque limit, N·m.
    pub torque_max: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        let mass = 1.2;
        let g = 9.81;
        Self {
            mass,
            ix: 0.015,
            iy: 0.015,
            iz: 0.025,
            g,
            kdx: 0.1,
            kdy: 0.1,
            kdz: 0.1,
            f_max: 4.0 * mass * g,
            torque_max: 1.0,
        }
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let all = [
            self.mass,
            self.ix,
            self.iy,
            self.iz,
            self.g,
            self.kdx,
            self.kdy,
            self.kdz,
            self.f_max,
            self.torque_max,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite);
        }
        if self.mass <= 0.0 {
            return Err(DynamicsError::InvalidParams("mass must be > 0"));
        }
        if self.ix <= 0.0 || self.iy <= 0.0 || self.iz <= 0.0 {
            return Err(DynamicsError::InvalidParams("inertia must be > 0"));
        }
        if self.g <= 0.0 {
            return Err(DynamicsError::InvalidParams("gravity must be > 0"));
        }
        if self.kdx < 0.0 || self.kdy < 0.0 || self.kdz < 0.0 {
            return Err(DynamicsError::InvalidParams("drag must be >= 0"));
        }
        if self.f_max <= 0.0 || self.torque_max <= 0.0 {
            return Err(DynamicsError::InvalidParams("actuator limits must be > 0"));
        }
        Ok(())
    }
}

/// Controller output `U = [Ux, Uy, F_t, Γx, Γy, Γz]`.
///
/// `ux`/`uy` are the commanded planar accelerations of the outer loop; the
/// plant only consumes thrust and torques, they are carried for logging.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub ux: f64,
    pub uy: f64,
    pub thrust: f64,
    pub torque_x: f64,
    pub torque_y: f64,
    pub torque_z: f64,
}

impl ControlInput {
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.ux,
            self.uy,
            self.thrust,
            self.torque_x,
            self.torque_y,
            self.torque_z,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

pub fn hover_input(params: &QuadParams) -> ControlInput {
    ControlInput {
        thrust: params.mass * params.g,
        ..ControlInput::default()
    }
}

/// Clamps thrust to `[0, F_max]` and torques to `[-Γ_max, Γ_max]`.
pub fn saturate(input: &ControlInput, params: &QuadParams) -> ControlInput {
    let t = params.torque_max;
    ControlInput {
        ux: input.ux,
        uy: input.uy,
        thrust: input.thrust.clamp(0.0, params.f_max),
        torque_x: input.torque_x.clamp(-t, t),
        torque_y: input.torque_y.clamp(-t, t),
        torque_z: input.torque_z.clamp(-t, t),
    }
}

/// Time derivative of the state under a constant wrench.
pub fn derivative(
    state: &StateVector,
    input: &ControlInput,
    params: &QuadParams,
) -> Result<StateVector, DynamicsError> {
    if !state.is_finite() || !input.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    if state.theta.abs() >= GIMBAL_LIMIT {
        return Err(DynamicsError::GimbalLock { theta: state.theta });
    }
    let m = params.mass;
    let (sphi, cphi) = (sin(state.phi), cos(state.phi));
    let (stheta, ctheta) = (sin(state.theta), cos(state.theta));
    let (spsi, cpsi) = (sin(state.psi), cos(state.psi));
    let f_over_m = input.thrust / m;

    let x_ddot = (cphi * stheta * cpsi + sphi * spsi) * f_over_m - params.kdx * state.x_dot / m;
    let y_ddot = (cphi * stheta * spsi - sphi * cpsi) * f_over_m - params.kdy * state.y_dot / m;
    let z_ddot = cphi * ctheta * f_over_m - params.g - params.kdz * state.z_dot / m;

    let phi_ddot =
        ((params.iy - params.iz) * state.theta_dot * state.psi_dot + input.torque_x) / params.ix;
    let theta_ddot =
        ((params.iz - params.ix) * state.phi_dot * state.psi_dot + input.torque_y) / params.iy;
    let psi_ddot =
        ((params.ix - params.iy) * state.phi_dot * state.theta_dot + input.torque_z) / params.iz;

    Ok(StateVector {
        phi: state.phi_dot,
        phi_dot: phi_ddot,
        theta: state.theta_dot,
        theta_dot: theta_ddot,
        psi: state.psi_dot,
        psi_dot: psi_ddot,
        x: state.x_dot,
        x_dot: x_ddot,
        y: state.y_dot,
        y_dot: y_ddot,
        z: state.z_dot,
        z_dot: z_ddot,
    })
}

/// One classical RK4 step with the input held over `dt`.
pub fn step_rk4(
    state: &StateVector,
    input: &ControlInput,
    params: &QuadParams,
    dt: f64,
) -> Result<StateVector, DynamicsError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(DynamicsError::InvalidStep(dt));
    }
    let k1 = derivative(state, input, params)?;
    let k2 = derivative(&state.axpy(0.5 * dt, &k1), input, params)?;
    let k3 = derivative(&state.axpy(0.5 * dt, &k2), input, params)?;
    let k4 = derivative(&state.axpy(dt, &k3), input, params)?;

    let s = state.to_array();
    let (a, b, c, d) = (k1.to_array(), k2.to_array(), k3.to_array(), k4.to_array());
    let mut out = [0.0; 12];
    for i in 0..12 {
        out[i] = s[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
    }
    Ok(StateVector::from_array(out))
}
