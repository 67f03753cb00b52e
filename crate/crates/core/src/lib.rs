//! Quadcopter flight-control workbench core.
//!
//! Everything in this crate is a pure function of its arguments: a
//! Newton–Euler quadcopter model with a fixed-step RK4 integrator, fixed-gain
//! and nonlinear variable-gain (NLVG) PID channel controllers arranged in a
//! position → attitude cascade, reference trajectory generators, a
//! sphere-threat Bezier detour planner, IAE/ITAE/ITSE metrics, and a
//! finite-difference extremum-seeking tuner that learns the NLVG gain bounds.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! plotting live in the `nlvg-cli` companion crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod control;
pub mod dynamics;
pub mod math;
pub mod metrics;
pub mod planner;
pub mod sim;
pub mod trajectory;
pub mod tuning;

pub use control::{
    cascade_update, nlvg_gain, outer_to_attitude, pid_step, CascadeConfig, CascadeOutput,
    CascadeState, Channel, ChannelGains, ControlError, NlvgSchedule, PidChannelState, PidOptions,
    ScheduleSignals,
};
pub use dynamics::{
    derivative, hover_input, saturate, step_rk4, ControlInput, DynamicsError, QuadParams,
    StateVector,
};
pub use math::Vec3;
pub use metrics::{compare, iae, itae, itse, ErrorSeries, MetricReport, MetricsError};
pub use planner::{plan_detour, ObstacleSphere, PlanRequest, PlannedPath, PlannerError};

pub use sim::{run_closed_loop, SimConfig, SimError, SimLog};
pub use trajectory::{Reference, ReferenceSample, TrajectorySpec, YawPolicy};
pub use tuning::{es_descend, grad_estimate, tune_bounds, EsConfig, GainVector, TuningError};
