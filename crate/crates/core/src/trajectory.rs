//! Reference trajectories: steps, the outward "storm" spiral and a 3D
//! Lissajous figure-eight. All derivatives are analytic.

use serde::{Deserialize, Serialize};

use crate::control::Channel;
use crate::math::{atan2, cos, sin, wrap_pi, Vec3};

/// Desired roll/pitch handed straight to the attitude loop (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AttitudeTarget {
    pub phi: f64,
    pub theta: f64,
}

/// Desired values at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub t: f64,
    pub pos: Vec3,
    pub vel: Vec3,
    pub acc: Vec3,
    /// Desired yaw (rad).
    pub psi: f64,
    /// When set, the planar position loops are bypassed and the attitude
    /// loop tracks this target directly (attitude step experiments).
    pub attitude: Option<AttitudeTarget>,
}

impl ReferenceSample {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.pos.is_finite()
            && self.vel.is_finite()
            && self.acc.is_finite()
            && self.psi.is_finite()
            && self
                .attitude
                .is_none_or(|a| a.phi.is_finite() && a.theta.is_finite())
    }

    fn at_rest(t: f64, pos: Vec3) -> Self {
        Self {
            t,
            pos,
            ..Self::default()
        }
    }
}

/// Anything that can produce a reference at time `t`.
pub trait Reference {
    fn sample(&self, t: f64) -> ReferenceSample;

    /// Whether the yaw policy may overwrite `psi` (path-following
    /// references) or the generator owns yaw (steps).
    fn yaw_policy_applies(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TrajectorySpec {
    Step {
        channel: Channel,
        amplitude: f64,
        #[serde(default)]
        t_start: f64,
        /// Hold position for the channels that are not stepped.
        #[serde(default)]
        base: Vec3,
    },
    Storm {
        r0: f64,
        /// Radial growth rate, m/s.
        radial_rate: f64,
        omega: f64,
        z0: f64,
        climb_rate: f64,
        t_takeoff: f64,
        ramp_time: f64,
    },
    Lissajous {
        ax: f64,
        ay: f64,
        az: f64,
        a: f64,
        b: f64,
        c: f64,
        phase: f64,
        omega: f64,
        z0: f64,
    },
}

impl TrajectorySpec {
    pub fn default_storm() -> Self {
        TrajectorySpec::Storm {
            r0: 1.0,
            radial_rate: 0.05,
            omega: 0.15,
            z0: 10.0,
            climb_rate: 0.0,
            t_takeoff: 20.0,
            ramp_time: 5.0,
        }
    }

    pub fn default_lissajous() -> Self {
        TrajectorySpec::Lissajous {
            ax: 5.0,
            ay: 5.0,
            az: 2.0,
            a: 1.0,
            b: 2.0,
            c: 1.0,
            phase: 0.0,
            omega: 0.1,
            z0: 10.0,
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        match *self {
            TrajectorySpec::Step {
                amplitude,
                t_start,
                base,
                ..
            } => {
                if !amplitude.is_finite() || !base.is_finite() || !(t_start >= 0.0) {
                    return Err("step needs finite amplitude/base and t_start >= 0");
                }
            }
            TrajectorySpec::Storm {
                r0,
                radial_rate,
                omega,
                z0,
                climb_rate,
                t_takeoff,
                ramp_time,
            } => {
                if [r0, radial_rate, z0, climb_rate]
                    .iter()
                    .any(|v| !v.is_finite())
                {
                    return Err("storm parameters must be finite");
                }
                if !(omega > 0.0) || !(t_takeoff >= 0.0) || !(ramp_time > 0.0) {
                    return Err("storm needs omega > 0, t_takeoff >= 0, ramp_time > 0");
                }
            }
            TrajectorySpec::Lissajous {
                ax,
                ay,
                az,
                a,
                b,
                c,
                phase,
                omega,
                z0,
            } => {
                if [ax, ay, az, a, b, c, phase, z0]
                    .iter()
                    .any(|v| !v.is_finite())
                {
                    return Err("lissajous parameters must be finite");
                }
                if !(omega > 0.0) {
                    return Err("lissajous needs omega > 0");
                }
            }
        }
        Ok(())
    }
}

impl Reference for TrajectorySpec {
    fn sample(&self, t: f64) -> ReferenceSample {
        match self {
            TrajectorySpec::Step { .. } => step_reference(self, t),
            TrajectorySpec::Storm { .. } => storm_reference(self, t),
            TrajectorySpec::Lissajous { .. } => lissajous_reference(self, t),
        }
    }

    fn yaw_policy_applies(&self) -> bool {
        !matches!(self, TrajectorySpec::Step { .. })
    }
}

/// Step of `amplitude` on one channel at `t_start`. Derivatives are reported
/// as zero, including at the jump.
pub fn step_reference(spec: &TrajectorySpec, t: f64) -> ReferenceSample {
    let TrajectorySpec::Step {
        channel,
        amplitude,
        t_start,
        base,
    } = *spec
    else {
        return ReferenceSample::at_rest(t, Vec3::ZERO);
    };
    let v = if t >= t_start { amplitude } else { 0.0 };
    let mut r = ReferenceSample::at_rest(t, base);
    match channel {
        Channel::X => r.pos.x += v,
        Channel::Y => r.pos.y += v,
        Channel::Z => r.pos.z += v,
        Channel::Psi => r.psi = v,
        Channel::Phi => r.attitude = Some(AttitudeTarget { phi: v, theta: 0.0 }),
        Channel::Theta => r.attitude = Some(AttitudeTarget { phi: 0.0, theta: v }),
    }
    r
}

/// Storm route: hold the origin until `t_takeoff`, climb along a straight
/// ramp to the spiral start `(r0, 0, z0)`, then follow the Archimedean
/// spiral `r = r0 + c·τ` at angular rate `ω` (and optional climb).
pub fn storm_reference(spec: &TrajectorySpec, t: f64) -> ReferenceSample {
    let TrajectorySpec::Storm {
        r0,
        radial_rate: c,
        omega: w,
        z0,
        climb_rate,
        t_takeoff,
        ramp_time,
    } = *spec
    else {
        return ReferenceSample::at_rest(t, Vec3::ZERO);
    };
    if t < t_takeoff {
        return ReferenceSample::at_rest(t, Vec3::ZERO);
    }
    let start = Vec3::new(r0, 0.0, z0);
    if t < t_takeoff + ramp_time {
        let s = (t - t_takeoff) / ramp_time;
        return ReferenceSample {
            t,
            pos: start * s,
            vel: start * (1.0 / ramp_time),
            ..ReferenceSample::default()
        };
    }
    let tau = t - t_takeoff - ramp_time;
    let r = r0 + c * tau;
    let (s, co) = (sin(w * tau), cos(w * tau));
    ReferenceSample {
        t,
        pos: Vec3::new(r * co, r * s, z0 + climb_rate * tau),
        vel: Vec3::new(c * co - r * w * s, c * s + r * w * co, climb_rate),
        acc: Vec3::new(
            -2.0 * c * w * s - r * w * w * co,
            2.0 * c * w * co - r * w * w * s,
            0.0,
        ),
        ..ReferenceSample::default()
    }
}

/// `x = Ax sin(aωt)`, `y = Ay sin(bωt + phase)`, `z = z0 + Az sin(cωt)`.
pub fn lissajous_reference(spec: &TrajectorySpec, t: f64) -> ReferenceSample {
    let TrajectorySpec::Lissajous {
        ax,
        ay,
        az,
        a,
        b,
        c,
        phase,
        omega,
        z0,
    } = *spec
    else {
        return ReferenceSample::at_rest(t, Vec3::ZERO);
    };
    let (wa, wb, wc) = (a * omega, b * omega, c * omega);
    let (sa, ca) = (sin(wa * t), cos(wa * t));
    let (sb, cb) = (sin(wb * t + phase), cos(wb * t + phase));
    let (sc, cc) = (sin(wc * t), cos(wc * t));
    ReferenceSample {
        t,
        pos: Vec3::new(ax * sa, ay * sb, z0 + az * sc),
        vel: Vec3::new(ax * wa * ca, ay * wb * cb, az * wc * cc),
        acc: Vec3::new(-ax * wa * wa * sa, -ay * wb * wb * sb, -az * wc * wc * sc),
        ..ReferenceSample::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YawPolicy {
    #[default]
    Zero,
    /// Face along the horizontal velocity, unwrapped for continuity.
    Tangent,
}

/// Stateful yaw reference generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YawTracker {
    policy: YawPolicy,
    last: f64,
}

impl YawTracker {
    pub fn new(policy: YawPolicy) -> Self {
        Self { policy, last: 0.0 }
    }

    /// Next desired yaw for horizontal velocity `(vx, vy)`. Near-zero
    /// velocity holds the previous value.
    pub fn next(&mut self, vx: f64, vy: f64) -> f64 {
        match self.policy {
            YawPolicy::Zero => 0.0,
            YawPolicy::Tangent => {
                if vx * vx + vy * vy > 1e-18 {
                    let raw = atan2(vy, vx);
                    self.last += wrap_pi(raw - self.last);
                }
                self.last
            }
        }
    }
}
