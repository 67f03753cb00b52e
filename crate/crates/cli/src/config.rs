//! TOML run configuration. Unknown keys are rejected everywhere.

use std::fs;
use std::path::{Path, PathBuf};

use nlvg_core::control::ScheduleSignals;
use nlvg_core::sim::MetricWindows;
use nlvg_core::trajectory::YawPolicy;
use nlvg_core::tuning::{EsConfig, GainVector};
use nlvg_core::{
    CascadeConfig, Channel, ChannelGains, NlvgSchedule, ObstacleSphere, PidOptions, PlanRequest,
    QuadParams, TrajectorySpec, Vec3,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shipped defaults with frozen tuned schedules.
pub const PAPER_DEFAULTS: &str = include_str!("../configs/paper_defaults.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("configs differ in {0}")]
    Mismatch(&'static str),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn default_dt() -> f64 {
    0.01
}

fn default_t_total() -> f64 {
    140.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// s
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// s
    #[serde(default = "default_t_total")]
    pub t_total: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub plant: QuadParams,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub tuning: TuningConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<Scene>,
    /// Scene in a separate file; mutually exclusive with `[scene]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_file: Option<PathBuf>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerMode {
    #[default]
    Pid,
    Nlvg,
}

impl ControllerMode {
    pub fn name(self) -> &'static str {
        match self {
            ControllerMode::Pid => "pid",
            ControllerMode::Nlvg => "nlvg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub mode: ControllerMode,
    pub schedule_signals: ScheduleSignals,
    pub anti_windup: f64,
    /// rad
    pub attitude_clamp: f64,
    pub yaw: YawPolicy,
    /// Fixed `[kp, ki, kd]` per channel; also used by NLVG mode for channels
    /// without a schedule.
    pub pid: PidTable,
    pub nlvg: NlvgTable,
    /// Schedules written by `tune`; inline `[controller.nlvg]` entries win.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nlvg_file: Option<PathBuf>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        let opts = PidOptions::default();
        Self {
            mode: ControllerMode::Pid,
            schedule_signals: opts.schedule_signals,
            anti_windup: opts.anti_windup,
            attitude_clamp: CascadeConfig::initial_gains().attitude_clamp,
            yaw: YawPolicy::Zero,
            pid: PidTable::default(),
            nlvg: NlvgTable::default(),
            nlvg_file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidTable {
    pub x: [f64; 3],
    pub y: [f64; 3],
    pub z: [f64; 3],
    pub phi: [f64; 3],
    pub theta: [f64; 3],
    pub psi: [f64; 3],
}

impl Default for PidTable {
    fn default() -> Self {
        let c = CascadeConfig::initial_gains();
        let get = |ch| match c.gains(ch) {
            ChannelGains::Fixed { kp, ki, kd } => [*kp, *ki, *kd],
            ChannelGains::Nlvg { .. } => unreachable!("initial gains are fixed"),
        };
        Self {
            x: get(Channel::X),
            y: get(Channel::Y),
            z: get(Channel::Z),
            phi: get(Channel::Phi),
            theta: get(Channel::Theta),
            psi: get(Channel::Psi),
        }
    }
}

impl PidTable {
    pub fn get(&self, ch: Channel) -> [f64; 3] {
        match ch {
            Channel::X => self.x,
            Channel::Y => self.y,
            Channel::Z => self.z,
            Channel::Phi => self.phi,
            Channel::Theta => self.theta,
            Channel::Psi => self.psi,
        }
    }
}

/// Schedules for the P, I and D gains of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSet {
    pub p: NlvgSchedule,
    pub i: NlvgSchedule,
    pub d: NlvgSchedule,
}

impl ScheduleSet {
    pub fn from_array(s: [NlvgSchedule; 3]) -> Self {
        Self {
            p: s[0],
            i: s[1],
            d: s[2],
        }
    }

    pub fn gains(&self) -> ChannelGains {
        ChannelGains::Nlvg {
            p: self.p,
            i: self.i,
            d: self.d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NlvgTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<ScheduleSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<ScheduleSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<ScheduleSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<ScheduleSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<ScheduleSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<ScheduleSet>,
}

impl NlvgTable {
    pub fn get(&self, ch: Channel) -> Option<ScheduleSet> {
        match ch {
            Channel::X => self.x,
            Channel::Y => self.y,
            Channel::Z => self.z,
            Channel::Phi => self.phi,
            Channel::Theta => self.theta,
            Channel::Psi => self.psi,
        }
    }

    pub fn set(&mut self, ch: Channel, s: ScheduleSet) {
        let slot = match ch {
            Channel::X => &mut self.x,
            Channel::Y => &mut self.y,
            Channel::Z => &mut self.z,
            Channel::Phi => &mut self.phi,
            Channel::Theta => &mut self.theta,
            Channel::Psi => &mut self.psi,
        };
        *slot = Some(s);
    }

    /// Entries of `over` replace those of `self`.
    pub fn overlay(&self, over: &NlvgTable) -> NlvgTable {
        let mut out = *self;
        for ch in Channel::ALL {
            if let Some(s) = over.get(ch) {
                out.set(ch, s);
            }
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        Channel::ALL.iter().all(|&ch| self.get(ch).is_none())
    }
}

/// Contents of a schedule fragment written by `tune`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlvgFragment {
    #[serde(default)]
    pub nlvg: NlvgTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    #[default]
    Step,
    Storm,
    Lissajous,
    /// Follow the path planned through `[scene]`.
    Plan,
}

impl TrajectoryKind {
    pub fn name(self) -> &'static str {
        match self {
            TrajectoryKind::Step => "step",
            TrajectoryKind::Storm => "storm",
            TrajectoryKind::Lissajous => "lissajous",
            TrajectoryKind::Plan => "plan",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub kind: TrajectoryKind,
    pub step: StepConfig,
    pub storm: StormConfig,
    pub lissajous: LissajousConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    /// One run per listed channel.
    pub channels: Vec<Channel>,
    /// rad for attitude channels, m for position channels
    pub amplitude: f64,
    /// s
    pub t_start: f64,
    /// Hover altitude held during the step (m).
    pub altitude: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            channels: vec![Channel::Phi, Channel::Theta],
            amplitude: 0.2,
            t_start: 0.0,
            altitude: 10.0,
        }
    }
}

impl StepConfig {
    pub fn spec(&self, channel: Channel) -> TrajectorySpec {
        TrajectorySpec::Step {
            channel,
            amplitude: self.amplitude,
            t_start: self.t_start,
            base: Vec3::new(0.0, 0.0, self.altitude),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StormConfig {
    pub r0: f64,
    pub radial_rate: f64,
    pub omega: f64,
    pub z0: f64,
    pub climb_rate: f64,
    pub t_takeoff: f64,
    pub ramp_time: f64,
}

impl Default for StormConfig {
    fn default() -> Self {
        match TrajectorySpec::default_storm() {
            TrajectorySpec::Storm {
                r0,
                radial_rate,
                omega,
                z0,
                climb_rate,
                t_takeoff,
                ramp_time,
            } => Self {
                r0,
                radial_rate,
                omega,
                z0,
                climb_rate,
                t_takeoff,
                ramp_time,
            },
            _ => unreachable!(),
        }
    }
}

impl StormConfig {
    pub fn spec(&self) -> TrajectorySpec {
        TrajectorySpec::Storm {
            r0: self.r0,
            radial_rate: self.radial_rate,
            omega: self.omega,
            z0: self.z0,
            climb_rate: self.climb_rate,
            t_takeoff: self.t_takeoff,
            ramp_time: self.ramp_time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LissajousConfig {
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub phase: f64,
    pub omega: f64,
    pub z0: f64,
}

impl Default for LissajousConfig {
    fn default() -> Self {
        match TrajectorySpec::default_lissajous() {
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
            } => Self {
                ax,
                ay,
                az,
                a,
                b,
                c,
                phase,
                omega,
                z0,
            },
            _ => unreachable!(),
        }
    }
}

impl LissajousConfig {
    pub fn spec(&self) -> TrajectorySpec {
        TrajectorySpec::Lissajous {
            ax: self.ax,
            ay: self.ay,
            az: self.az,
            a: self.a,
            b: self.b,
            c: self.c,
            phase: self.phase,
            omega: self.omega,
            z0: self.z0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    /// Start at rest here; defaults to the reference position at `t = 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathWindow {
    /// Path-following runs are scored over the whole run.
    #[default]
    Full,
    /// Path-following runs use the same `t_peak` windows as steps.
    Peak,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// s
    pub t_peak_attitude: f64,
    /// s
    pub t_peak_position: f64,
    pub path_window: PathWindow,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        let w = MetricWindows::default();
        Self {
            t_peak_attitude: w.t_peak_attitude,
            t_peak_position: w.t_peak_position,
            path_window: PathWindow::Full,
        }
    }
}

impl MetricsConfig {
    pub fn peak_windows(&self) -> MetricWindows {
        MetricWindows {
            t_peak_attitude: self.t_peak_attitude,
            t_peak_position: self.t_peak_position,
        }
    }
}

fn default_true() -> bool {
    true
}

/// One K1/K2 campaign: step episodes on `channel`, schedules applied to
/// every channel in `apply`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub channel: Channel,
    #[serde(default)]
    pub apply: Vec<Channel>,
    /// Step amplitude for the K1 episode.
    pub small: f64,
    /// Step amplitude for the K2 episode.
    pub large: f64,
    /// Cost window (s).
    #[serde(default)]
    pub t0: f64,
    pub tf: f64,
    #[serde(default = "default_true")]
    pub penalize_divergence: bool,
}

impl CampaignConfig {
    pub fn targets(&self) -> Vec<Channel> {
        if self.apply.is_empty() {
            vec![self.channel]
        } else {
            self.apply.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub alpha: f64,
    pub delta: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub init_low: [f64; 3],
    pub init_high: [f64; 3],
    pub tol: f64,
    pub patience: usize,
    pub delta1: f64,
    pub delta2: f64,
    /// Replace the simulated episodes by convex quadratic costs.
    pub synthetic: bool,
    pub campaign: Vec<CampaignConfig>,
}

impl Default for TuningConfig {
    fn default() -> Self {
        let es = EsConfig::default();
        let c = |channel, apply: &[Channel], small, large, tf| CampaignConfig {
            channel,
            apply: apply.to_vec(),
            small,
            large,
            t0: 0.0,
            tf,
            penalize_divergence: true,
        };
        Self {
            alpha: es.alpha,
            delta: es.delta,
            max_iters: es.max_iters,
            restarts: es.restarts,
            init_low: es.init_low.to_array(),
            init_high: es.init_high.to_array(),
            tol: es.tol,
            patience: es.patience,
            delta1: es.delta1,
            delta2: es.delta2,
            synthetic: false,
            campaign: vec![
                c(
                    Channel::Phi,
                    &[Channel::Phi, Channel::Theta],
                    0.05,
                    0.5,
                    2.0,
                ),
                c(Channel::X, &[Channel::X, Channel::Y], 0.5, 5.0, 5.0),
                c(Channel::Z, &[Channel::Z], 0.5, 5.0, 5.0),
            ],
        }
    }
}

impl TuningConfig {
    /// ES settings for campaign number `index`.
    pub fn es(&self, seed: u64, index: usize) -> EsConfig {
        EsConfig {
            alpha: self.alpha,
            delta: self.delta,
            max_iters: self.max_iters,
            restarts: self.restarts,
            seed: seed.wrapping_add(index as u64),
            init_low: GainVector::from_array(self.init_low),
            init_high: GainVector::from_array(self.init_high),
            tol: self.tol,
            patience: self.patience,
            delta1: self.delta1,
            delta2: self.delta2,
        }
    }
}

fn default_sample_dt() -> f64 {
    0.05
}

fn default_margin() -> f64 {
    0.5
}

fn default_ls_factor() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    pub id: u32,
    pub center: [f64; 3],
    pub r_safe: f64,
}

/// Planner input: route, limits and threat spheres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub waypoints: Vec<[f64; 3]>,
    pub v_max: f64,
    pub a_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_ls_factor")]
    pub ls_factor: f64,
    #[serde(default, rename = "obstacle")]
    pub obstacles: Vec<ObstacleConfig>,
}

impl Scene {
    pub fn request(&self) -> PlanRequest {
        PlanRequest {
            waypoints: self.waypoints.iter().map(|&w| Vec3::from(w)).collect(),
            v_max: self.v_max,
            a_max: self.a_max,
            z_min: self.z_min,
            z_max: self.z_max,
            sample_dt: self.sample_dt,
            margin: self.margin,
            ls_factor: self.ls_factor,
        }
    }

    pub fn obstacles(&self) -> Vec<ObstacleSphere> {
        self.obstacles
            .iter()
            .map(|o| ObstacleSphere::new(o.id, Vec3::from(o.center), o.r_safe))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.request()
            .validate()
            .map_err(|e| invalid(format!("scene: {e}")))?;
        for o in self.obstacles() {
            o.validate().map_err(|e| invalid(format!("scene: {e}")))?;
        }
        let mut ids: Vec<u32> = self.obstacles.iter().map(|o| o.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("scene: obstacle ids must be unique"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    scene: Scene,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = read(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str_in(&text, path, base)
    }

    /// The shipped defaults (`configs/paper_defaults.toml`).
    pub fn paper_defaults() -> Self {
        Self::from_str_in(
            PAPER_DEFAULTS,
            Path::new("paper_defaults.toml"),
            PathBuf::new(),
        )
        .expect("shipped defaults are valid")
    }

    /// Parses `text`, labelled `origin` in errors, with relative paths
    /// resolved against `base_dir`.
    pub fn from_str_in(text: &str, origin: &Path, base_dir: PathBuf) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = parse(text, origin)?;
        cfg.base_dir = base_dir;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Inline schedules over those from `nlvg_file`.
    pub fn schedules(&self) -> Result<NlvgTable, ConfigError> {
        let from_file = match &self.controller.nlvg_file {
            Some(p) => {
                let path = self.resolve(p);
                let frag: NlvgFragment = parse(&read(&path)?, &path)?;
                frag.nlvg
            }
            None => NlvgTable::default(),
        };
        Ok(from_file.overlay(&self.controller.nlvg))
    }

    pub fn cascade(&self) -> Result<CascadeConfig, ConfigError> {
        let c = &self.controller;
        let mut cascade = CascadeConfig {
            gains: [ChannelGains::fixed(0.0, 0.0, 0.0); 6],
            pid: PidOptions {
                anti_windup: c.anti_windup,
                schedule_signals: c.schedule_signals,
            },
            attitude_clamp: c.attitude_clamp,
        };
        for ch in Channel::ALL {
            let [kp, ki, kd] = c.pid.get(ch);
            cascade.set_gains(ch, ChannelGains::fixed(kp, ki, kd));
        }
        if c.mode == ControllerMode::Nlvg {
            let table = self.schedules()?;
            if table.is_empty() {
                return Err(invalid("nlvg mode needs at least one channel schedule"));
            }
            for ch in Channel::ALL {
                if let Some(s) = table.get(ch) {
                    cascade.set_gains(ch, s.gains());
                }
            }
        }
        cascade
            .validate()
            .map_err(|e| invalid(format!("controller: {e}")))?;
        Ok(cascade)
    }

    pub fn scene(&self) -> Result<Option<Scene>, ConfigError> {
        match (&self.scene, &self.scene_file) {
            (Some(_), Some(_)) => Err(invalid("give either [scene] or scene_file, not both")),
            (Some(s), None) => Ok(Some(s.clone())),
            (None, Some(p)) => {
                let path = self.resolve(p);
                let f: SceneFile = parse(&read(&path)?, &path)?;
                Ok(Some(f.scene))
            }
            (None, None) => Ok(None),
        }
    }

    pub fn with_mode(&self, mode: ControllerMode) -> Self {
        let mut c = self.clone();
        c.controller.mode = mode;
        c
    }

    pub fn with_kind(&self, kind: TrajectoryKind) -> Self {
        let mut c = self.clone();
        c.trajectory.kind = kind;
        c
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt must be > 0"));
        }
        if !(self.t_total >= self.dt) || !self.t_total.is_finite() {
            return Err(invalid("t_total must be >= dt"));
        }
        self.plant
            .validate()
            .map_err(|e| invalid(format!("plant: {e}")))?;
        self.cascade()?;
        let t = &self.trajectory;
        if t.step.channels.is_empty() {
            return Err(invalid("trajectory.step.channels is empty"));
        }
        for spec in t
            .step
            .channels
            .iter()
            .map(|&ch| t.step.spec(ch))
            .chain([t.storm.spec(), t.lissajous.spec()])
        {
            spec.validate()
                .map_err(|e| invalid(format!("trajectory: {e}")))?;
        }
        if let Some(p) = self.initial.position {
            if p.iter().any(|v| !v.is_finite()) {
                return Err(invalid("initial.position must be finite"));
            }
        }
        let m = &self.metrics;
        if !(m.t_peak_attitude > 0.0 && m.t_peak_position > 0.0) {
            return Err(invalid("metric windows must be > 0"));
        }
        let tu = &self.tuning;
        tu.es(self.seed, 0)
            .validate()
            .map_err(|e| invalid(format!("tuning: {e}")))?;
        for c in &tu.campaign {
            if !(0.0 <= c.t0 && c.t0 < c.tf) {
                return Err(invalid("tuning campaign needs 0 <= t0 < tf"));
            }
            if !(c.small != 0.0 && c.large != 0.0) {
                return Err(invalid("tuning campaign amplitudes must be nonzero"));
            }
        }
        let scene = self.scene()?;
        if let Some(s) = &scene {
            s.validate()?;
        }
        if t.kind == TrajectoryKind::Plan && scene.is_none() {
            return Err(invalid("trajectory kind plan needs a scene"));
        }
        Ok(())
    }

    /// Fails unless `other` describes the same experiment.
    pub fn check_same_experiment(&self, other: &RunConfig) -> Result<(), ConfigError> {
        if self.plant != other.plant {
            return Err(ConfigError::Mismatch("plant"));
        }
        if self.trajectory != other.trajectory {
            return Err(ConfigError::Mismatch("trajectory"));
        }
        if self.dt != other.dt || self.t_total != other.t_total {
            return Err(ConfigError::Mismatch("time grid"));
        }
        if self.initial != other.initial {
            return Err(ConfigError::Mismatch("initial state"));
        }
        if self.metrics != other.metrics {
            return Err(ConfigError::Mismatch("metric windows"));
        }
        if self.scene()? != other.scene()? {
            return Err(ConfigError::Mismatch("scene"));
        }
        Ok(())
    }
}
