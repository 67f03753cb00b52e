//! Experiment orchestration on top of the core crate, without file IO.

use nlvg_core::metrics::{compare as compare_reports, ComparisonTable, MetricReport};
use nlvg_core::planner::{plan_detour, PlannedPath, PlannerError};
use nlvg_core::sim::{run_closed_loop, MetricWindows, SimConfig, SimError, SimLog};
use nlvg_core::tuning::{
    tune_bounds, CostFunction, CostSpec, GainVector, StepEpisode, TunedBounds, TuningError,
};
use nlvg_core::{Channel, Reference, ReferenceSample, StateVector, TrajectorySpec};
use thiserror::Error;

use crate::config::{
    CampaignConfig, ConfigError, ControllerMode, NlvgTable, PathWindow, RunConfig, Scene,
    ScheduleSet, TrajectoryKind,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("plot: {0}")]
    Plot(String),
    #[error("run {run} diverged: {source}")]
    Diverged { run: String, source: SimError },
    #[error("run {run} failed: {source}")]
    Simulation { run: String, source: SimError },
    #[error("metrics for run {run}: {source}")]
    Metrics {
        run: String,
        source: nlvg_core::MetricsError,
    },
    #[error("planner: {0}")]
    Planner(PlannerError),
    #[error("tuning campaign on {channel}: {source}")]
    Tuning {
        channel: &'static str,
        source: TuningError,
    },
}

impl CliError {
    /// 0 success, 1 config error, 2 divergence, 3 planner infeasible.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Diverged { .. } => 2,
            CliError::Tuning {
                source: TuningError::EpisodeDiverged(_),
                ..
            } => 2,
            CliError::Planner(PlannerError::PlanInfeasible(_))
            | CliError::Planner(PlannerError::NoVerticalRoom) => 3,
            _ => 1,
        }
    }
}

/// Reference driving one run.
#[derive(Debug, Clone, PartialEq)]
pub enum RunReference {
    Spec(TrajectorySpec),
    Path(PlannedPath),
}

impl Reference for RunReference {
    fn sample(&self, t: f64) -> ReferenceSample {
        match self {
            RunReference::Spec(s) => s.sample(t),
            RunReference::Path(p) => p.sample(t),
        }
    }

    fn yaw_policy_applies(&self) -> bool {
        match self {
            RunReference::Spec(s) => s.yaw_policy_applies(),
            RunReference::Path(p) => p.yaw_policy_applies(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub name: String,
    pub reference: RunReference,
    /// Channels scored by the metrics.
    pub channels: Vec<Channel>,
    pub path_following: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub name: String,
    pub spec: RunSpec,
    pub log: SimLog,
    pub report: MetricReport,
}

pub fn plan(cfg: &RunConfig) -> Result<(Scene, PlannedPath), CliError> {
    let scene = cfg
        .scene()?
        .ok_or_else(|| ConfigError::Invalid("no scene configured".into()))?;
    let path = plan_detour(&scene.request(), &scene.obstacles()).map_err(CliError::Planner)?;
    Ok((scene, path))
}

/// The runs a config describes: one per stepped channel, or a single
/// path-following run.
pub fn runs(cfg: &RunConfig) -> Result<Vec<RunSpec>, CliError> {
    let t = &cfg.trajectory;
    let path_run = |name: &str, reference| RunSpec {
        name: name.to_string(),
        reference,
        channels: Channel::ALL.to_vec(),
        path_following: true,
    };
    Ok(match t.kind {
        TrajectoryKind::Step => t
            .step
            .channels
            .iter()
            .map(|&ch| RunSpec {
                name: format!("step_{}", ch.name()),
                reference: RunReference::Spec(t.step.spec(ch)),
                channels: vec![ch],
                path_following: false,
            })
            .collect(),
        TrajectoryKind::Storm => vec![path_run("storm", RunReference::Spec(t.storm.spec()))],
        TrajectoryKind::Lissajous => {
            vec![path_run(
                "lissajous",
                RunReference::Spec(t.lissajous.spec()),
            )]
        }
        TrajectoryKind::Plan => vec![path_run("plan", RunReference::Path(plan(cfg)?.1))],
    })
}

pub fn sim_config(cfg: &RunConfig, reference: &dyn Reference) -> Result<SimConfig, CliError> {
    let p = match cfg.initial.position {
        Some(p) => p,
        None => reference.sample(0.0).pos.to_array(),
    };
    Ok(SimConfig {
        plant: cfg.plant,
        cascade: cfg.cascade()?,
        yaw: cfg.controller.yaw,
        dt: cfg.dt,
        t_total: cfg.t_total,
        initial: StateVector::at_rest(p[0], p[1], p[2]),
    })
}

fn windows(cfg: &RunConfig, spec: &RunSpec, log: &SimLog) -> MetricWindows {
    if spec.path_following && cfg.metrics.path_window == PathWindow::Full {
        let span = log.rows.last().map_or(0.0, |r| r.t);
        MetricWindows {
            t_peak_attitude: span,
            t_peak_position: span,
        }
    } else {
        cfg.metrics.peak_windows()
    }
}

pub fn execute(cfg: &RunConfig, spec: &RunSpec, label: &str) -> Result<RunResult, CliError> {
    let sim = sim_config(cfg, &spec.reference)?;
    let log = run_closed_loop(&sim, &spec.reference).map_err(|source| {
        if source.is_divergence() {
            CliError::Diverged {
                run: spec.name.clone(),
                source,
            }
        } else {
            CliError::Simulation {
                run: spec.name.clone(),
                source,
            }
        }
    })?;
    let report = log
        .report(label, &spec.channels, &windows(cfg, spec, &log))
        .map_err(|source| CliError::Metrics {
            run: spec.name.clone(),
            source,
        })?;
    Ok(RunResult {
        name: spec.name.clone(),
        spec: spec.clone(),
        log,
        report,
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<Vec<RunResult>, CliError> {
    let label = cfg.controller.mode.name();
    runs(cfg)?
        .iter()
        .map(|spec| execute(cfg, spec, label))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: Vec<RunResult>,
    pub candidate: Vec<RunResult>,
    pub tables: Vec<(String, ComparisonTable)>,
}

/// Labels for the two sides, kept distinct.
pub fn labels(a: &RunConfig, b: &RunConfig) -> (String, String) {
    let (la, lb) = (a.controller.mode.name(), b.controller.mode.name());
    if la == lb {
        (format!("{la}_a"), format!("{lb}_b"))
    } else {
        (la.to_string(), lb.to_string())
    }
}

pub fn compare(baseline: &RunConfig, candidate: &RunConfig) -> Result<Comparison, CliError> {
    baseline.check_same_experiment(candidate)?;
    let (la, lb) = labels(baseline, candidate);
    let specs = runs(baseline)?;
    let mut out = Comparison {
        baseline: Vec::new(),
        candidate: Vec::new(),
        tables: Vec::new(),
    };
    for spec in &specs {
        let a = execute(baseline, spec, &la)?;
        let b = execute(candidate, spec, &lb)?;
        let table = compare_reports(&a.report, &b.report).map_err(|source| CliError::Metrics {
            run: spec.name.clone(),
            source,
        })?;
        out.tables.push((spec.name.clone(), table));
        out.baseline.push(a);
        out.candidate.push(b);
    }
    Ok(out)
}

/// Baseline against NLVG on the config's experiment with `kind`.
pub fn experiment(cfg: &RunConfig, kind: TrajectoryKind) -> Result<Comparison, CliError> {
    let cfg = cfg.with_kind(kind);
    compare(
        &cfg.with_mode(ControllerMode::Pid),
        &cfg.with_mode(ControllerMode::Nlvg),
    )
}

/// Minimizers of the synthetic K1 and K2 costs.
pub const SYNTHETIC_K1: GainVector = GainVector {
    kp: 2.0,
    ki: 1.0,
    kd: 0.0,
};
pub const SYNTHETIC_K2: GainVector = GainVector {
    kp: 4.0,
    ki: 1.5,
    kd: 0.5,
};

struct Quadratic(GainVector);

impl CostFunction for Quadratic {
    fn cost(&self, k: &GainVector) -> Result<f64, TuningError> {
        Ok((0..3).map(|i| (k[i] - self.0[i]).powi(2)).sum())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub campaigns: Vec<(CampaignConfig, TunedBounds)>,
    pub fragment: NlvgTable,
}

pub fn tune(cfg: &RunConfig) -> Result<TuneResult, CliError> {
    let base_cfg = cfg.with_mode(ControllerMode::Pid);
    let mut base = sim_config(&base_cfg, &TrajectorySpec::default_storm())?;
    base.yaw = nlvg_core::YawPolicy::Zero;
    let tu = &cfg.tuning;
    let mut campaigns = Vec::new();
    let mut fragment = NlvgTable::default();
    for (idx, c) in tu.campaign.iter().enumerate() {
        let es = tu.es(cfg.seed, idx);
        let spec = |amplitude| {
            let mut s = CostSpec::step(c.channel, amplitude, c.tf);
            s.t0 = c.t0;
            if !c.penalize_divergence {
                s.divergence_penalty = None;
            }
            s
        };
        let result = if tu.synthetic {
            tune_bounds(&es, &Quadratic(SYNTHETIC_K1), &Quadratic(SYNTHETIC_K2))
        } else {
            let small = StepEpisode {
                spec: spec(c.small),
                base,
            };
            let large = StepEpisode {
                spec: spec(c.large),
                base,
            };
            tune_bounds(&es, &small, &large)
        }
        .map_err(|source| CliError::Tuning {
            channel: c.channel.name(),
            source,
        })?;
        for ch in c.targets() {
            fragment.set(ch, ScheduleSet::from_array(result.schedules));
        }
        campaigns.push((c.clone(), result));
    }
    Ok(TuneResult {
        campaigns,
        fragment,
    })
}
