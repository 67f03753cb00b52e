//! Extremum-seeking gain tuner.
//!
//! The cost of a gain triple is the mean squared tracking error of a
//! simulated step episode. Its gradient is estimated with central
//! differences and followed by projected gradient descent, restarted from
//! several seeded random initial points. Two campaigns, one on a
//! small-amplitude step and one on the maximum-amplitude step, give the lower
//! and upper gain bounds of the NLVG schedules.

use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{Channel, ChannelGains, NlvgSchedule};
use crate::dynamics::StateVector;
use crate::math::Vec3;
use crate::metrics::{self, ErrorSeries};
use crate::sim::{run_closed_loop, SimConfig, SimError};
use crate::trajectory::TrajectorySpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TuningError {
    #[error("invalid tuning config: {0}")]
    InvalidConfig(&'static str),
    #[error("episode diverged: {0}")]
    EpisodeDiverged(SimError),
    #[error("episode failed: {0}")]
    Simulation(SimError),
    #[error("cost evaluation produced a non-finite value")]
    NonFiniteCost,
}

/// A candidate PID triple `(kp, ki, kd)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GainVector {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl GainVector {
    pub const fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.kp, self.ki, self.kd]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Componentwise projection onto the nonnegative orthant.
    pub fn projected(self) -> Self {
        Self::new(self.kp.max(0.0), self.ki.max(0.0), self.kd.max(0.0))
    }

    pub fn as_fixed(self) -> ChannelGains {
        ChannelGains::fixed(self.kp, self.ki, self.kd)
    }
}

impl Index<usize> for GainVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.kp,
            1 => &self.ki,
            2 => &self.kd,
            _ => panic!("gain index {i} out of range"),
        }
    }
}

impl IndexMut<usize> for GainVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        match i {
            0 => &mut self.kp,
            1 => &mut self.ki,
            2 => &mut self.kd,
            _ => panic!("gain index {i} out of range"),
        }
    }
}

/// Anything that maps a gain triple to a scalar cost.
pub trait CostFunction {
    fn cost(&self, k: &GainVector) -> Result<f64, TuningError>;
}

impl<F> CostFunction for F
where
    F: Fn(&GainVector) -> Result<f64, TuningError>,
{
    fn cost(&self, k: &GainVector) -> Result<f64, TuningError> {
        self(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsConfig {
    /// Gradient step size.
    pub alpha: f64,
    /// Finite-difference perturbation.
    pub delta: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init_low: GainVector,
    pub init_high: GainVector,
    /// Stop once `|ΔJ| < tol` for `patience` consecutive iterations.
    pub tol: f64,
    pub patience: usize,
    /// Scheduling thresholds written into the learned schedules.
    pub delta1: f64,
    pub delta2: f64,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            delta: 0.01,
            max_iters: 100,
            restarts: 5,
            seed: 0,
            init_low: GainVector::new(1.0, 0.0, 0.1),
            init_high: GainVector::new(20.0, 1.0, 5.0),
            tol: 1e-6,
            patience: 5,
            delta1: 0.01,
            delta2: 0.838,
        }
    }
}

impl EsConfig {
    pub fn validate(&self) -> Result<(), TuningError> {
        let bad = TuningError::InvalidConfig;
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(bad("alpha must be > 0"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(bad("delta must be > 0"));
        }
        if self.restarts < 1 {
            return Err(bad("restarts must be >= 1"));
        }
        if self.patience < 1 || !(self.tol >= 0.0) {
            return Err(bad("tol must be >= 0 and patience >= 1"));
        }
        for i in 0..3 {
            let (lo, hi) = (self.init_low[i], self.init_high[i]);
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return Err(bad("init range needs 0 <= low <= high"));
            }
        }
        if !(0.0 <= self.delta1 && self.delta1 < self.delta2) {
            return Err(bad("thresholds need 0 <= delta1 < delta2"));
        }
        Ok(())
    }
}

/// Gradient estimate and which components fell back to a forward
/// difference because `k − δ` left the feasible set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gradient {
    pub value: GainVector,
    pub one_sided: [bool; 3],
}

/// Central-difference gradient `(J(K+δe_k) − J(K−δe_k)) / 2δ` per component;
/// forward difference where `K − δe_k` would go negative.
pub fn grad_estimate(
    k: &GainVector,
    delta: f64,
    cost: &dyn CostFunction,
) -> Result<Gradient, TuningError> {
    if !(delta > 0.0) {
        return Err(TuningError::InvalidConfig("delta must be > 0"));
    }
    let mut value = GainVector::default();
    let mut one_sided = [false; 3];
    let mut j0 = None;
    for i in 0..3 {
        let mut plus = *k;
        plus[i] += delta;
        let jp = cost.cost(&plus)?;
        if k[i] - delta >= 0.0 {
            let mut minus = *k;
            minus[i] -= delta;
            let jm = cost.cost(&minus)?;
            value[i] = (jp - jm) / (2.0 * delta);
        } else {
            let jc = match j0 {
                Some(j) => j,
                None => {
                    let j = cost.cost(k)?;
                    j0 = Some(j);
                    j
                }
            };
            value[i] = (jp - jc) / delta;
            one_sided[i] = true;
        }
    }
    Ok(Gradient { value, one_sided })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub k: GainVector,
    pub cost: f64,
    pub best_cost: f64,
    pub one_sided: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsOutcome {
    pub best: GainVector,
    pub best_cost: f64,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

/// Projected gradient descent `K ← max(0, K − α·∇J(K))`.
pub fn es_descend(
    start: &GainVector,
    cfg: &EsConfig,
    cost: &dyn CostFunction,
) -> Result<EsOutcome, TuningError> {
    cfg.validate()?;
    let mut k = start.projected();
    let mut j = finite(cost.cost(&k)?)?;
    let (mut best, mut best_cost) = (k, j);
    let mut trace = Vec::with_capacity(cfg.max_iters + 1);
    trace.push(TraceRow {
        iter: 0,
        k,
        cost: j,
        best_cost,
        one_sided: false,
    });
    let mut streak = 0;
    let mut converged = false;
    for iter in 1..=cfg.max_iters {
        let g = grad_estimate(&k, cfg.delta, cost)?;
        let mut next = k;
        for i in 0..3 {
            next[i] -= cfg.alpha * g.value[i];
        }
        k = next.projected();
        let j_new = finite(cost.cost(&k)?)?;
        if j_new < best_cost {
            best = k;
            best_cost = j_new;
        }
        trace.push(TraceRow {
            iter,
            k,
            cost: j_new,
            best_cost,
            one_sided: g.one_sided.iter().any(|b| *b),
        });
        if (j_new - j).abs() < cfg.tol {
            streak += 1;
        } else {
            streak = 0;
        }
        j = j_new;
        if streak >= cfg.patience {
            converged = true;
            break;
        }
    }
    Ok(EsOutcome {
        best,
        best_cost,
        converged,
        trace,
    })
}

fn finite(j: f64) -> Result<f64, TuningError> {
    if j.is_finite() {
        Ok(j)
    } else {
        Err(TuningError::NonFiniteCost)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    K1,
    K2,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::K1 => "K1",
            Phase::K2 => "K2",
        }
    }
}

/// Independent, reproducible RNG for one restart of one phase.
pub fn restart_rng(seed: u64, phase: Phase, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase_id = match phase {
        Phase::K1 => 0u64,
        Phase::K2 => 1u64,
    };
    rng.set_stream((phase_id << 32) | restart as u64);
    rng
}

fn random_start(cfg: &EsConfig, phase: Phase, restart: usize) -> GainVector {
    let mut rng = restart_rng(cfg.seed, phase, restart);
    let mut k = GainVector::default();
    for i in 0..3 {
        let u: f64 = rng.random();
        k[i] = cfg.init_low[i] + u * (cfg.init_high[i] - cfg.init_low[i]);
    }
    k
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartRun {
    pub phase: Phase,
    pub restart: usize,
    pub start: GainVector,
    pub outcome: EsOutcome,
}

/// Best result of one campaign: lowest best-cost, ties to the lowest
/// restart index.
#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub best: GainVector,
    pub best_cost: f64,
    pub best_restart: usize,
    pub runs: Vec<RestartRun>,
}

pub fn run_campaign(
    phase: Phase,
    cfg: &EsConfig,
    cost: &dyn CostFunction,
) -> Result<Campaign, TuningError> {
    cfg.validate()?;
    let mut runs = Vec::with_capacity(cfg.restarts);
    for restart in 0..cfg.restarts {
        let start = random_start(cfg, phase, restart);
        let outcome = es_descend(&start, cfg, cost)?;
        runs.push(RestartRun {
            phase,
            restart,
            start,
            outcome,
        });
    }
    let mut best_idx = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.outcome.best_cost < runs[best_idx].outcome.best_cost {
            best_idx = i;
        }
    }
    Ok(Campaign {
        best: runs[best_idx].outcome.best,
        best_cost: runs[best_idx].outcome.best_cost,
        best_restart: best_idx,
        runs,
    })
}

/// Learned bounds and the NLVG schedules `(p, i, d)` built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct TunedBounds {
    pub k1: Campaign,
    pub k2: Campaign,
    /// Components where the large-step optimum fell below the small-step one;
    /// their half-range is forced to zero.
    pub inverted: [bool; 3],
    pub schedules: [NlvgSchedule; 3],
}

impl TunedBounds {
    pub fn gains(&self) -> ChannelGains {
        ChannelGains::Nlvg {
            p: self.schedules[0],
            i: self.schedules[1],
            d: self.schedules[2],
        }
    }
}

/// Builds schedules from lower/upper bounds with `A = max(0, (K2−K1)/2)`.
pub fn schedules_from_bounds(
    k1: &GainVector,
    k2: &GainVector,
    delta1: f64,
    delta2: f64,
) -> ([NlvgSchedule; 3], [bool; 3]) {
    let mut inverted = [false; 3];
    let mut out = [NlvgSchedule::constant(0.0, delta1, delta2); 3];
    for i in 0..3 {
        inverted[i] = k2[i] < k1[i];
        out[i] = NlvgSchedule {
            k1: k1[i],
            a: (0.5 * (k2[i] - k1[i])).max(0.0),
            delta1,
            delta2,
        };
    }
    (out, inverted)
}

/// Two ES campaigns: `small` (small-amplitude step) gives the lower bound
/// K1, `large` (maximum-amplitude step) the upper bound K2.
pub fn tune_bounds(
    cfg: &EsConfig,
    small: &dyn CostFunction,
    large: &dyn CostFunction,
) -> Result<TunedBounds, TuningError> {
    let k1 = run_campaign(Phase::K1, cfg, small)?;
    let k2 = run_campaign(Phase::K2, cfg, large)?;
    let (schedules, inverted) = schedules_from_bounds(&k1.best, &k2.best, cfg.delta1, cfg.delta2);
    Ok(TunedBounds {
        k1,
        k2,
        inverted,
        schedules,
    })
}

/// Step episode whose squared error is averaged to form the cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    /// Cost window (s).
    pub t0: f64,
    pub tf: f64,
    /// Channel that is stepped and whose gains are being tuned.
    pub channel: Channel,
    /// Step amplitude (rad or m). The error is normalized by it.
    pub amplitude: f64,
    /// Initial offset of the stepped channel's state (rad or m).
    #[serde(default)]
    pub initial_disturbance: f64,
    /// Hover altitude of the episode (m).
    #[serde(default = "default_altitude")]
    pub altitude: f64,
    /// Cost charged for a diverged episode instead of failing the search.
    #[serde(default = "default_penalty")]
    pub divergence_penalty: Option<f64>,
}

fn default_altitude() -> f64 {
    10.0
}

fn default_penalty() -> Option<f64> {
    Some(1e6)
}

impl CostSpec {
    pub fn step(channel: Channel, amplitude: f64, tf: f64) -> Self {
        Self {
            t0: 0.0,
            tf,
            channel,
            amplitude,
            initial_disturbance: 0.0,
            altitude: default_altitude(),
            divergence_penalty: default_penalty(),
        }
    }

    pub fn validate(&self) -> Result<(), TuningError> {
        if !(0.0 <= self.t0 && self.t0 < self.tf && self.tf.is_finite()) {
            return Err(TuningError::InvalidConfig("cost window needs 0 <= t0 < tf"));
        }
        if !(self.amplitude != 0.0 && self.amplitude.is_finite()) {
            return Err(TuningError::InvalidConfig("step amplitude must be nonzero"));
        }
        Ok(())
    }

    pub fn trajectory(&self) -> TrajectorySpec {
        TrajectorySpec::Step {
            channel: self.channel,
            amplitude: self.amplitude,
            t_start: 0.0,
            base: Vec3::new(0.0, 0.0, self.altitude),
        }
    }

    fn initial_state(&self) -> StateVector {
        let mut s = StateVector::at_rest(0.0, 0.0, self.altitude);
        let d = self.initial_disturbance;
        match self.channel {
            Channel::X => s.x += d,
            Channel::Y => s.y += d,
            Channel::Z => s.z += d,
            Channel::Phi => s.phi += d,
            Channel::Theta => s.theta += d,
            Channel::Psi => s.psi += d,
        }
        s
    }
}

/// `(1/(tf−t0))·∫_{t0}^{tf} e² dt` by the trapezoid rule.
pub fn mean_square(series: &ErrorSeries, t0: f64, tf: f64) -> Result<f64, TuningError> {
    let upto = |t: f64| -> Result<f64, TuningError> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        metrics::integrate(series, t, |_, e| e * e)
            .map_err(|_| TuningError::InvalidConfig("cost window exceeds episode"))
    };
    if !(t0 < tf) {
        return Err(TuningError::InvalidConfig("cost window needs t0 < tf"));
    }
    Ok((upto(tf)? - upto(t0)?) / (tf - t0))
}

/// Simulates the step episode of `spec` with `k` as fixed gains on the
/// stepped channel and returns the normalized mean squared error.
pub fn evaluate_cost(
    k: &GainVector,
    spec: &CostSpec,
    base: &SimConfig,
) -> Result<f64, TuningError> {
    spec.validate()?;
    let mut cfg = *base;
    cfg.cascade
        .set_gains(spec.channel, k.projected().as_fixed());
    cfg.t_total = spec.tf;
    cfg.initial = spec.initial_state();
    let log = match run_closed_loop(&cfg, &spec.trajectory()) {
        Ok(log) => log,
        Err(e) if e.is_divergence() => {
            return match spec.divergence_penalty {
                Some(p) => Ok(p),
                None => Err(TuningError::EpisodeDiverged(e)),
            };
        }
        Err(e) => return Err(TuningError::Simulation(e)),
    };
    let series = log.error_series(spec.channel).scaled(1.0 / spec.amplitude);
    let j = mean_square(&series, spec.t0, spec.tf)?;
    finite(j)
}

/// [`evaluate_cost`] bound to an episode, usable as a [`CostFunction`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEpisode {
    pub spec: CostSpec,
    pub base: SimConfig,
}

impl CostFunction for StepEpisode {
    fn cost(&self, k: &GainVector) -> Result<f64, TuningError> {
        evaluate_cost(k, &self.spec, &self.base)
    }
}
