//! Two time-scale control algorithms and their building blocks.
//!
//! Every run follows one continuous behavior trajectory and logs, after each
//! parameter update, the exact squared gradient norm and MSPBE of the current
//! `θ` taken from the [`ObjectiveContext`] oracle.
//!
//! Gradient evaluations are counted as follows: Greedy-GQ spends one
//! `G`-evaluation per step; VR-Greedy-GQ spends `M` per epoch for the
//! reference batch plus two per inner step (current and reference point).
//! `H`-evaluations are not counted.

mod baselines;
mod greedy_gq;
mod vr_greedy_gq;

pub use baselines::{run_actor_critic, run_actor_critic_with, run_off_policy_pg, run_off_policy_pg_with};
pub use greedy_gq::{run_greedy_gq, run_greedy_gq_with};
pub use vr_greedy_gq::{run_vr_greedy_gq, run_vr_greedy_gq_with, vr_direction, Reference};

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{eval_state, FeatureMap, SoftmaxOperator};
use crate::mdp::{MarkovSampler, Transition};
use crate::objective::ObjectiveContext;
use crate::rng;

/// Human-readable statement of the gradient-evaluation counting convention.
pub const COUNTING_CONVENTION: &str = "greedy_gq: 1 G-evaluation per step; \
vr_greedy_gq: M per epoch (reference batch) + 2 per inner step; \
actor_critic: 1 per step; off_policy_pg: 1 per update (1800 samples); H-evaluations not counted";

/// Features, improvement operator and discount: everything the per-sample
/// updates need.
#[derive(Debug, Clone, Copy)]
pub struct LinearModel<'a> {
    pub features: &'a FeatureMap,
    pub op: &'a SoftmaxOperator,
    pub gamma: f64,
}

impl<'a> LinearModel<'a> {
    pub fn new(features: &'a FeatureMap, op: &'a SoftmaxOperator, gamma: f64) -> Self {
        Self { features, op, gamma }
    }

    pub fn of(ctx: &'a ObjectiveContext) -> Self {
        Self {
            features: &ctx.features,
            op: &ctx.op,
            gamma: ctx.gamma(),
        }
    }
}

/// `G_x(θ, ω) = −δ φ + γ (ωᵀφ) φ̂_{s'}(θ)`.
pub fn g_update(t: &Transition, theta: &DVector<f64>, omega: &DVector<f64>, model: &LinearModel) -> DVector<f64> {
    updates(t, theta, omega, model).0
}

/// `H_x(θ, ω) = (φᵀω − δ) φ`.
pub fn h_update(t: &Transition, theta: &DVector<f64>, omega: &DVector<f64>, model: &LinearModel) -> DVector<f64> {
    updates(t, theta, omega, model).1
}

/// `(G_x(θ, ω), H_x(θ, ω))` sharing one evaluation of the next state.
pub fn updates(
    t: &Transition,
    theta: &DVector<f64>,
    omega: &DVector<f64>,
    model: &LinearModel,
) -> (DVector<f64>, DVector<f64>) {
    let next = eval_state(theta, t.s_next, model.features, model.op);
    let phi = model.features.row(t.s, t.a);
    let q = model.features.value(theta, t.s, t.a);
    let delta = t.r + model.gamma * next.v_bar - q;
    let phi_omega: f64 = phi.iter().zip(omega.iter()).map(|(x, y)| x * y).sum();
    let phi = DVector::from_column_slice(phi);
    let g = &phi * -delta + next.phi_hat * (model.gamma * phi_omega);
    let h = phi * (phi_omega - delta);
    (g, h)
}

/// Batch means `(G̃, H̃)` at the reference point.
pub fn reference_batch_updates(
    batch: &[Transition],
    theta_ref: &DVector<f64>,
    omega_ref: &DVector<f64>,
    model: &LinearModel,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let (g, h, _) = reference_batch_detail(batch, theta_ref, omega_ref, model)?;
    Ok((g, h))
}

/// Per-sample `(G_k, H_k)` pairs.
pub(crate) type SampleUpdates = Vec<(DVector<f64>, DVector<f64>)>;

/// Batch means plus every per-sample `(G_k, H_k)` at the reference point.
pub(crate) fn reference_batch_detail(
    batch: &[Transition],
    theta_ref: &DVector<f64>,
    omega_ref: &DVector<f64>,
    model: &LinearModel,
) -> Result<(DVector<f64>, DVector<f64>, SampleUpdates)> {
    if batch.is_empty() {
        return Err(Error::Parameter("reference batch must not be empty".into()));
    }
    let dim = theta_ref.len();
    let per_sample: Vec<_> = batch.iter().map(|x| updates(x, theta_ref, omega_ref, model)).collect();
    let mut g = DVector::zeros(dim);
    let mut h = DVector::zeros(dim);
    for (gk, hk) in &per_sample {
        g += gk;
        h += hk;
    }
    let m = batch.len() as f64;
    Ok((g / m, h / m, per_sample))
}

/// Euclidean projection onto the ball of radius `radius`. The result never
/// has a computed norm above `radius`.
pub fn project_ball(v: &DVector<f64>, radius: f64) -> DVector<f64> {
    let norm = v.norm();
    if norm <= radius {
        return v.clone();
    }
    let mut out = v.map(|x| x / norm * radius);
    while out.norm() > radius {
        out *= 1.0 - f64::EPSILON;
    }
    out
}

/// Which algorithm produced a log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    GreedyGq,
    VrGreedyGq,
    ActorCritic,
    OffPolicyPg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::GreedyGq,
        Algorithm::VrGreedyGq,
        Algorithm::ActorCritic,
        Algorithm::OffPolicyPg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::GreedyGq => "greedy_gq",
            Algorithm::VrGreedyGq => "vr_greedy_gq",
            Algorithm::ActorCritic => "actor_critic",
            Algorithm::OffPolicyPg => "off_policy_pg",
        }
    }

    /// The baselines follow simple standard constructions; the exact
    /// variants are not pinned down by the method they are compared with.
    pub fn is_baseline(self) -> bool {
        matches!(self, Algorithm::ActorCritic | Algorithm::OffPolicyPg)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}'")))
    }
}

/// Hyperparameters of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub eta_theta: f64,
    pub eta_omega: f64,
    /// Batch size `M` (VR-Greedy-GQ).
    pub batch_size: usize,
    /// Number of epochs `T` (VR-Greedy-GQ).
    pub epochs: usize,
    /// Number of updates for the single-sample algorithms and the number of
    /// policy-gradient iterations for the episodic baseline.
    pub steps: usize,
    /// Projection radius `R`.
    pub radius: f64,
    pub seed: u64,
    pub theta0: Option<DVector<f64>>,
    pub omega0: Option<DVector<f64>>,
    /// Retain every pre-update iterate `θ_t^{(m)}` for output selection.
    pub keep_iterates: bool,
    /// Attach a `θ` snapshot to every `snapshot_cadence`-th record (0 = off).
    pub snapshot_cadence: usize,
    /// Fail the run if an iterate ever leaves the `R`-ball.
    pub check_projection: bool,
    /// Episodes per policy-gradient update.
    pub pg_episodes: usize,
    /// Episode length of the policy-gradient baseline.
    pub pg_horizon: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            eta_theta: 0.02,
            eta_omega: 0.01,
            batch_size: 3000,
            epochs: 1,
            steps: 10_000,
            radius: 100.0,
            seed: 0,
            theta0: None,
            omega0: None,
            keep_iterates: false,
            snapshot_cadence: 0,
            check_projection: cfg!(debug_assertions),
            pg_episodes: 30,
            pg_horizon: 60,
        }
    }
}

impl RunConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.eta_theta >= 0.0 && self.eta_omega >= 0.0)
            || !self.eta_theta.is_finite()
            || !self.eta_omega.is_finite()
        {
            return Err(Error::Parameter("learning rates must be finite and nonnegative".into()));
        }
        if !(self.radius > 0.0) {
            return Err(Error::Parameter(format!(
                "projection radius must be positive, got {}",
                self.radius
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Parameter("batch size and epoch count must be at least 1".into()));
        }
        if self.pg_episodes == 0 || self.pg_horizon == 0 {
            return Err(Error::Parameter(
                "policy-gradient episodes and horizon must be at least 1".into(),
            ));
        }
        for (name, v) in [("theta0", &self.theta0), ("omega0", &self.omega0)] {
            if let Some(v) = v {
                if v.len() != dim {
                    return Err(Error::Parameter(format!(
                        "{name} has dimension {}, expected {dim}",
                        v.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Projected initial iterates.
    pub(crate) fn initial_point(&self, dim: usize) -> (DVector<f64>, DVector<f64>) {
        let theta = self.theta0.clone().unwrap_or_else(|| DVector::zeros(dim));
        let omega = self.omega0.clone().unwrap_or_else(|| DVector::zeros(dim));
        (project_ball(&theta, self.radius), project_ball(&omega, self.radius))
    }
}

/// One logged update.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// 1-based count of updates so far.
    pub step: usize,
    /// 1-based epoch (0 for algorithms without epochs).
    pub epoch: usize,
    /// Inner index `t` of the update just taken.
    pub inner_t: usize,
    pub g_evals: u64,
    /// Environment transitions consumed so far.
    pub samples: u64,
    pub grad_norm_sq: f64,
    pub mspbe: f64,
    pub theta_norm: f64,
    pub omega_norm: f64,
    pub var_estimate: Option<f64>,
    pub reward_estimate: Option<f64>,
    pub theta_snapshot: Option<DVector<f64>>,
}

/// Epoch-start diagnostics of VR-Greedy-GQ: the first variance-reduced
/// directions next to the reference batch means.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStart {
    pub g_ref: DVector<f64>,
    pub h_ref: DVector<f64>,
    pub g_first: DVector<f64>,
    pub h_first: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub algorithm: Algorithm,
    pub records: Vec<RunRecord>,
    /// Pre-update iterates, epoch-major, when `keep_iterates` is set.
    pub iterates: Vec<DVector<f64>>,
    /// Shape of `iterates`: `epochs x batch_size`.
    pub epochs: usize,
    pub batch_size: usize,
    pub epoch_starts: Vec<EpochStart>,
    pub final_theta: DVector<f64>,
    pub final_omega: DVector<f64>,
}

impl RunLog {
    fn new(algorithm: Algorithm, epochs: usize, batch_size: usize, theta: &DVector<f64>, omega: &DVector<f64>) -> Self {
        Self {
            algorithm,
            records: Vec::new(),
            iterates: Vec::new(),
            epochs,
            batch_size,
            epoch_starts: Vec::new(),
            final_theta: theta.clone(),
            final_omega: omega.clone(),
        }
    }

    pub fn samples_consumed(&self) -> u64 {
        self.records.last().map_or(0, |r| r.samples)
    }

    pub fn g_evals(&self) -> u64 {
        self.records.last().map_or(0, |r| r.g_evals)
    }

    /// Running minimum of the squared gradient norm after the last update.
    pub fn min_grad_norm_sq(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.grad_norm_sq)
            .fold(f64::INFINITY, f64::min)
    }
}

/// What an observer sees after each update.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub step: usize,
    pub theta: &'a DVector<f64>,
    pub omega: &'a DVector<f64>,
    /// Current epoch's reference point (VR-Greedy-GQ only).
    pub reference: Option<&'a Reference>,
}

/// Optional measurements attached to a record.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProbeValues {
    pub variance: Option<f64>,
    pub reward: Option<f64>,
}

/// Hook invoked after every update; used by the harness for Monte Carlo
/// variance and reward probes.
pub trait Probe {
    fn observe(&mut self, view: &StepView<'_>) -> ProbeValues;
}

/// Probe that measures nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoProbe;

impl Probe for NoProbe {
    fn observe(&mut self, _view: &StepView<'_>) -> ProbeValues {
        ProbeValues::default()
    }
}

/// Shared bookkeeping of the run loops.
struct Recorder<'a> {
    ctx: &'a ObjectiveContext,
    cfg: &'a RunConfig,
    log: RunLog,
    g_evals: u64,
    samples: u64,
}

impl<'a> Recorder<'a> {
    fn new(ctx: &'a ObjectiveContext, cfg: &'a RunConfig, log: RunLog) -> Self {
        Self {
            ctx,
            cfg,
            log,
            g_evals: 0,
            samples: 0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        probe: &mut dyn Probe,
        step: usize,
        epoch: usize,
        inner_t: usize,
        theta: &DVector<f64>,
        omega: &DVector<f64>,
        reference: Option<&Reference>,
    ) -> Result<()> {
        let theta_norm = theta.norm();
        let omega_norm = omega.norm();
        if self.cfg.check_projection && (theta_norm > self.cfg.radius || omega_norm > self.cfg.radius) {
            return Err(Error::State(format!(
                "projection invariant violated at step {step}: |theta| = {theta_norm}, |omega| = {omega_norm}, R = {}",
                self.cfg.radius
            )));
        }
        let eval = self.ctx.evaluate(theta);
        let probes = probe.observe(&StepView {
            step,
            theta,
            omega,
            reference,
        });
        let snapshot =
            (self.cfg.snapshot_cadence > 0 && step.is_multiple_of(self.cfg.snapshot_cadence)).then(|| theta.clone());
        self.log.records.push(RunRecord {
            step,
            epoch,
            inner_t,
            g_evals: self.g_evals,
            samples: self.samples,
            grad_norm_sq: eval.grad_norm_sq(),
            mspbe: eval.mspbe,
            theta_norm,
            omega_norm,
            var_estimate: probes.variance,
            reward_estimate: probes.reward,
            theta_snapshot: snapshot,
        });
        Ok(())
    }

    fn keep(&mut self, theta: &DVector<f64>) {
        if self.cfg.keep_iterates {
            self.log.iterates.push(theta.clone());
        }
    }

    fn finish(mut self, theta: DVector<f64>, omega: DVector<f64>) -> RunLog {
        self.log.final_theta = theta;
        self.log.final_omega = omega;
        self.log
    }
}

/// Behavior-policy sampler started from a stationary draw.
pub(crate) fn behavior_sampler(ctx: &ObjectiveContext, seed: u64) -> Result<MarkovSampler<'_>> {
    MarkovSampler::from_distribution(
        &ctx.mdp,
        &ctx.behavior,
        &ctx.mu.state_dist,
        rng::seeded(seed, rng::stream::TRAJECTORY),
    )
}

/// Uniform draw of one retained iterate: epoch `ζ ∈ {1..T}` and inner index
/// `ξ ∈ {0..M−1}`, returning `θ_ξ^{(ζ)}`.
pub fn select_output(log: &RunLog, seed: u64) -> Result<DVector<f64>> {
    if log.iterates.is_empty() || log.iterates.len() != log.epochs * log.batch_size {
        return Err(Error::State(format!(
            "output selection needs all {} iterates; run with keep_iterates (found {})",
            log.epochs * log.batch_size,
            log.iterates.len()
        )));
    }
    let mut rng = rng::seeded(seed, rng::stream::OUTPUT_SELECTION);
    let epoch = rng.gen_range(1..=log.epochs);
    let inner = rng.gen_range(0..log.batch_size);
    Ok(log.iterates[(epoch - 1) * log.batch_size + inner].clone())
}
