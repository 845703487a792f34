//! Monte Carlo probes attached to running algorithms.

use nalgebra::DVector;
use rand::distributions::Distribution;
use rand_distr::WeightedIndex;

use crate::algorithms::{g_update, vr_direction, LinearModel, Probe, ProbeValues, Reference, StepView};
use crate::error::{Error, Result};
use crate::features::{improve_policy, FeatureMap, SoftmaxOperator};
use crate::mdp::{stationary_distribution, MarkovSampler, Mdp, Transition};
use crate::objective::ObjectiveContext;
use crate::rng::{self, Rng};

/// Draws `(s, a) ~ μ_{s,a}`, `s' ~ P(·|s,a)` independently.
pub struct StationarySampler<'a> {
    mdp: &'a Mdp,
    pairs: WeightedIndex<f64>,
    successors: Vec<WeightedIndex<f64>>,
}

impl<'a> StationarySampler<'a> {
    pub fn new(ctx: &'a ObjectiveContext) -> Result<Self> {
        let to_err = |e: rand_distr::WeightedError| Error::Parameter(format!("invalid sampling weights: {e}"));
        let pairs = WeightedIndex::new(ctx.mu.state_action_dist.iter().copied()).map_err(to_err)?;
        let n_a = ctx.mdp.n_actions();
        let successors = (0..ctx.mdp.n_states() * n_a)
            .map(|k| WeightedIndex::new(ctx.mdp.kernel_row(k / n_a, k % n_a).iter().copied()).map_err(to_err))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mdp: &ctx.mdp,
            pairs,
            successors,
        })
    }

    pub fn draw(&self, rng: &mut Rng) -> Transition {
        let k = self.pairs.sample(rng);
        let n_a = self.mdp.n_actions();
        let (s, a) = (k / n_a, k % n_a);
        let s_next = self.successors[k].sample(rng);
        Transition {
            s,
            a,
            r: self.mdp.reward(s, a, s_next),
            s_next,
        }
    }
}

/// Mean of `‖G_x(θ, ω) − ∇J(θ)‖²` over `n_mc` stationary draws. With a
/// reference the variance-reduced direction replaces `G_x`.
pub fn variance_probe(
    ctx: &ObjectiveContext,
    theta: &DVector<f64>,
    omega: &DVector<f64>,
    reference: Option<&Reference>,
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    let sampler = StationarySampler::new(ctx)?;
    variance_probe_with(
        ctx,
        &sampler,
        theta,
        omega,
        reference,
        n_mc,
        &mut rng::seeded(seed, rng::stream::VARIANCE_PROBE),
    )
}

pub(crate) fn variance_probe_with(
    ctx: &ObjectiveContext,
    sampler: &StationarySampler<'_>,
    theta: &DVector<f64>,
    omega: &DVector<f64>,
    reference: Option<&Reference>,
    n_mc: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if n_mc == 0 {
        return Err(Error::Parameter("variance probe needs at least one sample".into()));
    }
    let model = LinearModel::of(ctx);
    let grad = ctx.evaluate(theta).grad;
    let mut total = 0.0;
    for _ in 0..n_mc {
        let x = sampler.draw(rng);
        let g = g_update(&x, theta, omega, &model);
        let g = match reference {
            Some(r) => vr_direction(&g, &g_update(&x, &r.theta, &r.omega, &model), &r.g),
            None => g,
        };
        total += (g - &grad).norm_squared();
    }
    Ok(total / n_mc as f64)
}

/// Average reward along one `horizon`-step trajectory of `π_θ`, started from
/// the stationary law of the `π_θ` chain (the MDP's initial distribution if
/// that chain does not converge).
pub fn reward_probe(
    mdp: &Mdp,
    features: &FeatureMap,
    op: &SoftmaxOperator,
    theta: &DVector<f64>,
    horizon: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = rng::seeded(seed, rng::stream::REWARD_PROBE);
    reward_probe_with(mdp, features, op, theta, horizon, &mut rng)
}

pub(crate) fn reward_probe_with(
    mdp: &Mdp,
    features: &FeatureMap,
    op: &SoftmaxOperator,
    theta: &DVector<f64>,
    horizon: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::Parameter("reward probe horizon must be at least 1".into()));
    }
    let policy = improve_policy(theta, features, op);
    let start = stationary_distribution(mdp, &policy)
        .map(|mu| mu.state_dist)
        .unwrap_or_else(|_| mdp.initial().to_vec());
    let fork = rng::seeded(rand::Rng::gen(rng), rng::stream::REWARD_PROBE);
    let mut sampler = MarkovSampler::from_distribution(mdp, &policy, &start, fork)?;
    let total: f64 = (0..horizon).map(|_| sampler.next_transition().r).sum();
    Ok(total / horizon as f64)
}

/// The probe used by experiment runs: variance and reward measurements at
/// fixed cadences, each on its own random stream.
pub struct HarnessProbe<'a> {
    ctx: &'a ObjectiveContext,
    sampler: StationarySampler<'a>,
    variance_every: usize,
    n_mc: usize,
    reward_every: usize,
    horizon: usize,
    variance_rng: Rng,
    reward_rng: Rng,
    error: Option<Error>,
}

impl<'a> HarnessProbe<'a> {
    pub fn new(
        ctx: &'a ObjectiveContext,
        variance_every: usize,
        n_mc: usize,
        reward_every: usize,
        horizon: usize,
        seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            ctx,
            sampler: StationarySampler::new(ctx)?,
            variance_every,
            n_mc,
            reward_every,
            horizon,
            variance_rng: rng::seeded(seed, rng::stream::VARIANCE_PROBE),
            reward_rng: rng::seeded(seed, rng::stream::REWARD_PROBE),
            error: None,
        })
    }

    /// First error raised while probing, if any.
    pub fn take_error(&mut self) -> Option<Error> {
        self.error.take()
    }
}

impl Probe for HarnessProbe<'_> {
    fn observe(&mut self, view: &StepView<'_>) -> ProbeValues {
        let mut out = ProbeValues::default();
        if self.error.is_some() {
            return out;
        }
        if self.variance_every > 0 && view.step.is_multiple_of(self.variance_every) {
            match variance_probe_with(
                self.ctx,
                &self.sampler,
                view.theta,
                view.omega,
                view.reference,
                self.n_mc,
                &mut self.variance_rng,
            ) {
                Ok(v) => out.variance = Some(v),
                Err(e) => self.error = Some(e),
            }
        }
        if self.reward_every > 0 && view.step.is_multiple_of(self.reward_every) {
            match reward_probe_with(
                &self.ctx.mdp,
                &self.ctx.features,
                &self.ctx.op,
                view.theta,
                self.horizon,
                &mut self.reward_rng,
            ) {
                Ok(v) => out.reward = Some(v),
                Err(e) => self.error = Some(e),
            }
        }
        out
    }
}
