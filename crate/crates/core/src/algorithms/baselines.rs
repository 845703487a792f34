//! Comparison baselines: one-step off-policy actor-critic and a
//! REINFORCE-style policy gradient.

use nalgebra::DVector;

use super::{behavior_sampler, project_ball, Algorithm, NoProbe, Probe, Recorder, RunConfig, RunLog};
use crate::error::Result;
use crate::features::{eval_state, improve_policy, FeatureMap, SoftmaxOperator};
use crate::mdp::MarkovSampler;
use crate::objective::ObjectiveContext;
use crate::rng;

/// `∇_θ log π_θ(a|s) = σ (φ_{s,a} − Σ_b π_θ(b|s) φ_{s,b})`.
pub(crate) fn score(
    theta: &DVector<f64>,
    s: usize,
    a: usize,
    features: &FeatureMap,
    op: &SoftmaxOperator,
) -> (f64, DVector<f64>) {
    let st = eval_state(theta, s, features, op);
    let mut mean = DVector::zeros(features.dim());
    for (b, &p) in st.pi.iter().enumerate() {
        mean += features.row_vector(s, b) * p;
    }
    (st.pi[a], (features.row_vector(s, a) - mean) * op.temperature())
}

/// State features of the critic, `ψ_s = mean_a φ_{s,a}`.
fn critic_features(features: &FeatureMap) -> Vec<DVector<f64>> {
    (0..features.n_states())
        .map(|s| {
            let mut psi = DVector::zeros(features.dim());
            for a in 0..features.n_actions() {
                psi += features.row_vector(s, a);
            }
            psi / features.n_actions() as f64
        })
        .collect()
}

/// One-step actor-critic on the behavior trajectory. The critic
/// `v(s) = ψ_sᵀw` learns by TD(0) with rate `η_ω`; the softmax actor follows
/// `ρ_t δ_t ∇log π_θ(a_t|s_t)` with `ρ_t = π_θ(a_t|s_t) / π_b(a_t|s_t)` and
/// rate `η_θ`. The critic weights are logged as `ω`.
pub fn run_actor_critic(ctx: &ObjectiveContext, cfg: &RunConfig) -> Result<RunLog> {
    run_actor_critic_with(ctx, cfg, &mut NoProbe)
}

pub fn run_actor_critic_with(ctx: &ObjectiveContext, cfg: &RunConfig, probe: &mut dyn Probe) -> Result<RunLog> {
    let dim = ctx.dim();
    cfg.validate(dim)?;
    let gamma = ctx.gamma();
    let psi = critic_features(&ctx.features);
    let (mut theta, mut w) = cfg.initial_point(dim);
    let mut sampler = behavior_sampler(ctx, cfg.seed)?;
    let mut rec = Recorder::new(ctx, cfg, RunLog::new(Algorithm::ActorCritic, 1, cfg.steps, &theta, &w));

    for step in 1..=cfg.steps {
        rec.keep(&theta);
        let x = sampler.next_transition();
        let delta = x.r + gamma * psi[x.s_next].dot(&w) - psi[x.s].dot(&w);
        let (pi_a, grad_log) = score(&theta, x.s, x.a, &ctx.features, &ctx.op);
        let ratio = pi_a / ctx.behavior.prob(x.s, x.a);
        rec.g_evals += 1;
        rec.samples += 1;
        theta = project_ball(&(&theta + grad_log * (cfg.eta_theta * ratio * delta)), cfg.radius);
        w = project_ball(&(&w + &psi[x.s] * (cfg.eta_omega * delta)), cfg.radius);
        rec.record(probe, step, 0, step - 1, &theta, &w, None)?;
    }
    Ok(rec.finish(theta, w))
}

/// Episodic REINFORCE: each of `cfg.steps` updates samples `pg_episodes`
/// trajectories of `pg_horizon` transitions under `π_θ`, each restarted from
/// the MDP's initial distribution, and ascends
/// `mean_episodes Σ_t γ^t G_t ∇log π_θ(a_t|s_t)` with rate `η_θ`.
pub fn run_off_policy_pg(ctx: &ObjectiveContext, cfg: &RunConfig) -> Result<RunLog> {
    run_off_policy_pg_with(ctx, cfg, &mut NoProbe)
}

pub fn run_off_policy_pg_with(ctx: &ObjectiveContext, cfg: &RunConfig, probe: &mut dyn Probe) -> Result<RunLog> {
    let dim = ctx.dim();
    cfg.validate(dim)?;
    let gamma = ctx.gamma();
    let (mut theta, omega) = cfg.initial_point(dim);
    let mut rng = rng::seeded(cfg.seed, rng::stream::POLICY_GRADIENT);
    let mut rec = Recorder::new(
        ctx,
        cfg,
        RunLog::new(Algorithm::OffPolicyPg, 1, cfg.steps, &theta, &omega),
    );
    let mut returns = vec![0.0; cfg.pg_horizon];

    for step in 1..=cfg.steps {
        rec.keep(&theta);
        let policy = improve_policy(&theta, &ctx.features, &ctx.op);
        let mut grad = DVector::zeros(dim);
        for _ in 0..cfg.pg_episodes {
            let mut sampler = MarkovSampler::from_distribution(&ctx.mdp, &policy, ctx.mdp.initial(), rng)?;
            let episode = sampler.take_batch(cfg.pg_horizon);
            rng = sampler.into_rng();
            let mut tail = 0.0;
            for (t, x) in episode.iter().enumerate().rev() {
                tail = x.r + gamma * tail;
                returns[t] = tail;
            }
            let mut discount = 1.0;
            for (t, x) in episode.iter().enumerate() {
                if returns[t] != 0.0 {
                    let (_, grad_log) = score(&theta, x.s, x.a, &ctx.features, &ctx.op);
                    grad += grad_log * (discount * returns[t]);
                }
                discount *= gamma;
            }
        }
        rec.g_evals += 1;
        rec.samples += (cfg.pg_episodes * cfg.pg_horizon) as u64;
        theta = project_ball(&(&theta + grad * (cfg.eta_theta / cfg.pg_episodes as f64)), cfg.radius);
        rec.record(probe, step, 0, step - 1, &theta, &omega, None)?;
    }
    Ok(rec.finish(theta, omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::test_support::*;
    use crate::algorithms::{ProbeValues, StepView};
    use crate::objective::build_context;

    struct Ratios<'a> {
        ctx: &'a ObjectiveContext,
    }

    impl Probe for Ratios<'_> {
        fn observe(&mut self, view: &StepView<'_>) -> ProbeValues {
            // π_θ(a|s) / π_b(a|s) at every (s,a) for the current θ
            let pi = improve_policy(view.theta, &self.ctx.features, &self.ctx.op);
            let mut worst: f64 = 0.0;
            for s in 0..5 {
                for a in 0..3 {
                    worst = worst.max((pi.prob(s, a) / self.ctx.behavior.prob(s, a) - 1.0).abs());
                }
            }
            ProbeValues {
                variance: Some(worst),
                reward: None,
            }
        }
    }

    #[test]
    fn frozen_actor() {
        let ctx = garnet_context();
        let theta0 = random_vector(1, 4, 1.0);
        let cfg = RunConfig {
            eta_theta: 0.0,
            steps: 300,
            theta0: Some(theta0.clone()),
            ..RunConfig::default()
        };
        let log = run_actor_critic(&ctx, &cfg).unwrap();
        assert_eq!(log.final_theta, theta0);
        assert_ne!(log.final_omega, DVector::zeros(4));
    }

    #[test]
    fn unit_ratios_at_matching_policies() {
        let ctx = garnet_context();
        let cfg = RunConfig {
            eta_theta: 0.0,
            steps: 50,
            ..RunConfig::default()
        };
        let log = run_actor_critic_with(&ctx, &cfg, &mut Ratios { ctx: &ctx }).unwrap();
        assert!(log.records.iter().all(|r| r.var_estimate.unwrap() < 1e-15));
    }

    #[test]
    fn actor_critic_smoke() {
        let ctx = garnet_context();
        let log = run_actor_critic(
            &ctx,
            &RunConfig {
                steps: 10_000,
                ..RunConfig::default()
            },
        )
        .unwrap();
        assert_eq!(log.records.len(), 10_000);
        assert!(log
            .records
            .iter()
            .all(|r| r.grad_norm_sq.is_finite() && r.mspbe.is_finite()));
        assert!(log.final_theta.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn score_matches_finite_difference() {
        let ctx = garnet_context();
        let theta = random_vector(7, 4, 2.0);
        let log_pi = |th: &DVector<f64>| improve_policy(th, &ctx.features, &ctx.op).prob(2, 1).ln();
        let (_, grad) = score(&theta, 2, 1, &ctx.features, &ctx.op);
        for i in 0..4 {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[i] += 1e-6;
            down[i] -= 1e-6;
            assert!(((log_pi(&up) - log_pi(&down)) / 2e-6 - grad[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_rewards_leave_policy_gradient_still() {
        let ctx = garnet_context();
        let mdp = ctx.mdp.with_scaled_rewards(0.0);
        let zero = build_context(&mdp, &ctx.features, ctx.op, &ctx.behavior).unwrap();
        let theta0 = random_vector(2, 4, 1.0);
        let cfg = RunConfig {
            steps: 5,
            eta_theta: 0.5,
            theta0: Some(theta0.clone()),
            ..RunConfig::default()
        };
        let log = run_off_policy_pg(&zero, &cfg).unwrap();
        assert_eq!(log.final_theta, theta0);
    }

    #[test]
    fn policy_gradient_sample_accounting() {
        let ctx = garnet_context();
        let log = run_off_policy_pg(
            &ctx,
            &RunConfig {
                steps: 1,
                ..RunConfig::default()
            },
        )
        .unwrap();
        assert_eq!(log.samples_consumed(), 1800);
        let log = run_off_policy_pg(
            &ctx,
            &RunConfig {
                steps: 100,
                ..RunConfig::default()
            },
        )
        .unwrap();
        assert_eq!(log.records.len(), 100);
        assert_eq!(log.samples_consumed(), 180_000);
        assert!(log.final_theta.iter().all(|x| x.is_finite()));
        assert_ne!(log.final_theta, DVector::zeros(4));
    }
}
