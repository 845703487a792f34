use super::{behavior_sampler, project_ball, updates, LinearModel, NoProbe, Probe, Recorder, RunConfig, RunLog};
use crate::algorithms::Algorithm;
use crate::error::Result;
use crate::objective::ObjectiveContext;

/// Projected Greedy-GQ along one behavior trajectory of `cfg.steps`
/// transitions.
pub fn run_greedy_gq(ctx: &ObjectiveContext, cfg: &RunConfig) -> Result<RunLog> {
    run_greedy_gq_with(ctx, cfg, &mut NoProbe)
}

pub fn run_greedy_gq_with(ctx: &ObjectiveContext, cfg: &RunConfig, probe: &mut dyn Probe) -> Result<RunLog> {
    let dim = ctx.dim();
    cfg.validate(dim)?;
    let model = LinearModel::of(ctx);
    let (mut theta, mut omega) = cfg.initial_point(dim);
    let mut sampler = behavior_sampler(ctx, cfg.seed)?;
    let mut rec = Recorder::new(ctx, cfg, RunLog::new(Algorithm::GreedyGq, 1, cfg.steps, &theta, &omega));

    for step in 1..=cfg.steps {
        rec.keep(&theta);
        let x = sampler.next_transition();
        let (g, h) = updates(&x, &theta, &omega, &model);
        rec.g_evals += 1;
        rec.samples += 1;
        theta = project_ball(&(&theta - g * cfg.eta_theta), cfg.radius);
        omega = project_ball(&(&omega - h * cfg.eta_omega), cfg.radius);
        rec.record(probe, step, 0, step - 1, &theta, &omega, None)?;
    }
    Ok(rec.finish(theta, omega))
}
