use nalgebra::DVector;
use rand::Rng as _;

use super::{
    behavior_sampler, project_ball, reference_batch_detail, updates, Algorithm, EpochStart, LinearModel, NoProbe,
    Probe, Recorder, RunConfig, RunLog,
};
use crate::error::Result;
use crate::objective::ObjectiveContext;
use crate::rng;

/// Reference pair of an epoch and its batch-mean updates `(G̃, H̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub theta: DVector<f64>,
    pub omega: DVector<f64>,
    pub g: DVector<f64>,
    pub h: DVector<f64>,
}

/// Variance-reduced direction `a_cur − a_ref + a_mean`.
///
/// The grouping makes the correction cancel exactly when the current and
/// reference evaluations coincide.
pub fn vr_direction(current: &DVector<f64>, at_reference: &DVector<f64>, mean: &DVector<f64>) -> DVector<f64> {
    (current - at_reference) + mean
}

/// VR-Greedy-GQ: `cfg.epochs` epochs of `cfg.batch_size` inner steps, each
/// epoch consuming a fresh segment of one continuous behavior trajectory.
pub fn run_vr_greedy_gq(ctx: &ObjectiveContext, cfg: &RunConfig) -> Result<RunLog> {
    run_vr_greedy_gq_with(ctx, cfg, &mut NoProbe)
}

pub fn run_vr_greedy_gq_with(ctx: &ObjectiveContext, cfg: &RunConfig, probe: &mut dyn Probe) -> Result<RunLog> {
    let dim = ctx.dim();
    cfg.validate(dim)?;
    let model = LinearModel::of(ctx);
    let m = cfg.batch_size;
    let (mut theta, mut omega) = cfg.initial_point(dim);
    let mut sampler = behavior_sampler(ctx, cfg.seed)?;
    let mut index_rng = rng::seeded(cfg.seed, rng::stream::BATCH_INDEX);
    let mut rec = Recorder::new(
        ctx,
        cfg,
        RunLog::new(Algorithm::VrGreedyGq, cfg.epochs, m, &theta, &omega),
    );

    let mut step = 0;
    for epoch in 1..=cfg.epochs {
        let batch = sampler.take_batch(m);
        rec.samples += m as u64;
        let (g_ref, h_ref, at_ref) = reference_batch_detail(&batch, &theta, &omega, &model)?;
        rec.g_evals += m as u64;
        let reference = Reference {
            theta: theta.clone(),
            omega: omega.clone(),
            g: g_ref,
            h: h_ref,
        };

        for t in 0..m {
            rec.keep(&theta);
            let k = index_rng.gen_range(0..m);
            let (g_cur, h_cur) = updates(&batch[k], &theta, &omega, &model);
            // the reference-point evaluation is cached but still counted
            rec.g_evals += 2;
            let g = vr_direction(&g_cur, &at_ref[k].0, &reference.g);
            let h = vr_direction(&h_cur, &at_ref[k].1, &reference.h);
            if t == 0 {
                rec.log.epoch_starts.push(EpochStart {
                    g_ref: reference.g.clone(),
                    h_ref: reference.h.clone(),
                    g_first: g.clone(),
                    h_first: h.clone(),
                });
            }
            theta = project_ball(&(&theta - g * cfg.eta_theta), cfg.radius);
            omega = project_ball(&(&omega - h * cfg.eta_omega), cfg.radius);
            step += 1;
            rec.record(probe, step, epoch, t, &theta, &omega, Some(&reference))?;
        }
    }
    Ok(rec.finish(theta, omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::test_support::*;
    use crate::algorithms::{g_update, h_update, reference_batch_updates, select_output};
    use crate::error::Error;
    use crate::mdp::{sample_trajectory, Start};

    fn cfg(epochs: usize, batch_size: usize) -> RunConfig {
        RunConfig {
            epochs,
            batch_size,
            keep_iterates: true,
            ..RunConfig::default()
        }
    }

    #[test]
    fn epoch_start_cancellation() {
        let ctx = garnet_context();
        let log = run_vr_greedy_gq(&ctx, &cfg(5, 50)).unwrap();
        assert_eq!(log.epoch_starts.len(), 5);
        for e in &log.epoch_starts {
            assert!((&e.g_first - &e.g_ref).amax() < 1e-13);
            assert!((&e.h_first - &e.h_ref).amax() < 1e-13);
        }
    }

    #[test]
    fn counting_convention() {
        let ctx = garnet_context();
        let log = run_vr_greedy_gq(&ctx, &cfg(2, 10)).unwrap();
        assert_eq!(log.g_evals(), 60);
        assert_eq!(log.samples_consumed(), 20);
        assert_eq!(log.records.len(), 20);
        assert_eq!(log.iterates.len(), 20);
        assert!(log.records.windows(2).all(|w| w[0].g_evals < w[1].g_evals));
    }

    #[test]
    fn consumes_the_behavior_trajectory_in_order() {
        // batches are consecutive segments of the same stream a plain
        // trajectory with the same seed produces
        let ctx = garnet_context();
        let theta = random_vector(3, 4, 1.0);
        let omega = random_vector(4, 4, 1.0);
        let config = RunConfig {
            eta_theta: 0.0,
            eta_omega: 0.0,
            theta0: Some(theta.clone()),
            omega0: Some(omega.clone()),
            ..cfg(3, 40)
        };
        let log = run_vr_greedy_gq(&ctx, &config).unwrap();
        let traj = sample_trajectory(&ctx.mdp, &ctx.behavior, 120, config.seed, Start::Stationary).unwrap();
        let model = LinearModel::of(&ctx);
        for (epoch, start) in log.epoch_starts.iter().enumerate() {
            let seg = &traj[epoch * 40..(epoch + 1) * 40];
            let (g, h) = reference_batch_updates(seg, &theta, &omega, &model).unwrap();
            assert!((&g - &start.g_ref).amax() < 1e-15);
            assert!((&h - &start.h_ref).amax() < 1e-15);
        }
    }

    #[test]
    fn conditional_mean_identity() {
        let ctx = garnet_context();
        let model = LinearModel::of(&ctx);
        let batch = sample_trajectory(&ctx.mdp, &ctx.behavior, 30, 5, Start::Stationary).unwrap();
        let theta_ref = random_vector(10, 4, 3.0);
        let omega_ref = random_vector(11, 4, 3.0);
        let (g_ref, h_ref) = reference_batch_updates(&batch, &theta_ref, &omega_ref, &model).unwrap();
        for i in 0..10 {
            let theta = random_vector(100 + i, 4, 3.0);
            let omega = random_vector(200 + i, 4, 3.0);
            let mut g_mean = DVector::zeros(4);
            let mut h_mean = DVector::zeros(4);
            for x in &batch {
                g_mean += vr_direction(
                    &g_update(x, &theta, &omega, &model),
                    &g_update(x, &theta_ref, &omega_ref, &model),
                    &g_ref,
                );
                h_mean += vr_direction(
                    &h_update(x, &theta, &omega, &model),
                    &h_update(x, &theta_ref, &omega_ref, &model),
                    &h_ref,
                );
            }
            let (g_direct, h_direct) = reference_batch_updates(&batch, &theta, &omega, &model).unwrap();
            assert!((g_mean / 30.0 - g_direct).amax() < 1e-12);
            assert!((h_mean / 30.0 - h_direct).amax() < 1e-12);
        }
    }

    #[test]
    fn projection_invariant_with_aggressive_rates() {
        let ctx = garnet_context();
        let config = RunConfig {
            eta_theta: 2.0,
            eta_omega: 2.0,
            radius: 0.5,
            check_projection: true,
            ..cfg(4, 100)
        };
        let log = run_vr_greedy_gq(&ctx, &config).unwrap();
        assert!(log.records.iter().all(|r| r.theta_norm <= 0.5 && r.omega_norm <= 0.5));
    }

    #[test]
    fn deterministic_and_selectable() {
        let ctx = garnet_context();
        let a = run_vr_greedy_gq(&ctx, &cfg(2, 25)).unwrap();
        let b = run_vr_greedy_gq(&ctx, &cfg(2, 25)).unwrap();
        assert_eq!(a, b);
        assert_eq!(select_output(&a, 4).unwrap(), select_output(&a, 4).unwrap());
    }

    #[test]
    fn single_candidate_selection() {
        let ctx = garnet_context();
        let theta0 = random_vector(5, 4, 1.0);
        let log = run_vr_greedy_gq(
            &ctx,
            &RunConfig {
                theta0: Some(theta0.clone()),
                ..cfg(1, 1)
            },
        )
        .unwrap();
        for seed in 0..5 {
            assert_eq!(select_output(&log, seed).unwrap(), theta0);
        }
    }

    #[test]
    fn selection_is_uniform() {
        // 20 tagged iterates; chi-square with 19 degrees of freedom
        let mut log = run_vr_greedy_gq(&garnet_context(), &cfg(4, 5)).unwrap();
        log.iterates = (0..20).map(|i| DVector::from_element(1, i as f64)).collect();
        let n = 100_000;
        let mut counts = [0usize; 20];
        for seed in 0..n {
            counts[select_output(&log, seed).unwrap()[0] as usize] += 1;
        }
        let expected = n as f64 / 20.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 36.19, "chi-square {chi2}");
    }

    #[test]
    fn missing_iterates_is_a_state_error() {
        let ctx = garnet_context();
        let log = run_vr_greedy_gq(
            &ctx,
            &RunConfig {
                keep_iterates: false,
                ..cfg(1, 5)
            },
        )
        .unwrap();
        assert!(matches!(select_output(&log, 0), Err(Error::State(_))));
    }
}
