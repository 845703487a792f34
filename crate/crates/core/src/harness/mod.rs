//! Experiment harness: configuration, seeded multi-run execution, probes,
//! aggregation and CSV output.
//!
//! Output tree of [`run_experiment`]:
//!
//! * `seed_XXX.csv`: every logged update of every algorithm for seed index `XXX`
//! * `aggregate.csv`: 5/50/95 percentiles of the running-minimum squared
//!   gradient norm across seeds, on the gradient-evaluation axis
//! * `summary.csv`: one line per `(algorithm, seed)`
//! * `metadata.json`: configuration, RNG and counting convention

mod config;
mod metrics;
mod probes;

pub use config::{
    AlgorithmConfig, EnvironmentConfig, ExperimentConfig, MetricsConfig, RunSection, TheoryConfig, BASE_SEED_ENV,
};
pub use metrics::{
    asymptotic_error, envelope_stats, nearest_rank, spearman, Curve, EnvelopeRow, MetricsRow, MetricsTable, HEADER,
};
pub use probes::{reward_probe, variance_probe, HarnessProbe, StationarySampler};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    run_actor_critic_with, run_greedy_gq_with, run_off_policy_pg_with, run_vr_greedy_gq_with, Algorithm, RunLog,
    COUNTING_CONVENTION,
};
use crate::error::{Error, Result};
use crate::mdp::{estimate_mixing, MixingEstimate};
use crate::objective::ObjectiveContext;
use crate::rng::RNG_NAME;
use crate::theory::{
    c_value, check_learning_rates, compute_constants, empirical_grad_bound, feasibility_threshold, schedule_rates,
    FeasibilityReport, TheoryConstants, TheoryInputs,
};

/// Largest batch size for which the validator materializes the `c_t` sequence.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algo: Algorithm,
    pub seed: u64,
    pub updates: usize,
    pub samples: u64,
    pub g_evals: u64,
    pub final_grad_norm_sq: f64,
    pub final_min_grad_norm_sq: f64,
    pub final_mspbe: f64,
    /// Mean squared gradient norm over the configured tail, when the run is
    /// long enough.
    pub asymptotic_error: Option<f64>,
    /// Mean variance probe over updates after the first `batch_size` updates.
    pub mean_var_after_first_epoch: Option<f64>,
    pub max_reward_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algo: Algorithm,
    pub g_evals: f64,
    pub p05: f64,
    pub p50: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub table: MetricsTable,
    pub aggregate: Vec<AggregateRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutput {
    pub fn summary_for(&self, algo: Algorithm) -> Vec<&SummaryRow> {
        self.summary.iter().filter(|s| s.algo == algo).collect()
    }
}

/// Run one algorithm with the harness probe attached.
pub fn run_with_probes(ctx: &ObjectiveContext, cfg: &ExperimentConfig, algo: Algorithm, seed: u64) -> Result<RunLog> {
    let run_cfg = cfg.algorithm.run_config(algo, seed, cfg.metrics.snapshot_cadence)?;
    let m = &cfg.metrics;
    let mut probe = HarnessProbe::new(
        ctx,
        m.variance_probe_every,
        m.variance_mc_samples,
        m.reward_probe_every,
        m.reward_horizon,
        seed,
    )?;
    let log = match algo {
        Algorithm::GreedyGq => run_greedy_gq_with(ctx, &run_cfg, &mut probe),
        Algorithm::VrGreedyGq => run_vr_greedy_gq_with(ctx, &run_cfg, &mut probe),
        Algorithm::ActorCritic => run_actor_critic_with(ctx, &run_cfg, &mut probe),
        Algorithm::OffPolicyPg => run_off_policy_pg_with(ctx, &run_cfg, &mut probe),
    }?;
    match probe.take_error() {
        Some(e) => Err(e),
        None => Ok(log),
    }
}

fn summarize(cfg: &ExperimentConfig, log: &RunLog, table: &MetricsTable, seed: u64) -> SummaryRow {
    let last = log.records.last();
    let grads: Vec<f64> = log.records.iter().map(|r| r.grad_norm_sq).collect();
    let warmup = cfg.algorithm.batch_size;
    let vars: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| r.iter > warmup)
        .filter_map(|r| r.var_estimate)
        .collect();
    SummaryRow {
        algo: log.algorithm,
        seed,
        updates: log.records.len(),
        samples: log.samples_consumed(),
        g_evals: log.g_evals(),
        final_grad_norm_sq: last.map_or(f64::NAN, |r| r.grad_norm_sq),
        final_min_grad_norm_sq: table.rows.last().map_or(f64::NAN, |r| r.min_grad_norm_sq),
        final_mspbe: last.map_or(f64::NAN, |r| r.mspbe),
        asymptotic_error: asymptotic_error(&grads, cfg.metrics.asymptotic_tail).ok(),
        mean_var_after_first_epoch: (!vars.is_empty()).then(|| vars.iter().sum::<f64>() / vars.len() as f64),
        max_reward_estimate: table.rows.iter().filter_map(|r| r.reward_estimate).reduce(f64::max),
    }
}

/// Run every configured algorithm for every seed, in parallel, and write
/// the output tree to `out_dir` when given.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let ctx = cfg.environment.build(cfg.algorithm.operator()?)?;
    let algos = cfg.algorithm.algorithms()?;
    let jobs: Vec<(Algorithm, usize)> = algos
        .iter()
        .flat_map(|&a| (0..cfg.run.n_seeds).map(move |i| (a, i)))
        .collect();

    let results = jobs
        .par_iter()
        .map(|&(algo, index)| {
            let seed = cfg.run.seed(index);
            let log = run_with_probes(&ctx, cfg, algo, seed)?;
            let table = MetricsTable::from_log(&log, seed);
            let summary = summarize(cfg, &log, &table, seed);
            Ok((algo, index, table, summary))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut aggregate = Vec::new();
    for &algo in &algos {
        let curves: Vec<Curve> = results
            .iter()
            .filter(|r| r.0 == algo)
            .map(|(_, _, t, _)| Curve {
                x: t.rows.iter().map(|r| r.g_evals as f64).collect(),
                y: t.rows.iter().map(|r| r.min_grad_norm_sq).collect(),
            })
            .collect();
        for e in envelope_stats(&curves)? {
            aggregate.push(AggregateRow {
                algo,
                g_evals: e.g_evals,
                p05: e.p05,
                p50: e.p50,
                p95: e.p95,
            });
        }
    }

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        for index in 0..cfg.run.n_seeds {
            let mut per_seed = MetricsTable::default();
            for (_, _, t, _) in results.iter().filter(|r| r.1 == index) {
                per_seed.rows.extend(t.rows.iter().cloned());
            }
            per_seed.save(&dir.join(format!("seed_{index:03}.csv")))?;
        }
        write_rows(&dir.join("aggregate.csv"), &aggregate)?;
        write_rows(
            &dir.join("summary.csv"),
            &results.iter().map(|r| r.3.clone()).collect::<Vec<_>>(),
        )?;
        fs::write(dir.join("metadata.json"), metadata(cfg, &ctx)?)?;
    }

    let mut table = MetricsTable::default();
    let mut summary = Vec::with_capacity(results.len());
    for (_, _, t, s) in results {
        table.extend(t);
        summary.push(s);
    }
    Ok(ExperimentOutput {
        table,
        aggregate,
        summary,
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Deterministic run metadata (no timestamps, no output paths).
pub fn metadata(cfg: &ExperimentConfig, ctx: &ObjectiveContext) -> Result<String> {
    let mut cfg = cfg.clone();
    cfg.run.output_dir = None;
    let algos = cfg.algorithm.algorithms()?;
    let labels: Vec<serde_json::Value> = algos
        .iter()
        .map(|a| {
            serde_json::json!({
                "name": a.name(),
                "role": if a.is_baseline() { "baseline, simplified standard variant" } else { "method" },
            })
        })
        .collect();
    let seeds: Vec<u64> = (0..cfg.run.n_seeds).map(|i| cfg.run.seed(i)).collect();
    let meta = serde_json::json!({
        "crate_version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "rng": RNG_NAME,
        "seed_rule": "trajectory seed = base_seed XOR seed index",
        "counting_convention": COUNTING_CONVENTION,
        "algorithms": labels,
        "seeds": seeds,
        "environment": {
            "label": cfg.environment.label(),
            "n_states": ctx.mdp.n_states(),
            "n_actions": ctx.mdp.n_actions(),
            "feature_dim": ctx.dim(),
            "gamma": ctx.gamma(),
            "lambda_c": ctx.lambda_c,
            "behavior_policy": "uniform",
        },
    });
    Ok(serde_json::to_string_pretty(&meta)? + "\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub algo: Algorithm,
    pub seed: u64,
    pub asymptotic_error: f64,
    pub final_min_grad_norm_sq: f64,
}

/// Re-run the experiment for each value of `param`, recording the
/// asymptotic error of every run. Writes `sweep.csv` and `metadata.json`
/// to `out_dir` when given.
pub fn sweep(cfg: &ExperimentConfig, param: &str, values: &[f64], out_dir: Option<&Path>) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut rows = Vec::new();
    for &value in values {
        let mut c = cfg.clone();
        c.set_param(param, value)?;
        let out = run_experiment(&c, None)?;
        for (algo, seed) in out.table.groups() {
            let grads: Vec<f64> = out.table.run(algo, seed).iter().map(|r| r.grad_norm_sq).collect();
            let min = out
                .table
                .run(algo, seed)
                .last()
                .map_or(f64::NAN, |r| r.min_grad_norm_sq);
            rows.push(SweepRow {
                param: param.to_string(),
                value,
                algo,
                seed,
                asymptotic_error: asymptotic_error(&grads, c.metrics.asymptotic_tail)?,
                final_min_grad_norm_sq: min,
            });
        }
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        write_rows(&dir.join("sweep.csv"), &rows)?;
        let ctx = cfg.environment.build(cfg.algorithm.operator()?)?;
        fs::write(dir.join("metadata.json"), metadata(cfg, &ctx)?)?;
    }
    Ok(rows)
}

/// Mixing diagnostic of the configured environment under its behavior policy.
pub fn mixing(cfg: &ExperimentConfig) -> Result<MixingEstimate> {
    let ctx = cfg.environment.build(cfg.algorithm.operator()?)?;
    estimate_mixing(&ctx.mdp, &ctx.behavior, cfg.theory.mixing_horizon).map_err(|e| Error::Environment {
        env: cfg.environment.label(),
        source: Box::new(e),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateValidation {
    pub mixing: MixingEstimate,
    pub constants: TheoryConstants,
    pub report: FeasibilityReport,
    /// `c_0` at the configured rates.
    pub c0: f64,
    /// Smallest batch size from which the sample-complexity schedule is
    /// feasible, with `c_0` under that schedule.
    pub threshold: Option<(usize, f64)>,
}

impl RateValidation {
    pub fn to_text(&self) -> String {
        let c = &self.constants;
        let i = &c.inputs;
        let mut out = String::new();
        let _ = writeln!(out, "environment inputs:");
        let _ = writeln!(out, "  lambda_C = {:e}", i.lambda_c);
        let _ = writeln!(out, "  Lambda   = {:e}", i.mixing_lambda);
        let _ = writeln!(out, "  rho      = {:e}", i.rho);
        let _ = writeln!(out, "  C_gradJ  = {:e}", i.c_grad_j);
        let _ = writeln!(out, "constants:");
        for (name, v) in [
            ("G", c.g_const),
            ("H", c.h_const),
            ("C1", c.c1),
            ("C2", c.c2),
            ("C3", c.c3),
            ("C4", c.c4),
            ("L4", c.l4),
            ("L5", c.l5),
            ("D", c.d_const),
            ("c_hat", c.c_hat),
        ] {
            let _ = writeln!(out, "  {name:<8} = {v:e}");
        }
        out.push_str(&self.report.to_text());
        let _ = writeln!(out, "c_0 at configured rates = {:e}", self.c0);
        match self.threshold {
            Some((m, c0)) => {
                let _ = writeln!(
                    out,
                    "schedule eta_theta = 1/((3+16 L1) M), eta_omega = eta_theta^(2/3): feasible for M >= {m} (c_0 = {c0:e})"
                );
            }
            None => {
                let _ = writeln!(out, "schedule eta_theta = 1/((3+16 L1) M), eta_omega = eta_theta^(2/3): infeasible up to the search cap");
            }
        }
        out
    }

    pub fn to_key_values(&self) -> String {
        let c = &self.constants;
        let i = &c.inputs;
        let mut out = String::new();
        for (k, v) in [
            ("lambda_c", i.lambda_c),
            ("mixing_lambda", i.mixing_lambda),
            ("rho", i.rho),
            ("c_grad_j", i.c_grad_j),
            ("G", c.g_const),
            ("H", c.h_const),
            ("C1", c.c1),
            ("C2", c.c2),
            ("C3", c.c3),
            ("C4", c.c4),
            ("L4", c.l4),
            ("L5", c.l5),
            ("D", c.d_const),
            ("c_hat", c.c_hat),
        ] {
            let _ = writeln!(out, "{k}={v:e}");
        }
        out.push_str(&self.report.to_key_values());
        let _ = writeln!(out, "c0={:e}", self.c0);
        match self.threshold {
            Some((m, c0)) => {
                let _ = writeln!(out, "threshold_m={m}");
                let _ = writeln!(out, "threshold_c0={c0:e}");
            }
            None => {
                let _ = writeln!(out, "threshold_m=none");
            }
        }
        out
    }
}

/// Theory inputs of an oracle context.
pub fn theory_inputs(
    ctx: &ObjectiveContext,
    theory: &TheoryConfig,
    radius: f64,
    mixing: &MixingEstimate,
    c_grad_j: f64,
) -> TheoryInputs {
    let n_actions = ctx.mdp.n_actions();
    TheoryInputs {
        radius,
        gamma: ctx.gamma(),
        r_max: ctx.mdp.r_max(),
        n_actions,
        k1: theory.k1.unwrap_or(ctx.op.temperature() * n_actions as f64),
        l1: theory.l1,
        l2: theory.l2,
        l3: theory.l3,
        l_smooth: theory.l_smooth,
        lambda_c: ctx.lambda_c,
        mixing_lambda: mixing.lambda_hat,
        rho: mixing.rho_hat,
        c_grad_j,
    }
}

/// Evaluate the learning-rate conditions at the configured rates and search
/// the feasibility threshold of the sample-complexity schedule.
pub fn validate_rates(cfg: &ExperimentConfig) -> Result<RateValidation> {
    let ctx = cfg.environment.build(cfg.algorithm.operator()?)?;
    let t = &cfg.theory;
    let radius = t.radius.unwrap_or(cfg.algorithm.radius);
    let mixing = estimate_mixing(&ctx.mdp, &ctx.behavior, t.mixing_horizon).map_err(|e| Error::Environment {
        env: cfg.environment.label(),
        source: Box::new(e),
    })?;
    let c_grad_j = empirical_grad_bound(&ctx, radius, t.grad_bound_samples, t.grad_bound_seed)?;
    let constants = compute_constants(&theory_inputs(&ctx, t, radius, &mixing, c_grad_j))?;
    let a = &cfg.algorithm;
    let report = check_learning_rates(&constants, a.eta_theta, a.eta_omega, a.batch_size)?;
    let c0 = c_value(&constants, a.eta_theta, a.eta_omega, a.batch_size, 0)?;
    let threshold = match feasibility_threshold(&constants, t.max_batch_size)? {
        Some(m) => {
            let (et, ew) = schedule_rates(&constants, m);
            Some((m, c_value(&constants, et, ew, m, 0)?))
        }
        None => None,
    };
    Ok(RateValidation {
        mixing,
        constants,
        report,
        c0,
        threshold,
    })
}
