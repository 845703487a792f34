//! Constants and learning-rate conditions of the finite-time analysis of
//! VR-Greedy-GQ.
//!
//! The Lipschitz and smoothness inputs `L1`, `L2`, `L3` and `L` have no
//! closed form here; they are user inputs (default 1). Everything else is
//! evaluated from the environment: `λ_C` from the objective oracle, `(Λ, ρ)`
//! from the mixing diagnostic and `C_∇J` from an empirical maximum of the
//! exact gradient norm over the projection ball.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::ObjectiveContext;
use crate::rng;

/// Bound `ĉ` on the `c_t` sequence.
pub const C_HAT: f64 = 0.125;
/// Lipschitz constant of `ω ↦ H(θ, ω)`.
pub const L4: f64 = 1.0;
/// Weight `β_t` of the Young inequality in the descent step.
pub const BETA: f64 = 1.0;
/// Sample count of [`empirical_grad_bound`] used by default.
pub const GRAD_BOUND_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub radius: f64,
    pub gamma: f64,
    pub r_max: f64,
    pub n_actions: usize,
    /// Lipschitz constant of the policy in `θ`.
    pub k1: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Smoothness constant `L` of `J`.
    pub l_smooth: f64,
    pub lambda_c: f64,
    /// Mixing amplitude `Λ`.
    pub mixing_lambda: f64,
    pub rho: f64,
    /// Bound `C_∇J` on `‖∇J‖` over the ball.
    pub c_grad_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub inputs: TheoryInputs,
    pub g_const: f64,
    pub h_const: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub l4: f64,
    pub l5: f64,
    pub c_hat: f64,
    pub d_const: f64,
    pub beta: f64,
}

pub fn compute_constants(inputs: &TheoryInputs) -> Result<TheoryConstants> {
    let i = *inputs;
    if !(0.0..1.0).contains(&i.rho) {
        return Err(Error::Parameter(format!(
            "mixing rate rho must lie in [0,1), got {}",
            i.rho
        )));
    }
    if !(i.lambda_c > 0.0) {
        return Err(Error::Parameter(format!(
            "lambda_C must be positive, got {}",
            i.lambda_c
        )));
    }
    let nonnegative = [
        ("radius", i.radius),
        ("gamma", i.gamma),
        ("r_max", i.r_max),
        ("k1", i.k1),
        ("L1", i.l1),
        ("L2", i.l2),
        ("L3", i.l3),
        ("L", i.l_smooth),
        ("Lambda", i.mixing_lambda),
        ("C_gradJ", i.c_grad_j),
    ];
    for (name, v) in nonnegative {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Parameter(format!(
                "{name} must be finite and nonnegative, got {v}"
            )));
        }
    }
    let (r, g, a) = (i.radius, i.gamma, i.n_actions as f64);
    let mix = i.mixing_lambda * i.rho / (1.0 - i.rho);
    let g_const = i.r_max + (1.0 + g) * r + g * (a * r * i.k1 + 1.0) * r;
    let h_const = (2.0 + g) * r + i.r_max;
    Ok(TheoryConstants {
        inputs: i,
        g_const,
        h_const,
        c1: (1.0 + 2.0 * mix) * (g_const + i.c_grad_j).powi(2),
        c2: h_const * h_const * (1.0 + mix),
        c3: 8.0 * r * r / i.lambda_c * (1.0 + mix),
        c4: 2.0 / i.lambda_c * (r * (2.0 + g) + i.r_max).powi(2) * (1.0 + mix),
        l4: L4,
        l5: (g * a * i.k1 * r + 1.0) + 1.0 + i.l3,
        c_hat: C_HAT,
        d_const: 6.0 * i.l1 * (i.l_smooth / 2.0 + C_HAT) + i.l1 + i.l1 * C_HAT,
        beta: BETA,
    })
}

/// `η_θ² / η_ω²`, defined as 0 when `η_θ = 0`.
fn rate_ratio_sq(eta_theta: f64, eta_omega: f64) -> f64 {
    if eta_theta == 0.0 {
        0.0
    } else {
        (eta_theta / eta_omega).powi(2)
    }
}

fn check_rates(eta_theta: f64, eta_omega: f64) -> Result<()> {
    if !(eta_theta >= 0.0 && eta_omega >= 0.0) || !eta_theta.is_finite() || !eta_omega.is_finite() {
        return Err(Error::Parameter("learning rates must be finite and nonnegative".into()));
    }
    if eta_theta > 0.0 && eta_omega == 0.0 {
        return Err(Error::Parameter("eta_omega must be positive when eta_theta is".into()));
    }
    Ok(())
}

impl TheoryConstants {
    /// `(9/λ_C + 2L3²)`, shared by several conditions.
    fn tracking_factor(&self) -> f64 {
        9.0 / self.inputs.lambda_c + 2.0 * self.inputs.l3.powi(2)
    }

    /// `(4/λ_C)[12 L5² η_ω + (9/λ_C + 2L3²)·9 L2²·η_θ²/η_ω²]`.
    pub fn coupling(&self, eta_theta: f64, eta_omega: f64) -> f64 {
        let i = &self.inputs;
        4.0 / i.lambda_c
            * (12.0 * self.l5.powi(2) * eta_omega
                + self.tracking_factor() * 9.0 * i.l2.powi(2) * rate_ratio_sq(eta_theta, eta_omega))
    }
}

/// Backward recursion `c_M = 0`, `c_t = f(c_{t+1})`; returns `c_0..=c_M`.
pub fn c_sequence(constants: &TheoryConstants, eta_theta: f64, eta_omega: f64, m: usize) -> Result<Vec<f64>> {
    check_rates(eta_theta, eta_omega)?;
    if m == 0 {
        return Err(Error::Parameter("batch size must be at least 1".into()));
    }
    let i = &constants.inputs;
    let coupling = constants.coupling(eta_theta, eta_omega);
    let et2 = eta_theta * eta_theta;
    let mut c = vec![0.0; m + 1];
    for t in (0..m).rev() {
        let next = c[t + 1];
        let smooth = i.l_smooth / 2.0 * et2 + next * et2;
        c[t] = next * (eta_theta * constants.beta + 1.0 + 2.0 * eta_theta)
            + 9.0 * i.l1 * smooth
            + (6.0 * i.l1 * smooth + eta_theta * i.l1 + eta_theta * i.l1 * next) * coupling;
    }
    Ok(c)
}

/// Coefficients `(a - 1, b)` of the recursion written as `c_t = a c_{t+1} + b`.
fn c_affine(constants: &TheoryConstants, eta_theta: f64, eta_omega: f64) -> (f64, f64) {
    let i = &constants.inputs;
    let coupling = constants.coupling(eta_theta, eta_omega);
    let et2 = eta_theta * eta_theta;
    let growth = eta_theta * constants.beta
        + 2.0 * eta_theta
        + 9.0 * i.l1 * et2
        + (6.0 * i.l1 * et2 + eta_theta * i.l1) * coupling;
    let offset = 9.0 * i.l1 * i.l_smooth / 2.0 * et2 + 6.0 * i.l1 * i.l_smooth / 2.0 * et2 * coupling;
    (growth, offset + eta_theta * i.l1 * coupling)
}

/// `c_t` of [`c_sequence`] in closed form, `b (a^{M-t} - 1)/(a - 1)`, for
/// batch sizes too large to materialize.
pub fn c_value(constants: &TheoryConstants, eta_theta: f64, eta_omega: f64, m: usize, t: usize) -> Result<f64> {
    check_rates(eta_theta, eta_omega)?;
    if m == 0 || t > m {
        return Err(Error::Parameter(format!(
            "need 0 <= t <= M with M >= 1, got t = {t}, M = {m}"
        )));
    }
    let (growth, offset) = c_affine(constants, eta_theta, eta_omega);
    let steps = (m - t) as f64;
    if growth == 0.0 {
        return Ok(offset * steps);
    }
    Ok(offset * (steps * growth.ln_1p()).exp_m1() / growth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub statement: &'static str,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    pub passed: bool,
}

impl Condition {
    fn new(name: &'static str, statement: &'static str, lhs: f64, relation: Relation, rhs: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => lhs <= rhs,
            Relation::AtLeast => lhs >= rhs,
        };
        Self {
            name,
            statement,
            lhs,
            relation,
            rhs,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub eta_theta: f64,
    pub eta_omega: f64,
    pub batch_size: usize,
    pub conditions: Vec<Condition>,
    pub footnotes: Vec<String>,
}

const L1_FOOTNOTE: &str = "the tracking condition carries 6*L1^2 in its eta_theta^2/eta_omega term, \
while the c-recursion and the descent bound carry 6*L1 (unsquared) in the parallel position; \
each condition is evaluated as written";

impl FeasibilityReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// Aligned human-readable table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "learning-rate feasibility: eta_theta = {:e}, eta_omega = {:e}, M = {}",
            self.eta_theta, self.eta_omega, self.batch_size
        );
        let width = self.conditions.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.conditions {
            let rel = match c.relation {
                Relation::AtMost => "<=",
                Relation::AtLeast => ">=",
            };
            let _ = writeln!(
                out,
                "  {:<width$}  {}  {:>14.6e} {} {:<14.6e}  {}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.lhs,
                rel,
                c.rhs,
                c.statement,
            );
        }
        let _ = writeln!(
            out,
            "  overall: {}",
            if self.all_passed() { "FEASIBLE" } else { "INFEASIBLE" }
        );
        for (k, note) in self.footnotes.iter().enumerate() {
            let _ = writeln!(out, "  [{}] {}", k + 1, note);
        }
        out
    }

    /// One `key=value` line per quantity.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "eta_theta={:e}", self.eta_theta);
        let _ = writeln!(out, "eta_omega={:e}", self.eta_omega);
        let _ = writeln!(out, "batch_size={}", self.batch_size);
        for c in &self.conditions {
            let _ = writeln!(out, "{}.lhs={:e}", c.name, c.lhs);
            let _ = writeln!(out, "{}.rhs={:e}", c.name, c.rhs);
            let _ = writeln!(out, "{}.pass={}", c.name, c.passed);
        }
        let _ = writeln!(out, "feasible={}", self.all_passed());
        out
    }
}

/// Evaluate the six learning-rate conditions.
pub fn check_learning_rates(
    constants: &TheoryConstants,
    eta_theta: f64,
    eta_omega: f64,
    m: usize,
) -> Result<FeasibilityReport> {
    check_rates(eta_theta, eta_omega)?;
    if m == 0 {
        return Err(Error::Parameter("batch size must be at least 1".into()));
    }
    let i = &constants.inputs;
    let coupling = constants.coupling(eta_theta, eta_omega);
    let ratio = rate_ratio_sq(eta_theta, eta_omega);
    let tf = constants.tracking_factor();
    let growth = (4.0 + 16.0 * i.l1) / (3.0 + 16.0 * i.l1) * (std::f64::consts::E - 1.0);
    let et2 = eta_theta * eta_theta;

    let conditions = vec![
        Condition::new(
            "coupling",
            "(4/lambda_C)[12 L5^2 eta_w + (9/lambda_C + 2 L3^2) 9 L2^2 eta_t^2/eta_w^2] <= 1",
            coupling,
            Relation::AtMost,
            1.0,
        ),
        Condition::new(
            "rate_cap",
            "max(eta_w, eta_t) <= 1",
            eta_omega.max(eta_theta),
            Relation::AtMost,
            1.0,
        ),
        Condition::new(
            "epoch_length",
            "(3 + 16 L1) eta_t <= 1/M",
            (3.0 + 16.0 * i.l1) * eta_theta,
            Relation::AtMost,
            1.0 / m as f64,
        ),
        Condition::new(
            "c_bound",
            "[7.5 L1 L eta_t + L1 * coupling] (4 + 16 L1)/(3 + 16 L1) (e - 1) <= c_hat",
            (7.5 * i.l1 * i.l_smooth * eta_theta + i.l1 * coupling) * growth,
            Relation::AtMost,
            constants.c_hat,
        ),
        Condition::new(
            "descent",
            "3/8 eta_t - 9(L/2 + c_hat) eta_t^2 - D (9/lambda_C + 2 L3^2)(36/lambda_C) eta_t^3/eta_w^2 >= eta_t/4",
            0.375 * eta_theta
                - 9.0 * (i.l_smooth / 2.0 + constants.c_hat) * et2
                - constants.d_const * tf * 36.0 / i.lambda_c * eta_theta * ratio,
            Relation::AtLeast,
            eta_theta / 4.0,
        ),
        Condition::new(
            "tracking",
            "lambda_C eta_w/2 - (9/lambda_C + 2 L3^2) 6 L1^2 eta_t^2/eta_w - 12 L4^2 eta_w^2 >= lambda_C eta_w/4",
            0.5 * i.lambda_c * eta_omega
                - tf * 6.0 * i.l1.powi(2) * eta_omega * ratio
                - 12.0 * constants.l4.powi(2) * eta_omega * eta_omega,
            Relation::AtLeast,
            0.25 * i.lambda_c * eta_omega,
        ),
    ];
    Ok(FeasibilityReport {
        eta_theta,
        eta_omega,
        batch_size: m,
        conditions,
        footnotes: vec![L1_FOOTNOTE.to_string()],
    })
}

/// Rates of the sample-complexity schedule for batch size `M`:
/// `η_θ = 1/((3 + 16 L1) M)`, the largest `O(1/M)` rate meeting the epoch
/// length condition, and `η_ω = η_θ^{2/3}`.
pub fn schedule_rates(constants: &TheoryConstants, m: usize) -> (f64, f64) {
    let eta_theta = 1.0 / ((3.0 + 16.0 * constants.inputs.l1) * m as f64);
    (eta_theta, eta_theta.powf(2.0 / 3.0))
}

fn feasible_at(constants: &TheoryConstants, m: usize) -> Result<bool> {
    let (et, ew) = schedule_rates(constants, m);
    Ok(check_learning_rates(constants, et, ew, m)?.all_passed())
}

/// Smallest `M ≤ max_m` from which the schedule of [`schedule_rates`]
/// satisfies every condition, found by doubling then bisection. `None` if
/// `max_m` itself is infeasible.
pub fn feasibility_threshold(constants: &TheoryConstants, max_m: usize) -> Result<Option<usize>> {
    if max_m == 0 {
        return Err(Error::Parameter("max_m must be at least 1".into()));
    }
    if feasible_at(constants, 1)? {
        return Ok(Some(1));
    }
    let mut lo = 1;
    let mut hi = 2;
    loop {
        if hi >= max_m {
            if !feasible_at(constants, max_m)? {
                return Ok(None);
            }
            hi = max_m;
            break;
        }
        if feasible_at(constants, hi)? {
            break;
        }
        lo = hi;
        hi *= 2;
    }
    // invariant: infeasible at lo, feasible at hi
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible_at(constants, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Largest exact gradient norm over `samples` points drawn uniformly from
/// the ball of radius `radius`, the origin included.
pub fn empirical_grad_bound(ctx: &ObjectiveContext, radius: f64, samples: usize, seed: u64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
    }
    let d = ctx.dim();
    let mut rng = rng::seeded(seed, rng::stream::GRADIENT_BOUND);
    let unit = Uniform::new(0.0f64, 1.0);
    let mut best = ctx.evaluate(&DVector::zeros(d)).grad.norm();
    for _ in 0..samples {
        let dir = DVector::<f64>::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let norm = dir.norm();
        if norm == 0.0 {
            continue;
        }
        let scale = radius * unit.sample(&mut rng).powf(1.0 / d as f64) / norm;
        best = best.max(ctx.evaluate(&(dir * scale)).grad.norm());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs() -> TheoryInputs {
        TheoryInputs {
            radius: 1.0,
            gamma: 0.95,
            r_max: 1.0,
            n_actions: 3,
            k1: 1.0,
            l1: 1.0,
            l2: 1.0,
            l3: 1.0,
            l_smooth: 1.0,
            lambda_c: 0.1,
            mixing_lambda: 2.0,
            rho: 0.5,
            c_grad_j: 0.7,
        }
    }

    #[test]
    fn h_constant_example() {
        let c = compute_constants(&inputs()).unwrap();
        assert!((c.h_const - 3.95).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_constants() {
        let c = compute_constants(&inputs()).unwrap();
        // Λρ/(1−ρ) = 2
        assert!((c.g_const - (1.0 + 1.95 + 0.95 * 4.0)).abs() < 1e-14);
        assert!((c.c1 - 5.0 * (6.75f64 + 0.7).powi(2)).abs() < 1e-12);
        assert!((c.c2 - 3.95f64.powi(2) * 3.0).abs() < 1e-12);
        assert!((c.c3 - 8.0 / 0.1 * 3.0).abs() < 1e-12);
        assert!((c.c4 - 2.0 / 0.1 * 3.95f64.powi(2) * 3.0).abs() < 1e-10);
        assert!((c.l5 - (0.95 * 3.0 + 1.0 + 1.0 + 1.0)).abs() < 1e-15);
        assert!((c.d_const - (6.0 * 0.625 + 1.0 + 0.125)).abs() < 1e-15);
        assert_eq!(c.l4, 1.0);
        assert_eq!(c.c_hat, 0.125);
    }

    #[test]
    fn no_mixing_correction_without_amplitude() {
        let c = compute_constants(&TheoryInputs {
            mixing_lambda: 0.0,
            ..inputs()
        })
        .unwrap();
        assert_eq!(c.c2, c.h_const * c.h_const);
    }

    #[test]
    fn invalid_inputs() {
        assert!(compute_constants(&TheoryInputs { rho: 1.0, ..inputs() }).is_err());
        assert!(compute_constants(&TheoryInputs {
            lambda_c: 0.0,
            ..inputs()
        })
        .is_err());
        assert!(compute_constants(&TheoryInputs { l2: -1.0, ..inputs() }).is_err());
    }

    #[test]
    fn c_sequence_examples() {
        let c = compute_constants(&inputs()).unwrap();
        assert!(c_sequence(&c, 0.0, 0.0, 10).unwrap().iter().all(|&x| x == 0.0));
        let seq = c_sequence(&c, 1e-3, 1e-2, 50).unwrap();
        assert_eq!(seq.len(), 51);
        assert_eq!(seq[50], 0.0);
        assert!(seq.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn closed_form_matches_recursion() {
        let c = compute_constants(&inputs()).unwrap();
        for (et, ew, m) in [(1e-3, 1e-2, 50), (1e-5, 1e-3, 2000), (0.0, 0.0, 7)] {
            let seq = c_sequence(&c, et, ew, m).unwrap();
            for (t, &x) in seq.iter().enumerate() {
                let y = c_value(&c, et, ew, m, t).unwrap();
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "t = {t}: {x} vs {y}");
            }
        }
        assert!(c_value(&c, 1e-3, 1e-2, 5, 6).is_err());
    }

    #[test]
    fn c_sequence_single_step() {
        let c = compute_constants(&inputs()).unwrap();
        let (et, ew) = (0.01, 0.1);
        let seq = c_sequence(&c, et, ew, 1).unwrap();
        let expected = 9.0 * 0.5 * et * et + (6.0 * 0.5 * et * et + et) * c.coupling(et, ew);
        assert!((seq[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn large_rates_fail_the_cap() {
        let c = compute_constants(&inputs()).unwrap();
        let report = check_learning_rates(&c, 10.0, 10.0, 1).unwrap();
        assert!(!report.condition("rate_cap").unwrap().passed);
        assert!(!report.all_passed());
        assert_eq!(report.conditions.len(), 6);
        assert!(report.to_text().contains("INFEASIBLE"));
        assert!(report.to_key_values().contains("rate_cap.pass=false"));
    }

    #[test]
    fn reported_coupling_matches_formula() {
        let c = compute_constants(&inputs()).unwrap();
        let report = check_learning_rates(&c, 0.5, 0.5, 1).unwrap();
        let l5 = c.l5;
        let expected = 4.0 / 0.1 * (12.0 * l5 * l5 * 0.5 + (90.0 + 2.0) * 9.0);
        assert!((report.condition("coupling").unwrap().lhs - expected).abs() < 1e-9);
    }

    #[test]
    fn unit_rate_over_m_never_meets_epoch_length() {
        let c = compute_constants(&inputs()).unwrap();
        for m in [1, 10, 1000, 1_000_000] {
            let et = 1.0 / m as f64;
            let report = check_learning_rates(&c, et, et.powf(2.0 / 3.0), m).unwrap();
            assert!(!report.condition("epoch_length").unwrap().passed);
        }
    }

    #[test]
    fn threshold_is_minimal_and_c_bounded() {
        let c = compute_constants(&inputs()).unwrap();
        let m = feasibility_threshold(&c, 1 << 40).unwrap().expect("feasible");
        assert!(m > 1);
        assert!(feasible_at(&c, m).unwrap());
        assert!(!feasible_at(&c, m - 1).unwrap());
        let (et, ew) = schedule_rates(&c, m);
        let seq = c_sequence(&c, et, ew, m).unwrap();
        assert_eq!(seq[m], 0.0);
        assert!(seq[0] <= C_HAT);
        assert!(seq.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn infeasible_cap() {
        let c = compute_constants(&inputs()).unwrap();
        assert_eq!(feasibility_threshold(&c, 2).unwrap(), None);
    }

    #[test]
    fn report_is_pure() {
        let c = compute_constants(&inputs()).unwrap();
        assert_eq!(
            check_learning_rates(&c, 0.01, 0.05, 7).unwrap(),
            check_learning_rates(&c, 0.01, 0.05, 7).unwrap()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn c_sequence_nonincreasing_under_epoch_length(
            l1 in 0.1f64..5.0, l2 in 0.0f64..3.0, l3 in 0.0f64..3.0, l in 0.0f64..5.0,
            lambda_c in 0.01f64..1.0, m in 1usize..400, frac in 0.01f64..1.0, ew in 1e-4f64..1.0,
        ) {
            let c = compute_constants(&TheoryInputs { l1, l2, l3, l_smooth: l, lambda_c, ..inputs() }).unwrap();
            let et = frac / ((3.0 + 16.0 * l1) * m as f64);
            let seq = c_sequence(&c, et, ew, m).unwrap();
            prop_assert_eq!(seq[m], 0.0);
            prop_assert!(seq.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn constants_monotone_in_radius_and_reward(
            r in 0.1f64..50.0, dr in 0.0f64..10.0, rm in 0.0f64..5.0, drm in 0.0f64..5.0,
        ) {
            let lo = compute_constants(&TheoryInputs { radius: r, r_max: rm, ..inputs() }).unwrap();
            let hi = compute_constants(&TheoryInputs { radius: r + dr, r_max: rm + drm, ..inputs() }).unwrap();
            for (a, b) in [
                (lo.g_const, hi.g_const), (lo.h_const, hi.h_const), (lo.c1, hi.c1), (lo.c2, hi.c2),
                (lo.c3, hi.c3), (lo.c4, hi.c4), (lo.l5, hi.l5), (lo.d_const, hi.d_const),
            ] {
                prop_assert!(a <= b);
            }
        }
    }
}
