//! Exact MSPBE oracle.
//!
//! With the model known, every expectation over `(s, a, s')` under
//! `μ_{s,a}(s,a)·P(s'|s,a)` is an explicit finite sum. This module computes
//! the feature covariance `C`, the auxiliary fixed point
//! `ω*(θ) = C⁻¹ E[δ(θ)φ]`, the objective `J(θ) = ½ E[δφ]ᵀ C⁻¹ E[δφ]` and its
//! gradient `∇J(θ) = −E[δφ] + γ E[φ̂_{s'}(θ) φᵀ] ω*(θ)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::features::{axpy, eval_state, FeatureMap, SoftmaxOperator, StateEval};
use crate::mdp::{stationary_distribution, Mdp, PolicyTable, StationaryDistribution};

/// Smallest admissible eigenvalue of `C`.
pub const MIN_EIGENVALUE: f64 = 1e-8;
const INVERSE_TOL: f64 = 1e-8;

/// Immutable model data shared by every oracle query.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    pub mdp: Mdp,
    pub features: FeatureMap,
    pub op: SoftmaxOperator,
    pub behavior: PolicyTable,
    pub mu: StationaryDistribution,
    /// `C = E[φφᵀ]`.
    pub c: DMatrix<f64>,
    pub c_inv: DMatrix<f64>,
    /// Minimum eigenvalue of `C`.
    pub lambda_c: f64,
    chol: Cholesky<f64, Dyn>,
    gamma: f64,
    /// `Σ_{s'} P(s'|s,a) r(s,a,s')` per pair.
    mean_reward: Vec<f64>,
}

/// One pass of the oracle at a fixed `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    /// `E[δ(θ)φ]`.
    pub td_feature: DVector<f64>,
    pub omega_star: DVector<f64>,
    pub grad: DVector<f64>,
    pub mspbe: f64,
}

impl ObjectiveEval {
    pub fn grad_norm_sq(&self) -> f64 {
        self.grad.norm_squared()
    }
}

/// Build `C`, its inverse and `λ_C` under the behavior stationary law.
pub fn build_context(
    mdp: &Mdp,
    features: &FeatureMap,
    op: SoftmaxOperator,
    behavior: &PolicyTable,
) -> Result<ObjectiveContext> {
    features.check_compatible(mdp)?;
    let mu = stationary_distribution(mdp, behavior)?;
    let (n_s, n_a, d) = (mdp.n_states(), mdp.n_actions(), features.dim());

    let mut c = DMatrix::zeros(d, d);
    for s in 0..n_s {
        for a in 0..n_a {
            let w = mu.state_action(s, a, n_a);
            let phi = features.row(s, a);
            for i in 0..d {
                for j in 0..d {
                    c[(i, j)] += w * phi[i] * phi[j];
                }
            }
        }
    }
    let lambda_c = SymmetricEigen::new(c.clone()).eigenvalues.min();
    if !(lambda_c > MIN_EIGENVALUE) {
        return Err(Error::Solvability { lambda_min: lambda_c });
    }
    let c_inv = c
        .clone()
        .try_inverse()
        .ok_or(Error::Solvability { lambda_min: lambda_c })?;
    let defect = (&c * &c_inv - DMatrix::<f64>::identity(d, d)).amax();
    if defect >= INVERSE_TOL {
        return Err(Error::Solvability { lambda_min: lambda_c });
    }
    let chol = c
        .clone()
        .cholesky()
        .ok_or(Error::Solvability { lambda_min: lambda_c })?;

    let mean_reward = (0..n_s)
        .flat_map(|s| (0..n_a).map(move |a| (s, a)))
        .map(|(s, a)| {
            mdp.kernel_row(s, a)
                .iter()
                .zip(mdp.reward_row(s, a))
                .map(|(p, r)| p * r)
                .sum()
        })
        .collect();

    Ok(ObjectiveContext {
        mdp: mdp.clone(),
        features: features.clone(),
        op,
        behavior: behavior.clone(),
        mu,
        c,
        c_inv,
        lambda_c,
        chol,
        gamma: mdp.gamma(),
        mean_reward,
    })
}

impl ObjectiveContext {
    /// Discount used by the objective and the updates.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The same context evaluated under discount `gamma ∈ [0, 1)`.
    /// `γ = 0` is useful for closed-form checks even though an [`Mdp`]
    /// itself requires `γ > 0`.
    pub fn with_discount(mut self, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Parameter(format!("discount must lie in [0,1), got {gamma}")));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    /// `V̄`, `φ̂` and the policy at every state.
    pub fn eval_states(&self, theta: &DVector<f64>) -> Vec<StateEval> {
        (0..self.mdp.n_states())
            .map(|s| eval_state(theta, s, &self.features, &self.op))
            .collect()
    }

    /// `E[δφ]` and `E[φ̂_{s'} φᵀ]` by enumeration.
    fn moments(&self, states: &[StateEval]) -> (DVector<f64>, DMatrix<f64>) {
        let (n_s, n_a, d) = (self.mdp.n_states(), self.mdp.n_actions(), self.dim());
        let mut td_feature = DVector::zeros(d);
        let mut cross = DMatrix::zeros(d, d);
        let mut next_phi_hat = DVector::zeros(d);
        for s in 0..n_s {
            for a in 0..n_a {
                let w = self.mu.state_action(s, a, n_a);
                if w == 0.0 {
                    continue;
                }
                let phi = self.features.row(s, a);
                let q = states[s].q[a];
                next_phi_hat.fill(0.0);
                let mut next_value = 0.0;
                for (s_next, &p) in self.mdp.kernel_row(s, a).iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    next_value += p * states[s_next].v_bar;
                    axpy(p, states[s_next].phi_hat.as_slice(), next_phi_hat.as_mut_slice());
                }
                // E[δ | s, a] = r̄(s,a) + γ E[V̄_{s'}] − q(s,a)
                let delta = self.mean_reward[s * n_a + a] + self.gamma * next_value - q;
                axpy(w * delta, phi, td_feature.as_mut_slice());
                for j in 0..d {
                    let wj = w * phi[j];
                    if wj == 0.0 {
                        continue;
                    }
                    for i in 0..d {
                        cross[(i, j)] += wj * next_phi_hat[i];
                    }
                }
            }
        }
        (td_feature, cross)
    }

    /// `E[δ(θ)φ]`.
    pub fn td_feature(&self, theta: &DVector<f64>) -> DVector<f64> {
        let states = self.eval_states(theta);
        self.moments(&states).0
    }

    /// Solve `C ω = rhs` by Cholesky (independent of the stored inverse).
    fn solve_c(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    /// Gradient, `ω*`, `J` and `E[δφ]` in one enumeration pass.
    pub fn evaluate(&self, theta: &DVector<f64>) -> ObjectiveEval {
        let states = self.eval_states(theta);
        let (td_feature, cross) = self.moments(&states);
        let omega_star = self.solve_c(&td_feature);
        let grad = -&td_feature + self.gamma * (&cross * &omega_star);
        let mspbe = 0.5 * td_feature.dot(&(&self.c_inv * &td_feature));
        ObjectiveEval {
            td_feature,
            omega_star,
            grad,
            mspbe,
        }
    }
}

/// `ω*(θ) = C⁻¹ E[δ(θ)φ]`.
pub fn omega_star(ctx: &ObjectiveContext, theta: &DVector<f64>) -> DVector<f64> {
    ctx.solve_c(&ctx.td_feature(theta))
}

/// `∇J(θ) = −E[δφ] + γ E[φ̂_{s'} φᵀ] ω*(θ)`.
pub fn grad_j(ctx: &ObjectiveContext, theta: &DVector<f64>) -> DVector<f64> {
    ctx.evaluate(theta).grad
}

/// `J(θ) = ½ E[δφ]ᵀ C⁻¹ E[δφ]`, the MSPBE under linear features.
pub fn mspbe(ctx: &ObjectiveContext, theta: &DVector<f64>) -> f64 {
    let b = ctx.td_feature(theta);
    0.5 * b.dot(&(&ctx.c_inv * &b))
}

/// Coordinate-wise central difference of [`mspbe`].
pub fn finite_diff_grad(ctx: &ObjectiveContext, theta: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    if !(h > 0.0) {
        return Err(Error::Parameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    Ok(DVector::from_fn(theta.len(), |i, _| {
        let mut up = theta.clone();
        let mut down = theta.clone();
        up[i] += h;
        down[i] -= h;
        (mspbe(ctx, &up) - mspbe(ctx, &down)) / (2.0 * h)
    }))
}
