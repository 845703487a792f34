//! Linear state-action features, the softmax policy-improvement operator and
//! the per-sample quantities derived from a parameter vector: the expected
//! next value `V̄_s(θ)`, its gradient `φ̂_s(θ)` and the TD error `δ(θ)`.

use nalgebra::DVector;
use rand::distributions::{Distribution, Uniform};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Mdp, PolicyTable, Transition};
use crate::rng;

/// Rows are allowed to exceed unit norm by this much (rounding).
const NORM_SLACK: f64 = 1e-12;

/// One `d`-dimensional feature vector per state-action pair, stored row-major
/// with pair index `s * n_actions + a`. Every row has norm at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    n_states: usize,
    n_actions: usize,
    dim: usize,
    phi: Vec<f64>,
}

impl FeatureMap {
    pub fn new(n_states: usize, n_actions: usize, dim: usize, phi: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("feature dimension must be positive".into()));
        }
        if phi.len() != n_states * n_actions * dim {
            return Err(Error::Parameter(format!(
                "feature matrix needs {} entries, got {}",
                n_states * n_actions * dim,
                phi.len()
            )));
        }
        for (pair, row) in phi.chunks(dim).enumerate() {
            let norm = dot(row, row).sqrt();
            if !(norm <= 1.0 + NORM_SLACK) {
                return Err(Error::Parameter(format!("feature row {pair} has norm {norm} > 1")));
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            dim,
            phi,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `φ_{s,a}`.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.dim;
        &self.phi[start..start + self.dim]
    }

    pub fn row_vector(&self, s: usize, a: usize) -> DVector<f64> {
        DVector::from_column_slice(self.row(s, a))
    }

    /// `φ_{s,a}ᵀθ`.
    pub fn value(&self, theta: &DVector<f64>, s: usize, a: usize) -> f64 {
        dot(self.row(s, a), theta.as_slice())
    }

    pub fn check_compatible(&self, mdp: &Mdp) -> Result<()> {
        if self.n_states != mdp.n_states() || self.n_actions != mdp.n_actions() {
            return Err(Error::Parameter(format!(
                "features cover {}x{} pairs, MDP has {}x{}",
                self.n_states,
                self.n_actions,
                mdp.n_states(),
                mdp.n_actions()
            )));
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sampling law of raw feature entries before row normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureDistribution {
    /// Uniform on `[0, 1]`.
    Uniform,
    /// Standard normal.
    Gaussian,
}

/// Random features with every row scaled to unit norm.
pub fn generate_features(
    n_states: usize,
    n_actions: usize,
    dim: usize,
    distribution: FeatureDistribution,
    seed: u64,
) -> Result<FeatureMap> {
    if dim == 0 {
        return Err(Error::Parameter("feature dimension must be positive".into()));
    }
    let mut rng = rng::seeded(seed, rng::stream::FEATURES);
    let unit = Uniform::new_inclusive(0.0, 1.0);
    let mut phi = Vec::with_capacity(n_states * n_actions * dim);
    for _ in 0..n_states * n_actions {
        // an all-zero draw has probability zero; redraw it from the stream
        let row = loop {
            let row: Vec<f64> = match distribution {
                FeatureDistribution::Uniform => (0..dim).map(|_| unit.sample(&mut rng)).collect(),
                FeatureDistribution::Gaussian => (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect(),
            };
            let norm = dot(&row, &row).sqrt();
            if norm > 0.0 {
                break row.into_iter().map(|x| x / norm).collect::<Vec<_>>();
            }
        };
        phi.extend(row);
    }
    FeatureMap::new(n_states, n_actions, dim, phi)
}

/// Softmax improvement operator `π_θ(a|s) ∝ exp(σ φ_{s,a}ᵀθ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxOperator {
    temperature: f64,
}

impl Default for SoftmaxOperator {
    fn default() -> Self {
        Self { temperature: 1.0 }
    }
}

impl SoftmaxOperator {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Parameter(format!(
                "softmax temperature must be positive and finite, got {temperature}"
            )));
        }
        Ok(Self { temperature })
    }

    /// σ.
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Softmax of `σ·logits`, in place, with max-subtraction.
    pub fn probabilities(&self, logits: &[f64], out: &mut [f64]) {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (o, l) in out.iter_mut().zip(logits) {
            *o = (self.temperature * (l - max)).exp();
            total += *o;
        }
        out.iter_mut().for_each(|o| *o /= total);
    }
}

/// Everything the updates need about one state under `π_θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEval {
    /// `φ_{s,a}ᵀθ` per action.
    pub q: Vec<f64>,
    /// `π_θ(a|s)` per action.
    pub pi: Vec<f64>,
    /// `V̄_s(θ)`.
    pub v_bar: f64,
    /// `φ̂_s(θ) = ∇_θ V̄_s(θ)`.
    pub phi_hat: DVector<f64>,
}

/// Evaluate `q`, `π_θ(.|s)`, `V̄_s` and `φ̂_s` in one pass.
pub fn eval_state(theta: &DVector<f64>, s: usize, features: &FeatureMap, op: &SoftmaxOperator) -> StateEval {
    let n_actions = features.n_actions();
    let dim = features.dim();
    let q: Vec<f64> = (0..n_actions).map(|a| features.value(theta, s, a)).collect();
    let mut pi = vec![0.0; n_actions];
    op.probabilities(&q, &mut pi);
    let v_bar = pi.iter().zip(&q).map(|(p, v)| p * v).sum();

    // φ̂ = Σ_a π_a φ_a + σ Σ_a π_a q_a (φ_a − φ̄),  φ̄ = Σ_b π_b φ_b
    let mut phi_bar = DVector::zeros(dim);
    for (a, &p) in pi.iter().enumerate() {
        axpy(p, features.row(s, a), phi_bar.as_mut_slice());
    }
    let mut phi_hat = phi_bar.clone();
    let sigma = op.temperature();
    for a in 0..n_actions {
        let w = sigma * pi[a] * q[a];
        if w == 0.0 {
            continue;
        }
        for ((h, f), m) in phi_hat.iter_mut().zip(features.row(s, a)).zip(phi_bar.iter()) {
            *h += w * (f - m);
        }
    }
    StateEval { q, pi, v_bar, phi_hat }
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `π_θ = 𝒫(φᵀθ)` as a full table.
pub fn improve_policy(theta: &DVector<f64>, features: &FeatureMap, op: &SoftmaxOperator) -> PolicyTable {
    let n_actions = features.n_actions();
    let mut probs = vec![0.0; features.n_states() * n_actions];
    let mut logits = vec![0.0; n_actions];
    for (s, row) in probs.chunks_mut(n_actions).enumerate() {
        for (a, l) in logits.iter_mut().enumerate() {
            *l = features.value(theta, s, a);
        }
        op.probabilities(&logits, row);
    }
    PolicyTable::from_rows_unchecked(features.n_states(), n_actions, probs)
}

/// `V̄_s(θ) = Σ_a π_θ(a|s) φ_{s,a}ᵀθ`.
pub fn v_bar(theta: &DVector<f64>, s: usize, features: &FeatureMap, op: &SoftmaxOperator) -> f64 {
    let n_actions = features.n_actions();
    let q: Vec<f64> = (0..n_actions).map(|a| features.value(theta, s, a)).collect();
    let mut pi = vec![0.0; n_actions];
    op.probabilities(&q, &mut pi);
    pi.iter().zip(&q).map(|(p, v)| p * v).sum()
}

/// `φ̂_s(θ) = ∇_θ V̄_s(θ)`.
pub fn phi_hat(theta: &DVector<f64>, s: usize, features: &FeatureMap, op: &SoftmaxOperator) -> DVector<f64> {
    eval_state(theta, s, features, op).phi_hat
}

/// `δ = r + γ V̄_{s'}(θ) − φ_{s,a}ᵀθ`.
pub fn td_delta(theta: &DVector<f64>, t: &Transition, gamma: f64, features: &FeatureMap, op: &SoftmaxOperator) -> f64 {
    t.r + gamma * v_bar(theta, t.s_next, features, op) - features.value(theta, t.s, t.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{generate_garnet, GarnetSpec};
    use proptest::prelude::*;
    use rand::Rng as _;

    fn garnet_features() -> FeatureMap {
        generate_features(5, 3, 4, FeatureDistribution::Uniform, 0).unwrap()
    }

    fn random_theta(seed: u64, dim: usize, scale: f64) -> DVector<f64> {
        let mut rng = rng::seeded(seed, 99);
        DVector::from_fn(dim, |_, _| scale * (2.0 * rng.gen::<f64>() - 1.0))
    }

    /// Explicit double loop, independent of `eval_state`.
    fn v_bar_brute(theta: &DVector<f64>, s: usize, f: &FeatureMap, sigma: f64) -> f64 {
        let weights: Vec<f64> = (0..f.n_actions())
            .map(|a| (sigma * f.row(s, a).iter().zip(theta.iter()).map(|(x, y)| x * y).sum::<f64>()).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        (0..f.n_actions())
            .map(|a| weights[a] / z * f.row(s, a).iter().zip(theta.iter()).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    fn fd_phi_hat(theta: &DVector<f64>, s: usize, f: &FeatureMap, op: &SoftmaxOperator, h: f64) -> DVector<f64> {
        DVector::from_fn(theta.len(), |i, _| {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[i] += h;
            dn[i] -= h;
            (v_bar(&up, s, f, op) - v_bar(&dn, s, f, op)) / (2.0 * h)
        })
    }

    #[test]
    fn uniform_features_have_unit_rows() {
        let f = garnet_features();
        assert_eq!((f.n_states(), f.n_actions(), f.dim()), (5, 3, 4));
        for s in 0..5 {
            for a in 0..3 {
                let r = f.row(s, a);
                assert!((dot(r, r).sqrt() - 1.0).abs() < 1e-12);
                assert!(r.iter().all(|x| *x >= 0.0));
            }
        }
    }

    #[test]
    fn gaussian_features_have_unit_rows() {
        let f = generate_features(16, 4, 8, FeatureDistribution::Gaussian, 3).unwrap();
        assert_eq!(f.phi.len(), 64 * 8);
        for row in f.phi.chunks(8) {
            assert!((dot(row, row).sqrt() - 1.0).abs() < 1e-12);
        }
        assert!(f.phi.iter().any(|x| *x < 0.0));
    }

    #[test]
    fn one_dimensional_features_are_signs() {
        for dist in [FeatureDistribution::Uniform, FeatureDistribution::Gaussian] {
            let f = generate_features(4, 2, 1, dist, 1).unwrap();
            assert!(f.phi.iter().all(|x| x.abs() == 1.0));
        }
    }

    #[test]
    fn oversized_rows_are_rejected() {
        assert!(FeatureMap::new(1, 1, 2, vec![1.0, 0.5]).is_err());
        assert!(SoftmaxOperator::new(0.0).is_err());
    }

    #[test]
    fn zero_theta_gives_uniform_policy() {
        let f = garnet_features();
        let pi = improve_policy(&DVector::zeros(4), &f, &SoftmaxOperator::default());
        for s in 0..5 {
            assert!(pi.row(s).iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let op = SoftmaxOperator::new(2.0).unwrap();
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        op.probabilities(&[0.1, -0.4, 0.7], &mut a);
        op.probabilities(&[5.1, 4.6, 5.7], &mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn high_temperature_concentrates_on_best_action() {
        // phi rows e1, e2, e3 (embedded in d = 3); θ = (1, 0, 0)
        let f = FeatureMap::new(1, 3, 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
        let op = SoftmaxOperator::new(10.0).unwrap();
        let pi = improve_policy(&DVector::from_vec(vec![1.0, 0.0, 0.0]), &f, &op);
        // e^10 / (e^10 + 2)
        let expected = 10f64.exp() / (10f64.exp() + 2.0);
        assert!((pi.prob(0, 0) - expected).abs() < 1e-15);
        assert!(pi.prob(0, 0) > 0.99);
    }

    #[test]
    fn extreme_logits_do_not_overflow() {
        let f = FeatureMap::new(1, 2, 1, vec![1.0, -1.0]).unwrap();
        let pi = improve_policy(&DVector::from_vec(vec![1e6]), &f, &SoftmaxOperator::default());
        assert_eq!(pi.prob(0, 0), 1.0);
        assert_eq!(pi.prob(0, 1), 0.0);
    }

    #[test]
    fn v_bar_and_phi_hat_at_zero() {
        let f = garnet_features();
        let op = SoftmaxOperator::default();
        let zero = DVector::zeros(4);
        for s in 0..5 {
            assert_eq!(v_bar(&zero, s, &f, &op), 0.0);
            let mean = (0..3).fold(DVector::zeros(4), |acc, a| acc + f.row_vector(s, a)) / 3.0;
            assert!((phi_hat(&zero, s, &f, &op) - mean).amax() < 1e-15);
        }
    }

    #[test]
    fn single_action_degenerates() {
        let f = generate_features(3, 1, 4, FeatureDistribution::Gaussian, 2).unwrap();
        let op = SoftmaxOperator::new(3.0).unwrap();
        let theta = random_theta(4, 4, 2.0);
        for s in 0..3 {
            assert!((v_bar(&theta, s, &f, &op) - f.value(&theta, s, 0)).abs() < 1e-15);
            assert!((phi_hat(&theta, s, &f, &op) - f.row_vector(s, 0)).amax() < 1e-15);
        }
    }

    #[test]
    fn v_bar_matches_brute_force() {
        let f = garnet_features();
        for (seed, sigma) in [(1, 1.0), (2, 0.5), (3, 5.0)] {
            let op = SoftmaxOperator::new(sigma).unwrap();
            let theta = random_theta(seed, 4, 3.0);
            for s in 0..5 {
                let v = v_bar(&theta, s, &f, &op);
                assert!((v - v_bar_brute(&theta, s, &f, sigma)).abs() < 1e-14);
                assert!((v - eval_state(&theta, s, &f, &op).v_bar).abs() == 0.0);
            }
        }
    }

    #[test]
    fn phi_hat_matches_finite_differences() {
        let f = garnet_features();
        for (seed, sigma) in [(5, 1.0), (6, 0.5), (7, 5.0)] {
            let op = SoftmaxOperator::new(sigma).unwrap();
            let theta = random_theta(seed, 4, 2.0);
            for s in 0..5 {
                let exact = phi_hat(&theta, s, &f, &op);
                let fd = fd_phi_hat(&theta, s, &f, &op, 1e-6);
                let rel = (&exact - &fd).norm() / exact.norm().max(1e-12);
                assert!(rel < 1e-6, "s={s}, sigma={sigma}, rel={rel}");
            }
        }
    }

    #[test]
    fn td_delta_cases() {
        let mdp = generate_garnet(&GarnetSpec {
            n_states: 5,
            n_actions: 3,
            branching: 2,
            feature_dim: 4,
            gamma: 0.95,
            seed: 0,
        })
        .unwrap();
        let f = garnet_features();
        let op = SoftmaxOperator::default();
        let t = Transition {
            s: 1,
            a: 2,
            r: 0.0,
            s_next: 3,
        };
        assert_eq!(td_delta(&DVector::zeros(4), &t, 0.95, &f, &op), 0.0);

        let theta = random_theta(8, 4, 1.5);
        let t = Transition {
            s: 1,
            a: 2,
            r: 0.7,
            s_next: 3,
        };
        let no_bootstrap = td_delta(&theta, &t, 0.0, &f, &op);
        assert!((no_bootstrap - (0.7 - f.value(&theta, 1, 2))).abs() < 1e-15);

        let t = Transition {
            s: 4,
            a: 0,
            r: mdp.reward(4, 0, 2),
            s_next: 2,
        };
        let direct = t.r + 0.95 * v_bar_brute(&theta, 2, &f, 1.0)
            - f.row(4, 0).iter().zip(theta.iter()).map(|(x, y)| x * y).sum::<f64>();
        assert!((td_delta(&theta, &t, 0.95, &f, &op) - direct).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn policy_rows_are_distributions(
            theta in proptest::collection::vec(-5.0f64..5.0, 4),
            sigma_idx in 0usize..3,
        ) {
            let sigma = [0.5, 1.0, 5.0][sigma_idx];
            let f = garnet_features();
            let pi = improve_policy(&DVector::from_vec(theta), &f, &SoftmaxOperator::new(sigma).unwrap());
            for s in 0..5 {
                let row = pi.row(s);
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(row.iter().all(|p| *p > 0.0));
            }
        }

        #[test]
        fn phi_hat_is_gradient_of_v_bar(
            theta in proptest::collection::vec(-2.0f64..2.0, 4),
            s in 0usize..5,
        ) {
            let f = garnet_features();
            let op = SoftmaxOperator::default();
            let theta = DVector::from_vec(theta);
            let exact = phi_hat(&theta, s, &f, &op);
            let fd = fd_phi_hat(&theta, s, &f, &op, 1e-6);
            prop_assert!((&exact - &fd).norm() / exact.norm().max(1.0) < 1e-6);
        }

        #[test]
        fn softmax_is_sigma_lipschitz(
            base in proptest::collection::vec(-3.0f64..3.0, 4),
            dir in proptest::collection::vec(-1.0f64..1.0, 4),
            radius in 0.0f64..1.0,
            sigma_idx in 0usize..3,
        ) {
            let sigma = [0.5, 1.0, 5.0][sigma_idx];
            let op = SoftmaxOperator::new(sigma).unwrap();
            let f = garnet_features();
            let theta1 = DVector::from_vec(base);
            let dir = DVector::from_vec(dir);
            let step = if dir.norm() > 0.0 { dir.normalize() * radius } else { dir };
            let theta2 = &theta1 + &step;
            let p1 = improve_policy(&theta1, &f, &op);
            let p2 = improve_policy(&theta2, &f, &op);
            let gap = (0..5)
                .flat_map(|s| (0..3).map(move |a| (s, a)))
                .map(|(s, a)| (p1.prob(s, a) - p2.prob(s, a)).abs())
                .fold(0.0, f64::max);
            prop_assert!(gap <= sigma * step.norm() + 1e-15);
        }
    }
}
