//! Finite tabular MDPs, the synthetic environments used in the experiments,
//! the behavior-chain stationary distribution, Markovian trajectory sampling
//! and a geometric-mixing diagnostic.

use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

const ROW_SUM_TOL: f64 = 1e-12;

/// Step tolerance (L1) of the power iteration.
pub const POWER_ITERATION_TOL: f64 = 1e-12;
/// Required fixed-point residual `||mu P - mu||_1` of the power iteration.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;
pub const POWER_ITERATION_CAP: usize = 1_000_000;
/// Distances at or below this floor are excluded from the mixing fit.
pub const MIXING_FIT_FLOOR: f64 = 1e-12;

/// Format version written into environment dumps.
pub const DUMP_VERSION: u32 = 1;

/// A finite MDP with kernel `P[s][a][s']` and reward `r[s][a][s']`, both
/// stored row-major in flat vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    kernel: Vec<f64>,
    reward: Vec<f64>,
    gamma: f64,
    r_max: f64,
    /// Distribution of the first state of an episode, used by episodic
    /// baselines and as a fallback start for reward probes.
    initial: Vec<f64>,
}

impl Mdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        kernel: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
        r_max: f64,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Parameter(
                "an MDP needs at least one state and one action".into(),
            ));
        }
        let len = n_states * n_actions * n_states;
        if kernel.len() != len || reward.len() != len {
            return Err(Error::Parameter(format!(
                "kernel and reward must have {len} entries, got {} and {}",
                kernel.len(),
                reward.len()
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Parameter(format!("gamma must lie in (0,1), got {gamma}")));
        }
        if !(r_max >= 0.0) {
            return Err(Error::Parameter(format!("r_max must be nonnegative, got {r_max}")));
        }
        for (row_idx, row) in kernel.chunks(n_states).enumerate() {
            check_distribution(row).map_err(|msg| {
                Error::Parameter(format!(
                    "kernel row (s={}, a={}) {msg}",
                    row_idx / n_actions,
                    row_idx % n_actions
                ))
            })?;
        }
        if let Some(r) = reward.iter().find(|r| !(r.abs() <= r_max)) {
            return Err(Error::Parameter(format!("reward {r} exceeds r_max {r_max}")));
        }
        if initial.len() != n_states {
            return Err(Error::Parameter("initial distribution has the wrong length".into()));
        }
        check_distribution(&initial).map_err(|msg| Error::Parameter(format!("initial distribution {msg}")))?;
        Ok(Self {
            n_states,
            n_actions,
            kernel,
            reward,
            gamma,
            r_max,
            initial,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// `P(. | s, a)`.
    pub fn kernel_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.kernel[start..start + self.n_states]
    }

    pub fn reward_row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.reward[start..start + self.n_states]
    }

    pub fn prob(&self, s: usize, a: usize, s_next: usize) -> f64 {
        self.kernel_row(s, a)[s_next]
    }

    pub fn reward(&self, s: usize, a: usize, s_next: usize) -> f64 {
        self.reward_row(s, a)[s_next]
    }

    /// A copy of this MDP with a different discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut out = self.clone();
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Parameter(format!("gamma must lie in (0,1), got {gamma}")));
        }
        out.gamma = gamma;
        Ok(out)
    }

    /// A copy with every reward multiplied by `factor`.
    pub fn with_scaled_rewards(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.reward.iter_mut().for_each(|r| *r *= factor);
        out.r_max *= factor.abs();
        out
    }

    /// State chain induced by `policy`: `P_pi[s][s'] = sum_a pi(a|s) P[s][a][s']`.
    pub fn state_chain(&self, policy: &PolicyTable) -> Result<Vec<f64>> {
        self.check_policy(policy)?;
        let n = self.n_states;
        let mut chain = vec![0.0; n * n];
        for s in 0..n {
            for a in 0..self.n_actions {
                let w = policy.prob(s, a);
                if w == 0.0 {
                    continue;
                }
                for (dst, p) in chain[s * n..(s + 1) * n].iter_mut().zip(self.kernel_row(s, a)) {
                    *dst += w * p;
                }
            }
        }
        Ok(chain)
    }

    pub fn check_policy(&self, policy: &PolicyTable) -> Result<()> {
        if policy.n_states() != self.n_states || policy.n_actions() != self.n_actions {
            return Err(Error::Parameter(format!(
                "policy is {}x{}, MDP is {}x{}",
                policy.n_states(),
                policy.n_actions(),
                self.n_states,
                self.n_actions
            )));
        }
        Ok(())
    }

    /// Versioned JSON dump. Floats are written in shortest round-trip form
    /// and parsed with correct rounding, so `from_dump(to_dump(m)) == m`
    /// bit for bit.
    pub fn to_dump(&self) -> Result<String> {
        Ok(serde_json::to_string(&Dump {
            version: DUMP_VERSION,
            mdp: self,
        })?)
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct OwnedDump {
            version: u32,
            mdp: Mdp,
        }
        let dump: OwnedDump = serde_json::from_str(text)?;
        if dump.version != DUMP_VERSION {
            return Err(Error::Parameter(format!(
                "unsupported environment dump version {}",
                dump.version
            )));
        }
        let m = dump.mdp;
        Mdp::new(m.n_states, m.n_actions, m.kernel, m.reward, m.gamma, m.r_max, m.initial)
    }
}

#[derive(Serialize)]
struct Dump<'a> {
    version: u32,
    mdp: &'a Mdp,
}

fn check_distribution(row: &[f64]) -> std::result::Result<(), String> {
    if row.iter().any(|p| !(*p >= 0.0)) {
        return Err("has a negative or non-finite entry".into());
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(format!("sums to {sum}, not 1"));
    }
    Ok(())
}

/// A stationary stochastic policy `pi[s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl PolicyTable {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions || n_actions == 0 {
            return Err(Error::Parameter("policy table has the wrong shape".into()));
        }
        for (s, row) in probs.chunks(n_actions).enumerate() {
            check_distribution(row).map_err(|msg| Error::Parameter(format!("policy row s={s} {msg}")))?;
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        Self {
            n_states,
            n_actions,
            probs: vec![p; n_states * n_actions],
        }
    }

    /// Skips validation; callers guarantee rows are distributions.
    pub(crate) fn from_rows_unchecked(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Self {
        Self {
            n_states,
            n_actions,
            probs,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }
}

/// One Markovian sample `(s, a, r, s')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
}

/// Stationary distribution of the behavior-induced chain, over states and
/// over state-action pairs (indexed `s * n_actions + a`).
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub state_dist: Vec<f64>,
    pub state_action_dist: Vec<f64>,
}

impl StationaryDistribution {
    pub fn state_action(&self, s: usize, a: usize, n_actions: usize) -> f64 {
        self.state_action_dist[s * n_actions + a]
    }
}

/// Parameters of a random Garnet MDP `G(n_states, n_actions, branching, d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarnetSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: usize,
    pub feature_dim: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl GarnetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 || self.feature_dim == 0 {
            return Err(Error::Parameter("Garnet sizes must be positive".into()));
        }
        if self.branching == 0 || self.branching > self.n_states {
            return Err(Error::Parameter(format!(
                "branching factor {} must lie in [1, {}]",
                self.branching, self.n_states
            )));
        }
        Ok(())
    }
}

/// Random Garnet MDP.
///
/// For every `(s, a)`, `branching` distinct successors are drawn uniformly
/// without replacement and receive stick-breaking probabilities from sorted
/// uniforms; every other successor has probability zero. Rewards are
/// Uniform[0,1] per `(s, a, s')`, so `r_max = 1`.
pub fn generate_garnet(spec: &GarnetSpec) -> Result<Mdp> {
    spec.validate()?;
    let n = spec.n_states;
    let b = spec.branching;
    let mut rng = rng::seeded(spec.seed, rng::stream::ENVIRONMENT);
    let mut kernel = vec![0.0; n * spec.n_actions * n];
    for row in kernel.chunks_mut(n) {
        let successors = index::sample(&mut rng, n, b);
        let probs = stick_breaking(&mut rng, b);
        for (succ, p) in successors.iter().zip(probs) {
            row[succ] = p;
        }
    }
    let unit = Uniform::new_inclusive(0.0, 1.0);
    let reward: Vec<f64> = (0..kernel.len()).map(|_| unit.sample(&mut rng)).collect();
    Mdp::new(
        n,
        spec.n_actions,
        kernel,
        reward,
        spec.gamma,
        1.0,
        vec![1.0 / n as f64; n],
    )
}

/// `k` strictly positive weights summing to one: gaps between sorted
/// Uniform(0,1) cut points of the unit interval.
fn stick_breaking(rng: &mut Rng, k: usize) -> Vec<f64> {
    loop {
        let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.gen::<f64>()).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.push(1.0);
        let mut prev = 0.0;
        let gaps: Vec<f64> = cuts
            .iter()
            .map(|&c| {
                let g = c - prev;
                prev = c;
                g
            })
            .collect();
        if gaps.iter().all(|&g| g > 0.0) {
            return gaps;
        }
    }
}

/// 4x4 Frozen Lake map, row-major from the top-left start cell.
pub const FROZEN_LAKE_MAP: [&str; 4] = ["SFFF", "FHFH", "FFFH", "HFFG"];
pub const FROZEN_LAKE_START: usize = 0;
pub const FROZEN_LAKE_GOAL: usize = 15;

/// Frozen Lake action indices.
pub mod lake_action {
    pub const LEFT: usize = 0;
    pub const DOWN: usize = 1;
    pub const RIGHT: usize = 2;
    pub const UP: usize = 3;
}

pub fn frozen_lake_is_terminal(s: usize) -> bool {
    let row = FROZEN_LAKE_MAP[s / 4].as_bytes();
    matches!(row[s % 4], b'H' | b'G')
}

fn lake_step(s: usize, action: usize) -> usize {
    let (row, col) = (s / 4, s % 4);
    let (row, col) = match action {
        lake_action::LEFT => (row, col.saturating_sub(1)),
        lake_action::DOWN => ((row + 1).min(3), col),
        lake_action::RIGHT => (row, (col + 1).min(3)),
        _ => (row.saturating_sub(1), col),
    };
    row * 4 + col
}

/// The 16-state, 4-action Frozen Lake grid as a continuing MDP.
///
/// Moving into a wall leaves the agent in place. When `slippery`, the
/// intended move and each of its two perpendicular moves happen with
/// probability 1/3. Entering the goal pays 1; every other transition pays 0.
/// Holes and the goal send every action back to the start cell.
pub fn build_frozen_lake(slippery: bool, gamma: f64) -> Result<Mdp> {
    const N: usize = 16;
    const A: usize = 4;
    let mut kernel = vec![0.0; N * A * N];
    let mut reward = vec![0.0; N * A * N];
    for s in 0..N {
        for a in 0..A {
            let row = &mut kernel[(s * A + a) * N..(s * A + a + 1) * N];
            if frozen_lake_is_terminal(s) {
                row[FROZEN_LAKE_START] = 1.0;
                continue;
            }
            if slippery {
                for m in [(a + 3) % 4, a, (a + 1) % 4] {
                    row[lake_step(s, m)] += 1.0 / 3.0;
                }
            } else {
                row[lake_step(s, a)] = 1.0;
            }
            reward[(s * A + a) * N + FROZEN_LAKE_GOAL] = 1.0;
        }
    }
    let mut initial = vec![0.0; N];
    initial[FROZEN_LAKE_START] = 1.0;
    Mdp::new(N, A, kernel, reward, gamma, 1.0, initial)
}

/// Stationary distribution of the chain induced by `behavior`, by power
/// iteration.
pub fn stationary_distribution(mdp: &Mdp, behavior: &PolicyTable) -> Result<StationaryDistribution> {
    let chain = mdp.state_chain(behavior)?;
    let state_dist = chain_stationary(&chain, mdp.n_states())?;
    let n_actions = mdp.n_actions();
    let mut state_action_dist = vec![0.0; mdp.n_states() * n_actions];
    for (s, mu) in state_dist.iter().enumerate() {
        for a in 0..n_actions {
            state_action_dist[s * n_actions + a] = mu * behavior.prob(s, a);
        }
    }
    Ok(StationaryDistribution {
        state_dist,
        state_action_dist,
    })
}

/// Power iteration on a row-stochastic `n x n` matrix. The start vector is
/// deliberately non-uniform so that periodic chains with a uniform
/// stationary law still fail to converge.
pub(crate) fn chain_stationary(chain: &[f64], n: usize) -> Result<Vec<f64>> {
    let norm = (n * (n + 1)) as f64 / 2.0;
    let mut mu: Vec<f64> = (0..n).map(|i| (i + 1) as f64 / norm).collect();
    let mut next = vec![0.0; n];
    let mut converged = false;
    for _ in 0..POWER_ITERATION_CAP {
        left_multiply(&mu, chain, &mut next);
        let step: f64 = mu.iter().zip(&next).map(|(x, y)| (x - y).abs()).sum();
        std::mem::swap(&mut mu, &mut next);
        if step < POWER_ITERATION_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Ergodicity(format!(
            "power iteration did not converge within {POWER_ITERATION_CAP} steps \
             (chain may be periodic or reducible)"
        )));
    }
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|x| *x /= total);
    left_multiply(&mu, chain, &mut next);
    let residual: f64 = mu.iter().zip(&next).map(|(x, y)| (x - y).abs()).sum();
    if residual >= STATIONARY_RESIDUAL_TOL {
        return Err(Error::Ergodicity(format!(
            "fixed-point residual {residual:e} too large"
        )));
    }
    Ok(mu)
}

fn left_multiply(mu: &[f64], chain: &[f64], out: &mut [f64]) {
    let n = mu.len();
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, &w) in mu.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(&chain[i * n..(i + 1) * n]) {
            *o += w * p;
        }
    }
}

/// Where a sampled trajectory begins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    State(usize),
    /// Draw `s_0` from the behavior chain's stationary distribution.
    Stationary,
}

/// Streaming Markovian sampler following a fixed policy.
#[derive(Debug, Clone)]
pub struct MarkovSampler<'a> {
    mdp: &'a Mdp,
    actions: Vec<WeightedIndex<f64>>,
    successors: Vec<WeightedIndex<f64>>,
    state: usize,
    rng: Rng,
}

impl<'a> MarkovSampler<'a> {
    /// Sampler whose first state is `start`, using `rng` for every draw.
    pub fn new(mdp: &'a Mdp, policy: &PolicyTable, start: usize, rng: Rng) -> Result<Self> {
        mdp.check_policy(policy)?;
        if start >= mdp.n_states() {
            return Err(Error::Parameter(format!("start state {start} out of range")));
        }
        let actions = (0..mdp.n_states())
            .map(|s| weighted(policy.row(s)))
            .collect::<Result<Vec<_>>>()?;
        let successors = (0..mdp.n_states())
            .flat_map(|s| (0..mdp.n_actions()).map(move |a| (s, a)))
            .map(|(s, a)| weighted(mdp.kernel_row(s, a)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mdp,
            actions,
            successors,
            state: start,
            rng,
        })
    }

    /// Sampler started from a draw of `dist` (made with the same `rng`).
    pub fn from_distribution(mdp: &'a Mdp, policy: &PolicyTable, dist: &[f64], mut rng: Rng) -> Result<Self> {
        let start = weighted(dist)?.sample(&mut rng);
        Self::new(mdp, policy, start, rng)
    }

    pub fn state(&self) -> usize {
        self.state
    }

    /// Jump to `s` without emitting a transition.
    pub fn reset_to(&mut self, s: usize) {
        self.state = s;
    }

    pub fn rng_mut(&mut self) -> &mut Rng {
        &mut self.rng
    }

    pub fn into_rng(self) -> Rng {
        self.rng
    }

    pub fn next_transition(&mut self) -> Transition {
        let s = self.state;
        let a = self.actions[s].sample(&mut self.rng);
        let s_next = self.successors[s * self.mdp.n_actions() + a].sample(&mut self.rng);
        self.state = s_next;
        Transition {
            s,
            a,
            r: self.mdp.reward(s, a, s_next),
            s_next,
        }
    }

    pub fn take_batch(&mut self, len: usize) -> Vec<Transition> {
        (0..len).map(|_| self.next_transition()).collect()
    }
}

pub(crate) fn weighted(probs: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs.iter().copied()).map_err(|e| Error::Parameter(format!("invalid sampling weights: {e}")))
}

/// A Markovian trajectory of `length` transitions under `behavior`.
pub fn sample_trajectory(
    mdp: &Mdp,
    behavior: &PolicyTable,
    length: usize,
    seed: u64,
    start: Start,
) -> Result<Vec<Transition>> {
    if length == 0 {
        return Err(Error::Parameter("trajectory length must be at least 1".into()));
    }
    let rng = rng::seeded(seed, rng::stream::TRAJECTORY);
    let mut sampler = match start {
        Start::State(s) => MarkovSampler::new(mdp, behavior, s, rng)?,
        Start::Stationary => {
            let mu = stationary_distribution(mdp, behavior)?;
            MarkovSampler::from_distribution(mdp, behavior, &mu.state_dist, rng)?
        }
    };
    Ok(sampler.take_batch(length))
}

/// Fitted geometric ergodicity constants `D(t) ~ lambda * rho^t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingEstimate {
    pub lambda_hat: f64,
    pub rho_hat: f64,
    /// `D(t)` for `t = 1..=horizon`.
    pub distances: Vec<f64>,
}

/// Worst-case total-variation distance to stationarity `D(t)` for
/// `t = 1..=horizon`, with a least-squares fit of `log D(t)` on `t`.
///
/// `P^t - 1 mu^T` is formed as `(P - 1 mu^T)^t`, which keeps the error of
/// tiny distances relative rather than absolute.
pub fn estimate_mixing(mdp: &Mdp, behavior: &PolicyTable, horizon: usize) -> Result<MixingEstimate> {
    if horizon == 0 {
        return Err(Error::Parameter("mixing horizon must be at least 1".into()));
    }
    let chain = mdp.state_chain(behavior)?;
    let n = mdp.n_states();
    let mu = chain_stationary(&chain, n)?;
    let deviation: Vec<f64> = chain
        .chunks(n)
        .flat_map(|row| row.iter().zip(&mu).map(|(p, m)| p - m))
        .collect();
    let mut power = deviation.clone();
    let mut distances = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let d = power
            .chunks(n)
            .map(|row| 0.5 * row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        distances.push(d);
        if t < horizon {
            power = mat_mul(&power, &deviation, n);
        }
    }
    let (lambda_hat, rho_hat) = fit_geometric(&distances)?;
    Ok(MixingEstimate {
        lambda_hat,
        rho_hat,
        distances,
    })
}

fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            if x == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += x * b[k * n + j];
            }
        }
    }
    out
}

fn fit_geometric(distances: &[f64]) -> Result<(f64, f64)> {
    let points: Vec<(f64, f64)> = distances
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > MIXING_FIT_FLOOR)
        .map(|(i, d)| ((i + 1) as f64, d.ln()))
        .collect();
    match points.len() {
        0 => return Ok((0.0, 0.0)),
        // One usable point: D(1) = lambda * rho with lambda = 1.
        1 if points[0].0 == 1.0 => {
            let rho = points[0].1.exp();
            return if rho < 1.0 {
                Ok((1.0, rho))
            } else {
                Err(Error::Ergodicity(format!("D(1) = {rho} does not decay")))
            };
        }
        _ => {}
    }
    let n = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(t, y)| (t - t_mean) * (y - y_mean)).sum();
    let sxx: f64 = points.iter().map(|(t, _)| (t - t_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Ergodicity("distance profile too short to fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let rho = slope.exp();
    if !(rho < 1.0) {
        return Err(Error::Ergodicity(format!(
            "distance to stationarity does not decay (fitted rate {rho})"
        )));
    }
    Ok((intercept.exp(), rho))
}
