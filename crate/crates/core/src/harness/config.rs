//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, RunConfig};
use crate::error::{Error, Result};
use crate::features::{generate_features, FeatureDistribution, SoftmaxOperator};
use crate::mdp::{build_frozen_lake, generate_garnet, GarnetSpec, PolicyTable};
use crate::objective::{build_context, ObjectiveContext};

/// Environment variable overriding `run.base_seed`.
pub const BASE_SEED_ENV: &str = "VRGQ_BASE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub theory: TheoryConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    Garnet {
        n_states: usize,
        n_actions: usize,
        branching: usize,
        feature_dim: usize,
        #[serde(default = "default_gamma")]
        gamma: f64,
        /// Seed of the MDP and its features.
        #[serde(default)]
        seed: u64,
        #[serde(default = "uniform_features")]
        features: FeatureDistribution,
    },
    FrozenLake {
        #[serde(default = "yes")]
        slippery: bool,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "lake_feature_dim")]
        feature_dim: usize,
        #[serde(default)]
        feature_seed: u64,
        #[serde(default = "gaussian_features")]
        features: FeatureDistribution,
    },
}

fn default_gamma() -> f64 {
    0.95
}
fn uniform_features() -> FeatureDistribution {
    FeatureDistribution::Uniform
}
fn gaussian_features() -> FeatureDistribution {
    FeatureDistribution::Gaussian
}
fn yes() -> bool {
    true
}
fn lake_feature_dim() -> usize {
    8
}

impl EnvironmentConfig {
    /// Short label used in error messages and metadata.
    pub fn label(&self) -> String {
        match self {
            EnvironmentConfig::Garnet {
                n_states,
                n_actions,
                branching,
                feature_dim,
                seed,
                ..
            } => {
                format!("garnet({n_states},{n_actions},{branching},{feature_dim}, seed={seed})")
            }
            EnvironmentConfig::FrozenLake {
                slippery, feature_seed, ..
            } => {
                format!("frozen_lake(slippery={slippery}, feature_seed={feature_seed})")
            }
        }
    }

    /// Environment, features and oracle under the uniform behavior policy.
    pub fn build(&self, op: SoftmaxOperator) -> Result<ObjectiveContext> {
        self.build_inner(op).map_err(|e| Error::Environment {
            env: self.label(),
            source: Box::new(e),
        })
    }

    fn build_inner(&self, op: SoftmaxOperator) -> Result<ObjectiveContext> {
        let (mdp, features) = match *self {
            EnvironmentConfig::Garnet {
                n_states,
                n_actions,
                branching,
                feature_dim,
                gamma,
                seed,
                features,
            } => {
                let mdp = generate_garnet(&GarnetSpec {
                    n_states,
                    n_actions,
                    branching,
                    feature_dim,
                    gamma,
                    seed,
                })?;
                let f = generate_features(n_states, n_actions, feature_dim, features, seed)?;
                (mdp, f)
            }
            EnvironmentConfig::FrozenLake {
                slippery,
                gamma,
                feature_dim,
                feature_seed,
                features,
            } => {
                let mdp = build_frozen_lake(slippery, gamma)?;
                let f = generate_features(mdp.n_states(), mdp.n_actions(), feature_dim, features, feature_seed)?;
                (mdp, f)
            }
        };
        let behavior = PolicyTable::uniform(mdp.n_states(), mdp.n_actions());
        build_context(&mdp, &features, op, &behavior)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    /// A single algorithm, or use `names` for several.
    #[serde(default)]
    pub name: Option<Algorithm>,
    #[serde(default)]
    pub names: Option<Vec<Algorithm>>,
    pub eta_theta: f64,
    pub eta_omega: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Markovian sample budget per run.
    #[serde(default = "default_samples")]
    pub total_samples: usize,
    /// Overrides the epoch count derived from `total_samples`.
    #[serde(default)]
    pub epochs: Option<usize>,
    /// Overrides the step count derived from `total_samples`.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub omega0: Option<Vec<f64>>,
    #[serde(default = "default_pg_episodes")]
    pub pg_episodes: usize,
    #[serde(default = "default_pg_horizon")]
    pub pg_horizon: usize,
    /// Assert the projection invariant after every update.
    #[serde(default)]
    pub check_projection: bool,
}

fn default_batch() -> usize {
    3000
}
fn default_samples() -> usize {
    10_000
}
fn default_radius() -> f64 {
    100.0
}
fn default_sigma() -> f64 {
    1.0
}
fn default_pg_episodes() -> usize {
    30
}
fn default_pg_horizon() -> usize {
    60
}

impl AlgorithmConfig {
    pub fn algorithms(&self) -> Result<Vec<Algorithm>> {
        let mut list = match (&self.name, &self.names) {
            (Some(a), None) => vec![*a],
            (None, Some(list)) if !list.is_empty() => list.clone(),
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either algorithm.name or algorithm.names, not both".into(),
                ))
            }
            _ => return Err(Error::Config("algorithm.name or algorithm.names is required".into())),
        };
        let n = list.len();
        list.sort();
        list.dedup();
        if list.len() != n {
            return Err(Error::Config("algorithm.names contains duplicates".into()));
        }
        Ok(list)
    }

    pub fn operator(&self) -> Result<SoftmaxOperator> {
        SoftmaxOperator::new(self.sigma).map_err(|e| Error::Config(e.to_string()))
    }

    /// Run configuration of `algorithm` for one seed.
    pub fn run_config(&self, algorithm: Algorithm, seed: u64, snapshot_cadence: usize) -> Result<RunConfig> {
        let per_pg_update = self.pg_episodes * self.pg_horizon;
        let (steps, epochs) = match algorithm {
            Algorithm::GreedyGq | Algorithm::ActorCritic => (self.steps.unwrap_or(self.total_samples), 1),
            Algorithm::VrGreedyGq => {
                let epochs = self.epochs.unwrap_or(self.total_samples / self.batch_size.max(1));
                (epochs * self.batch_size, epochs)
            }
            Algorithm::OffPolicyPg => (self.steps.unwrap_or(self.total_samples / per_pg_update.max(1)), 1),
        };
        if steps == 0 || epochs == 0 {
            return Err(Error::Config(format!(
                "{algorithm}: the sample budget {} is too small for a single update",
                self.total_samples
            )));
        }
        Ok(RunConfig {
            eta_theta: self.eta_theta,
            eta_omega: self.eta_omega,
            batch_size: self.batch_size,
            epochs,
            steps,
            radius: self.radius,
            seed,
            theta0: self.theta0.clone().map(DVector::from_vec),
            omega0: self.omega0.clone().map(DVector::from_vec),
            keep_iterates: false,
            snapshot_cadence,
            check_projection: self.check_projection,
            pg_episodes: self.pg_episodes,
            pg_horizon: self.pg_horizon,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Variance probe cadence in updates (0 disables).
    pub variance_probe_every: usize,
    pub variance_mc_samples: usize,
    /// Reward probe cadence in updates (0 disables).
    pub reward_probe_every: usize,
    pub reward_horizon: usize,
    pub asymptotic_tail: usize,
    pub snapshot_cadence: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            variance_probe_every: 0,
            variance_mc_samples: 500,
            reward_probe_every: 0,
            reward_horizon: 100,
            asymptotic_tail: 10_000,
            snapshot_cadence: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub n_seeds: usize,
    pub base_seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_seeds: 1,
            base_seed: 0,
            output_dir: None,
        }
    }
}

impl RunSection {
    /// Trajectory seed of run `index`.
    pub fn seed(&self, index: usize) -> u64 {
        self.base_seed ^ index as u64
    }
}

/// Inputs of the learning-rate validator that the environment cannot supply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryConfig {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l_smooth: f64,
    /// Policy Lipschitz constant; `sigma * n_actions` when unset.
    pub k1: Option<f64>,
    /// Projection radius used by the constants; `algorithm.radius` when unset.
    pub radius: Option<f64>,
    pub mixing_horizon: usize,
    pub grad_bound_samples: usize,
    pub grad_bound_seed: u64,
    /// Upper end of the threshold search.
    pub max_batch_size: usize,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            l1: 1.0,
            l2: 1.0,
            l3: 1.0,
            l_smooth: 1.0,
            k1: None,
            radius: None,
            mixing_horizon: 50,
            grad_bound_samples: crate::theory::GRAD_BOUND_SAMPLES,
            grad_bound_seed: 0,
            max_batch_size: 1 << 40,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.algorithm;
        a.algorithms()?;
        a.operator()?;
        if self.run.n_seeds == 0 {
            return Err(Error::Config("run.n_seeds must be at least 1".into()));
        }
        if a.batch_size == 0 || a.pg_episodes == 0 || a.pg_horizon == 0 {
            return Err(Error::Config(
                "batch_size, pg_episodes and pg_horizon must be at least 1".into(),
            ));
        }
        if !(a.eta_theta >= 0.0 && a.eta_omega >= 0.0) || !(a.radius > 0.0) {
            return Err(Error::Config(
                "learning rates must be nonnegative and the radius positive".into(),
            ));
        }
        let m = &self.metrics;
        if m.variance_mc_samples == 0 || m.reward_horizon == 0 || m.asymptotic_tail == 0 {
            return Err(Error::Config(
                "variance_mc_samples, reward_horizon and asymptotic_tail must be at least 1".into(),
            ));
        }
        if self.theory.mixing_horizon == 0 || self.theory.max_batch_size == 0 {
            return Err(Error::Config(
                "theory.mixing_horizon and theory.max_batch_size must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Apply the base-seed environment override, if set.
    pub fn apply_env_overrides(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(BASE_SEED_ENV) {
            self.run.base_seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{BASE_SEED_ENV} must be an unsigned integer, got '{v}'")))?;
        }
        Ok(())
    }

    /// Set one numeric parameter by name (used by sweeps).
    pub fn set_param(&mut self, param: &str, value: f64) -> Result<()> {
        let a = &mut self.algorithm;
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{param} must be a positive integer, got {v}")))
            }
        };
        match param {
            "batch_size" => a.batch_size = as_count(value)?,
            "total_samples" => a.total_samples = as_count(value)?,
            "epochs" => a.epochs = Some(as_count(value)?),
            "steps" => a.steps = Some(as_count(value)?),
            "eta_theta" => a.eta_theta = value,
            "eta_omega" => a.eta_omega = value,
            "radius" => a.radius = value,
            "sigma" => a.sigma = value,
            other => return Err(Error::Config(format!("unknown sweep parameter '{other}'"))),
        }
        self.validate()
    }
}
