#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DVector;
use rand::Rng as _;
use rand_distr::StandardNormal;

use vrgq_core::features::{generate_features, FeatureDistribution, SoftmaxOperator};
use vrgq_core::mdp::{generate_garnet, GarnetSpec, PolicyTable};
use vrgq_core::objective::{build_context, ObjectiveContext};
use vrgq_core::rng;

/// Garnet(5, 3, 2, 4), gamma 0.95, uniform features, uniform behavior.
pub fn garnet_context(seed: u64) -> ObjectiveContext {
    let mdp = generate_garnet(&GarnetSpec {
        n_states: 5,
        n_actions: 3,
        branching: 2,
        feature_dim: 4,
        gamma: 0.95,
        seed,
    })
    .unwrap();
    let features = generate_features(5, 3, 4, FeatureDistribution::Uniform, seed).unwrap();
    build_context(&mdp, &features, SoftmaxOperator::default(), &PolicyTable::uniform(5, 3)).unwrap()
}

/// `count` points drawn uniformly from the ball of radius `radius`.
pub fn points_in_ball(count: usize, dim: usize, radius: f64, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = rng::seeded(seed, 1000);
    (0..count)
        .map(|_| {
            let dir = DVector::<f64>::from_fn(dim, |_, _| rng.sample(StandardNormal));
            let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
            dir.normalize() * r
        })
        .collect()
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}
