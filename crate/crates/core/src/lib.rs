//! Greedy-GQ and variance-reduced Greedy-GQ for off-policy control with
//! linear features and Markovian sampling.
//!
//! The crate is layered bottom-up:
//!
//! * [`mdp`]: tabular MDPs, Garnet and Frozen Lake generators, the
//!   behavior-chain stationary distribution, trajectory sampling and a
//!   mixing-rate diagnostic.
//! * [`features`]: linear features, the softmax improvement operator and
//!   the per-sample quantities `V̄`, `φ̂`, `δ`.
//! * [`objective`]: exact MSPBE, its gradient and the auxiliary fixed point
//!   `ω*(θ)`, computed by enumeration over the known model.
//! * [`algorithms`]: the stochastic updates, Greedy-GQ, VR-Greedy-GQ and the
//!   two policy-gradient baselines.
//! * [`theory`]: constants and learning-rate feasibility conditions behind
//!   the finite-time convergence bound.
//! * [`harness`]: configuration, experiment protocols, probes, aggregation
//!   and CSV output used by the `vrgq` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod error;
pub mod features;
pub mod harness;
pub mod mdp;
pub mod objective;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
