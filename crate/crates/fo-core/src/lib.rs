//! Core library: a small dense-network engine, a deterministic planar
//! manipulation world, DDPG with hindsight relabeling, object-locomotion
//! training, goal imagination, the follow-the-object curriculum, reference
//! baselines, and the experiment harness behind the `fo` CLI.

pub mod agent;
pub mod baselines;
pub mod curriculum;
pub mod envs;
pub mod error;
pub mod harness;
pub mod imaginer;
pub mod nn;
pub mod object_policy;
pub mod plot;
pub mod replay;
pub mod rng;
pub mod trainer;
pub mod vec3;
pub mod world;

pub use error::{Error, Result};
