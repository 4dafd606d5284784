//! Desk-scale ObjectGoal-navigation laboratory.
//!
//! Everything needed to reproduce the pipeline end to end on one machine:
//! procedurally generated multi-room houses, a deterministic POMDP simulator
//! with synthetic feature sensors, a scene-memory-transformer policy with a
//! goal-scene joint representation, PPO training on a from-scratch
//! reverse-mode autodiff core, episode-dataset generation, and
//! Success/SPL/DTS evaluation.

pub mod autodiff;
pub mod cli;
pub mod encoders;
pub mod env;
pub mod episodes;
pub mod error;
pub mod policy;
pub mod rl;
pub mod rng;

pub use error::{Error, Result};
