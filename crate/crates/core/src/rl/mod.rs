//! On-policy reinforcement learning: rollouts, advantage estimation and the
//! PPO trainer.

pub mod gae;
pub mod ppo;
pub mod rollout;

pub use gae::gae;
pub use ppo::{PpoConfig, Trainer, UpdateStats};
pub use rollout::{collect_rollout, RolloutBuffer, StepRecord};
