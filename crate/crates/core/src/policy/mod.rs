//! Navigation policies: the scene-memory transformer family, an LSTM agent,
//! a reactive agent, and the learning-free baselines.

pub mod baselines;
pub mod model;
pub mod smt;

pub use baselines::{baseline_act, BaselineKind};
pub use model::{load_model, save_model, Model, ModelKind, ModelManifest, PolicyState, StepDecision};
pub use smt::{SceneMemory, SmtCore, TransformerBlock};
