//! Learning-free reference agents.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::env::sim::{Action, N_ACTIONS};
use crate::rng::Rng;

/// Probability that the forward-only agent stops on any given step.
pub const FORWARD_ONLY_STOP_PROB: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Uniform over all four actions.
    Random,
    /// Always forward, stopping with probability 1%.
    ForwardOnly,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::ForwardOnly => "forward_only",
        }
    }

    pub fn from_name(s: &str) -> Option<BaselineKind> {
        match s {
            "random" => Some(BaselineKind::Random),
            "forward_only" => Some(BaselineKind::ForwardOnly),
            _ => None,
        }
    }
}

pub fn baseline_act(kind: BaselineKind, rng: &mut Rng) -> Action {
    match kind {
        BaselineKind::Random => Action::from_index(rng.gen_range(0..N_ACTIONS)).expect("index in range"),
        BaselineKind::ForwardOnly => {
            if rng.gen::<f64>() < FORWARD_ONLY_STOP_PROB {
                Action::Stop
            } else {
                Action::GoForward
            }
        }
    }
}
