//! The policy zoo: the scene-memory transformer with and without the scene
//! classifier, an LSTM agent, and a reactive agent. All four share the
//! modality encoders and the action/value heads; they differ only in how
//! much history shapes the step feature.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::{checkpoint, dist, AdamState, Linear, LstmCell, NodeId, ParameterSet, Tape};
use crate::encoders::{EncoderStack, D_MODEL};
use crate::env::sensor::Observation;
use crate::env::sim::{Action, N_ACTIONS};
use crate::error::{Error, Result};
use crate::policy::smt::{SceneMemory, SmtCore};
use crate::rng::{self, Rng};

pub const ATTENTION_HEADS: usize = 8;
pub const MODEL_FORMAT: &str = "objnav.model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Scene-memory transformer with the goal–scene joint representation.
    Smtsc,
    /// Same transformer, scene-classification path removed.
    SmtWoSc,
    /// Encoders feeding a single LSTM cell.
    Lstm,
    /// Encoders feeding the heads directly; no history at all.
    Reactive,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Smtsc, ModelKind::SmtWoSc, ModelKind::Lstm, ModelKind::Reactive];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Smtsc => "smtsc",
            ModelKind::SmtWoSc => "smt_wo_sc",
            ModelKind::Lstm => "lstm",
            ModelKind::Reactive => "reactive",
        }
    }

    pub fn from_name(s: &str) -> Option<ModelKind> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn uses_scene(self) -> bool {
        !matches!(self, ModelKind::SmtWoSc)
    }

    pub fn has_memory(self) -> bool {
        matches!(self, ModelKind::Smtsc | ModelKind::SmtWoSc)
    }
}

pub struct Model {
    kind: ModelKind,
    seg_k: usize,
    init_seed: u64,
    pub encoder: EncoderStack,
    smt: Option<SmtCore>,
    lstm: Option<LstmCell>,
    action_head: Linear,
    value_head: Linear,
}

/// Per-episode recurrent state carried between steps during rollout.
#[derive(Debug, Clone)]
pub enum PolicyState {
    Memory(SceneMemory),
    Lstm { h: Vec<f64>, c: Vec<f64> },
    Stateless,
}

impl PolicyState {
    pub fn memory(&self) -> Option<&SceneMemory> {
        match self {
            PolicyState::Memory(m) => Some(m),
            _ => None,
        }
    }
}

/// Everything the rollout buffer needs from one action selection.
#[derive(Debug, Clone)]
pub struct StepDecision {
    pub action: Action,
    pub log_prob: f64,
    pub value: f64,
    pub logits: [f64; N_ACTIONS],
    pub phi: Vec<f64>,
}

impl Model {
    pub fn new(ps: &mut ParameterSet, kind: ModelKind, seg_k: usize, init_seed: u64) -> Result<Model> {
        let mut r = rng::stream(init_seed, "model-init", 0);
        let encoder = EncoderStack::new(ps, "enc", seg_k, kind.uses_scene(), &mut r)?;
        let smt = if kind.has_memory() {
            Some(SmtCore::new(ps, "smt", D_MODEL, ATTENTION_HEADS, &mut r)?)
        } else {
            None
        };
        let lstm = if kind == ModelKind::Lstm {
            Some(LstmCell::new(ps, "lstm", D_MODEL, D_MODEL, &mut r)?)
        } else {
            None
        };
        let action_head = Linear::new(ps, "head.action", D_MODEL, N_ACTIONS, &mut r)?;
        let value_head = Linear::new(ps, "head.value", D_MODEL, 1, &mut r)?;
        Ok(Model { kind, seg_k, init_seed, encoder, smt, lstm, action_head, value_head })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn seg_k(&self) -> usize {
        self.seg_k
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn initial_state(&self) -> PolicyState {
        match self.kind {
            ModelKind::Smtsc | ModelKind::SmtWoSc => PolicyState::Memory(SceneMemory::new(D_MODEL)),
            ModelKind::Lstm => PolicyState::Lstm { h: vec![0.0; D_MODEL], c: vec![0.0; D_MODEL] },
            ModelKind::Reactive => PolicyState::Stateless,
        }
    }

    /// Step embedding, shared by rollout and training graphs.
    pub fn phi(&self, t: &mut Tape, ps: &ParameterSet, obs: &Observation) -> Result<NodeId> {
        self.encoder.embed(t, ps, obs)
    }

    /// Transformer read of an M×256 memory whose last row is the current
    /// step; `query` must be that row's node.
    pub fn smt_feature(&self, t: &mut Tape, ps: &ParameterSet, memory: NodeId, query: NodeId) -> Result<NodeId> {
        let smt = self.smt.as_ref().ok_or_else(|| Error::Contract(format!("{} has no memory core", self.kind.name())))?;
        smt.forward(t, ps, memory, query)
    }

    pub fn lstm_step(
        &self,
        t: &mut Tape,
        ps: &ParameterSet,
        phi: NodeId,
        h: NodeId,
        c: NodeId,
    ) -> Result<(NodeId, NodeId)> {
        let lstm = self.lstm.as_ref().ok_or_else(|| Error::Contract(format!("{} has no recurrent cell", self.kind.name())))?;
        lstm.forward(t, ps, phi, h, c)
    }

    /// Action logits (1×4) and value (1×1) from a 1×256 step feature.
    pub fn heads(&self, t: &mut Tape, ps: &ParameterSet, feature: NodeId) -> Result<(NodeId, NodeId)> {
        let logits = self.action_head.forward(t, ps, feature)?;
        let value = self.value_head.forward(t, ps, feature)?;
        Ok((logits, value))
    }

    /// One rollout step on a no-grad tape. Memory models append the step
    /// embedding before attending, so the current step is always part of
    /// what the policy reads. Pass a generator to sample; `None` is greedy.
    pub fn act(
        &self,
        ps: &ParameterSet,
        state: &mut PolicyState,
        obs: &Observation,
        sample: Option<&mut Rng>,
    ) -> Result<StepDecision> {
        let mut t = Tape::no_grad();
        let phi = self.phi(&mut t, ps, obs)?;
        let phi_row = t.value(phi).to_vec();
        let feature = match (self.kind, &mut *state) {
            (ModelKind::Smtsc | ModelKind::SmtWoSc, PolicyState::Memory(mem)) => {
                mem.push(phi_row.clone())?;
                let m = mem.to_node(&mut t)?;
                self.smt_feature(&mut t, ps, m, phi)?
            }
            (ModelKind::Lstm, PolicyState::Lstm { h, c }) => {
                let hn = t.constant(1, D_MODEL, h.clone())?;
                let cn = t.constant(1, D_MODEL, c.clone())?;
                let (h2, c2) = self.lstm_step(&mut t, ps, phi, hn, cn)?;
                *h = t.value(h2).to_vec();
                *c = t.value(c2).to_vec();
                h2
            }
            (ModelKind::Reactive, PolicyState::Stateless) => phi,
            _ => return Err(Error::Contract(format!("policy state does not match a {} model", self.kind.name()))),
        };
        let (logits_node, value_node) = self.heads(&mut t, ps, feature)?;
        let lv = t.value(logits_node);
        let mut logits = [0.0; N_ACTIONS];
        logits.copy_from_slice(lv);
        let value = t.value(value_node)[0];
        let (index, log_prob) = match sample {
            Some(r) => {
                let s = dist::categorical_sample(&logits, r);
                (s.index, s.log_prob)
            }
            None => {
                let i = dist::categorical_greedy(&logits);
                (i, dist::log_prob(&logits, i))
            }
        };
        let action = Action::from_index(index).ok_or_else(|| Error::Contract(format!("sampled action index {index}")))?;
        Ok(StepDecision { action, log_prob, value, logits, phi: phi_row })
    }
}

/// Sidecar metadata stored next to the weight file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub seg_k: usize,
    pub init_seed: u64,
    pub parameters: usize,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

/// Write `{base}.ckpt` (weights, plus optimizer state when given) and
/// `{base}.json`.
pub fn save_model(
    base: &Path,
    model: &Model,
    ps: &ParameterSet,
    adam: Option<&AdamState>,
    extra: serde_json::Map<String, serde_json::Value>,
) -> Result<()> {
    let mut tensors = checkpoint::params_to_tensors(ps);
    if let Some(a) = adam {
        tensors.extend(a.to_tensors(ps));
    }
    checkpoint::save_file(&base.with_extension("ckpt"), &tensors)?;
    let manifest = ModelManifest {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_FORMAT_VERSION,
        kind: model.kind(),
        seg_k: model.seg_k(),
        init_seed: model.init_seed(),
        parameters: ps.total_numel(),
        extra,
    };
    std::fs::write(base.with_extension("json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Rebuild a model and its weights from `{base}.ckpt` + `{base}.json`.
/// Returns the optimizer state as well when the checkpoint carries one.
pub fn load_model(base: &Path) -> Result<(Model, ParameterSet, Option<AdamState>, ModelManifest)> {
    let manifest_text = std::fs::read_to_string(base.with_extension("json"))?;
    let manifest: ModelManifest = serde_json::from_str(&manifest_text)?;
    if manifest.format != MODEL_FORMAT {
        return Err(Error::Data(format!("not a model manifest: format {:?}", manifest.format)));
    }
    if manifest.version != MODEL_FORMAT_VERSION {
        return Err(Error::Data(format!("unsupported model manifest version {}", manifest.version)));
    }
    let mut ps = ParameterSet::new();
    let model = Model::new(&mut ps, manifest.kind, manifest.seg_k, manifest.init_seed)?;
    let tensors = checkpoint::load_file(&base.with_extension("ckpt"))?;
    checkpoint::apply_to_params(&mut ps, &tensors)?;
    let adam = if tensors.iter().any(|(n, _)| n == "adam.t") {
        Some(AdamState::from_tensors(&ps, &tensors)?)
    } else {
        None
    };
    Ok((model, ps, adam, manifest))
}
