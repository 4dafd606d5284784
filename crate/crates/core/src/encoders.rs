//! Modality encoders and the goal–scene fusion.
//!
//! Each observation is folded into a single 256-wide memory embedding: the
//! segmentation patch, pose and previous action go through their own small
//! encoders, while the goal embedding is joined with the scene-classification
//! feature so the policy carries "what am I looking for" and "what kind of
//! room am I in" as one signal. The scene path can be switched off, in which
//! case the goal embedding is projected up on its own.

use crate::autodiff::{Embedding, Linear, NodeId, ParameterSet, Tape};
use crate::env::house::N_ROOM_TYPES;
use crate::env::sensor::{Observation, SEG_CHANNELS};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Width of the per-step memory embedding and of the transformer stream.
pub const D_MODEL: usize = 256;
/// Width of the scene-classification feature.
pub const D_SCENE: usize = 128;
/// Width of the goal and previous-action embeddings, and the pose feature.
pub const D_EMBED: usize = 32;
/// Width of the joint goal–scene representation.
pub const D_JOINT: usize = 128;
/// Goal vocabulary: the five object classes.
pub const N_GOALS: usize = crate::env::house::N_CLASSES;
/// Previous-action vocabulary: four actions plus "none yet".
pub const N_PREV_ACTIONS: usize = crate::env::sim::N_ACTIONS + 1;

pub struct EncoderStack {
    seg: Linear,
    scene: Option<Linear>,
    goal: Embedding,
    pos: Linear,
    act: Embedding,
    /// Goal–scene joint 160→128, or the goal-only projection 32→128 when the
    /// scene path is disabled.
    joint: Linear,
    fuse: Linear,
    k: usize,
}

impl EncoderStack {
    pub fn new(ps: &mut ParameterSet, prefix: &str, k: usize, use_scene: bool, rng: &mut Rng) -> Result<EncoderStack> {
        let seg = Linear::new(ps, &format!("{prefix}.seg"), k * k * SEG_CHANNELS, D_MODEL, rng)?;
        let scene = if use_scene {
            Some(Linear::new(ps, &format!("{prefix}.scene"), N_ROOM_TYPES, D_SCENE, rng)?)
        } else {
            None
        };
        let goal = Embedding::new(ps, &format!("{prefix}.goal"), N_GOALS, D_EMBED, rng)?;
        let pos = Linear::new(ps, &format!("{prefix}.pos"), 4, D_EMBED, rng)?;
        let act = Embedding::new(ps, &format!("{prefix}.act"), N_PREV_ACTIONS, D_EMBED, rng)?;
        let joint_in = if use_scene { D_EMBED + D_SCENE } else { D_EMBED };
        let joint = Linear::new(ps, &format!("{prefix}.joint"), joint_in, D_JOINT, rng)?;
        let fuse = Linear::new(ps, &format!("{prefix}.fuse"), D_MODEL + D_EMBED + D_EMBED + D_JOINT, D_MODEL, rng)?;
        Ok(EncoderStack { seg, scene, goal, pos, act, joint, fuse, k })
    }

    pub fn uses_scene(&self) -> bool {
        self.scene.is_some()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The joint goal–scene representation, 1×128.
    pub fn joint_goal_scene(&self, t: &mut Tape, ps: &ParameterSet, obs: &Observation) -> Result<NodeId> {
        let g = self.goal.forward(t, ps, obs.goal)?;
        match &self.scene {
            Some(scene) => {
                let sv = t.constant(1, N_ROOM_TYPES, obs.scene_vec.to_vec())?;
                let sc = scene.forward(t, ps, sv)?;
                let sc = t.relu(sc);
                let gs = t.concat_cols(&[g, sc])?;
                self.joint.forward(t, ps, gs)
            }
            None => self.joint.forward(t, ps, g),
        }
    }

    /// One observation in, one 1×256 memory embedding out.
    pub fn embed(&self, t: &mut Tape, ps: &ParameterSet, obs: &Observation) -> Result<NodeId> {
        if obs.k != self.k {
            return Err(Error::Dim(format!("observation patch {}, encoder expects {}", obs.k, self.k)));
        }
        let seg_in = t.constant(1, self.k * self.k * SEG_CHANNELS, obs.seg_grid.clone())?;
        let s = self.seg.forward(t, ps, seg_in)?;
        let s = t.relu(s);
        let pose = t.constant(1, 4, obs.pose.to_vec())?;
        let p = self.pos.forward(t, ps, pose)?;
        let p = t.relu(p);
        let a = self.act.forward(t, ps, obs.prev_action)?;
        let joint = self.joint_goal_scene(t, ps, obs)?;
        let all = t.concat_cols(&[s, p, a, joint])?;
        self.fuse.forward(t, ps, all)
    }

    /// `embed` on a throwaway no-grad tape, returning the raw row.
    pub fn embed_values(&self, ps: &ParameterSet, obs: &Observation) -> Result<Vec<f64>> {
        let mut t = Tape::no_grad();
        let node = self.embed(&mut t, ps, obs)?;
        Ok(t.value(node).to_vec())
    }
}
