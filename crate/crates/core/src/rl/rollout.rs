//! On-policy experience collection.
//!
//! Episodes run to completion (success, failure or the step cap), so the
//! buffer never ends mid-episode and the advantage recursion needs no
//! bootstrap value. Memory models keep their scene memory inside the
//! episode only; the LSTM stores its incoming state per step so training
//! can rebuild any window without replaying the whole episode.

use crate::autodiff::ParameterSet;
use crate::env::sim::Simulator;
use crate::env::EnvConfig;
use crate::env::sensor::Observation;
use crate::episodes::types::Episode;
use crate::episodes::Dataset;
use crate::error::{Error, Result};
use crate::policy::model::{Model, PolicyState};
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct StepRecord {
    pub obs: Observation,
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
    /// Step embedding as computed during rollout (memory row).
    pub phi: Vec<f64>,
    /// LSTM state entering this step, when the model is recurrent.
    pub lstm_in: Option<(Vec<f64>, Vec<f64>)>,
    /// Episode-local index and buffer-wide episode ordinal.
    pub episode: usize,
    pub t: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RolloutStats {
    pub episodes: usize,
    pub successes: usize,
    pub total_reward: f64,
    pub total_steps: usize,
}

#[derive(Debug, Default)]
pub struct RolloutBuffer {
    pub steps: Vec<StepRecord>,
    /// Start offset of each episode in `steps`.
    pub episode_starts: Vec<usize>,
    pub stats: RolloutStats,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Steps of one episode as a contiguous slice.
    pub fn episode_slice(&self, e: usize) -> &[StepRecord] {
        let start = self.episode_starts[e];
        let end = self.episode_starts.get(e + 1).copied().unwrap_or(self.steps.len());
        &self.steps[start..end]
    }
}

/// Run one full episode and append its steps.
pub fn run_training_episode(
    model: &Model,
    ps: &ParameterSet,
    dataset: &Dataset,
    episode: &Episode,
    buffer: &mut RolloutBuffer,
    rng: &mut Rng,
) -> Result<()> {
    let house = dataset.house(&episode.house)?;
    let env: EnvConfig = dataset.env;
    let mut sim = Simulator::new(house, env, (episode.start_x, episode.start_y, episode.start_heading), episode.goal)?;
    let mut state = model.initial_state();
    let mut obs = sim.observation();
    let ordinal = buffer.episode_starts.len();
    buffer.episode_starts.push(buffer.steps.len());
    let mut t = 0usize;
    loop {
        let lstm_in = match &state {
            PolicyState::Lstm { h, c } => Some((h.clone(), c.clone())),
            _ => None,
        };
        let d = model.act(ps, &mut state, &obs, Some(rng))?;
        let out = sim.step(d.action)?;
        buffer.steps.push(StepRecord {
            obs,
            action: d.action.index(),
            log_prob: d.log_prob,
            value: d.value,
            reward: out.reward,
            done: out.done,
            phi: d.phi,
            lstm_in,
            episode: ordinal,
            t,
        });
        buffer.stats.total_reward += out.reward;
        buffer.stats.total_steps += 1;
        t += 1;
        if out.done {
            buffer.stats.episodes += 1;
            if out.info.success {
                buffer.stats.successes += 1;
            }
            break;
        }
        obs = out.observation;
    }
    Ok(())
}

/// Collect at least `min_steps` of experience (whole episodes) from the
/// provided episode sequence, starting at `cursor` and wrapping around.
/// Returns the advanced cursor.
pub fn collect_rollout(
    model: &Model,
    ps: &ParameterSet,
    dataset: &Dataset,
    episodes: &[&Episode],
    mut cursor: usize,
    min_steps: usize,
    rng: &mut Rng,
) -> Result<(RolloutBuffer, usize)> {
    if episodes.is_empty() {
        return Err(Error::Data("no episodes to roll out".into()));
    }
    let mut buffer = RolloutBuffer::default();
    while buffer.len() < min_steps {
        let ep = episodes[cursor % episodes.len()];
        cursor += 1;
        run_training_episode(model, ps, dataset, ep, &mut buffer, rng)?;
    }
    Ok((buffer, cursor))
}
