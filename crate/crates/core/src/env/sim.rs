//! Deterministic POMDP simulator: 0.25 m forward steps, 30° turns, a strict
//! 0.1 m success ring, a 500-step cap, and the no-sliding collision rule
//! (a blocked forward pins the agent until it turns).

use serde::{Deserialize, Serialize};

use crate::env::house::{House, ObjectClass};
use crate::env::navgraph::GoalField;
use crate::env::sensor::{render_observation, Observation, ACTION_NONE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub forward_step: f64,
    pub turn_angle_deg: f64,
    pub success_distance: f64,
    pub max_steps: usize,
    pub hfov_deg: f64,
    pub sensor_range: f64,
    pub seg_k: usize,
    /// Reward shaping: geodesic progress + success bonus − step penalty.
    pub reward_shaping: bool,
    pub reward_success_bonus: f64,
    pub reward_step_penalty: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            forward_step: 0.25,
            turn_angle_deg: 30.0,
            success_distance: 0.1,
            max_steps: 500,
            hfov_deg: 79.0,
            sensor_range: 1.5,
            seg_k: 13,
            reward_shaping: true,
            reward_success_bonus: 2.5,
            reward_step_penalty: 0.01,
        }
    }
}

impl EnvConfig {
    pub fn headings(&self) -> usize {
        (360.0 / self.turn_angle_deg).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.forward_step <= 0.0
            || self.turn_angle_deg <= 0.0
            || self.success_distance <= 0.0
            || self.max_steps == 0
            || self.hfov_deg <= 0.0
            || self.sensor_range <= 0.0
        {
            return Err(Error::Config("environment config values must be positive".into()));
        }
        let n = 360.0 / self.turn_angle_deg;
        if (n - n.round()).abs() > 1e-9 || n.round() < 3.0 {
            return Err(Error::Config(format!("turn angle {}° must divide 360°", self.turn_angle_deg)));
        }
        if self.seg_k < 3 || self.seg_k % 2 == 0 {
            return Err(Error::Config(format!("seg patch size {} must be odd and >= 3", self.seg_k)));
        }
        Ok(())
    }
}

pub const N_ACTIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    GoForward,
    TurnLeft,
    TurnRight,
    Stop,
}

impl Action {
    pub const ALL: [Action; N_ACTIONS] = [Action::GoForward, Action::TurnLeft, Action::TurnRight, Action::Stop];

    pub fn index(self) -> usize {
        match self {
            Action::GoForward => 0,
            Action::TurnLeft => 1,
            Action::TurnRight => 2,
            Action::Stop => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::GoForward => "go_forward",
            Action::TurnLeft => "turn_left",
            Action::TurnRight => "turn_right",
            Action::Stop => "stop",
        }
    }

    pub fn from_name(s: &str) -> Option<Action> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

/// Heading angle in radians for heading index `h` out of `n`.
pub fn heading_angle(h: usize, n: usize) -> f64 {
    2.0 * std::f64::consts::PI * h as f64 / n as f64
}

/// The one shared motion primitive: every component (simulator, planner,
/// replay) must advance positions through this function so trajectories
/// agree bit for bit.
pub fn advance(pos: (f64, f64), h: usize, n: usize, step: f64) -> (f64, f64) {
    let a = heading_angle(h, n);
    (pos.0 + step * a.cos(), pos.1 + step * a.sin())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub heading: usize,
    pub collided_since_turn: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub success: bool,
    pub geo_to_goal: f64,
    pub collided: bool,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

pub fn shaped_reward(prev_geo: f64, new_geo: f64, success: bool, config: &EnvConfig) -> f64 {
    let progress = if config.reward_shaping { prev_geo - new_geo } else { 0.0 };
    progress + if success { config.reward_success_bonus } else { 0.0 } - config.reward_step_penalty
}

pub struct Simulator<'h> {
    house: &'h House,
    config: EnvConfig,
    goal: ObjectClass,
    goal_field: GoalField,
    start: (f64, f64, usize),
    agent: AgentState,
    steps: usize,
    done: bool,
    prev_action: usize,
    prev_geo: f64,
    path_length: f64,
}

impl<'h> Simulator<'h> {
    pub fn new(house: &'h House, config: EnvConfig, start: (f64, f64, usize), goal: ObjectClass) -> Result<Simulator<'h>> {
        config.validate()?;
        let cell = house
            .cell_of_point(start.0, start.1)
            .filter(|&(ix, iy)| house.is_free(ix as i64, iy as i64))
            .ok_or_else(|| Error::Contract(format!("start position ({}, {}) is not free", start.0, start.1)))?;
        let _ = cell;
        if start.2 >= config.headings() {
            return Err(Error::Contract(format!("start heading {} out of range", start.2)));
        }
        let goal_field = GoalField::new(house, goal)?;
        let prev_geo = goal_field
            .geodesic(house, start.0, start.1)
            .ok_or_else(|| Error::Contract("goal is unreachable from the start".into()))?;
        Ok(Simulator {
            house,
            config,
            goal,
            goal_field,
            start,
            agent: AgentState { x: start.0, y: start.1, heading: start.2, collided_since_turn: false },
            steps: 0,
            done: false,
            prev_action: ACTION_NONE,
            prev_geo,
            path_length: 0.0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn goal(&self) -> ObjectClass {
        self.goal
    }

    pub fn goal_field(&self) -> &GoalField {
        &self.goal_field
    }

    pub fn agent(&self) -> AgentState {
        self.agent
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Sum of realized forward translations, in meters.
    pub fn path_length(&self) -> f64 {
        self.path_length
    }

    pub fn geo_to_goal(&self) -> f64 {
        self.prev_geo
    }

    pub fn observation(&self) -> Observation {
        let n = self.config.headings();
        render_observation(
            self.house,
            (self.agent.x, self.agent.y),
            heading_angle(self.agent.heading, n),
            (self.start.0, self.start.1),
            heading_angle(self.start.2, n),
            self.prev_action,
            self.goal.index(),
            &self.config,
        )
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Contract("step on a finished episode".into()));
        }
        self.steps += 1;
        let n = self.config.headings();
        let mut collided = false;
        let mut success = false;
        match action {
            Action::GoForward => {
                if self.agent.collided_since_turn {
                    collided = true;
                } else {
                    let to = advance((self.agent.x, self.agent.y), self.agent.heading, n, self.config.forward_step);
                    let free = self
                        .house
                        .cell_of_point(to.0, to.1)
                        .map(|(ix, iy)| self.house.is_free(ix as i64, iy as i64))
                        .unwrap_or(false);
                    if free {
                        self.agent.x = to.0;
                        self.agent.y = to.1;
                        self.path_length += self.config.forward_step;
                    } else {
                        self.agent.collided_since_turn = true;
                        collided = true;
                    }
                }
            }
            Action::TurnLeft => {
                self.agent.heading = (self.agent.heading + 1) % n;
                self.agent.collided_since_turn = false;
            }
            Action::TurnRight => {
                self.agent.heading = (self.agent.heading + n - 1) % n;
                self.agent.collided_since_turn = false;
            }
            Action::Stop => {
                self.done = true;
                success = self.goal_field.within(self.agent.x, self.agent.y, self.config.success_distance);
            }
        }
        if !self.done && self.steps >= self.config.max_steps {
            self.done = true;
        }
        let new_geo = self
            .goal_field
            .geodesic(self.house, self.agent.x, self.agent.y)
            .ok_or_else(|| Error::Contract("goal became unreachable".into()))?;
        let reward = shaped_reward(self.prev_geo, new_geo, success, &self.config);
        self.prev_geo = new_geo;
        self.prev_action = action.index();
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: self.done,
            info: StepInfo { success, geo_to_goal: new_geo, collided },
        })
    }
}
