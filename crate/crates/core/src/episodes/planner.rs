//! Optimal-plan search over the exact motion model.
//!
//! The agent's reachable poses form a lattice: with 0.25 m steps and 30°
//! turns every coordinate is `start + 0.125·m + 0.125·√3·n` for integers
//! `m, n`, and since √3 is irrational the pair `(m, n)` is unique per
//! coordinate. A* runs over those integer keys while float poses are
//! advanced through the same `advance` the simulator uses, so replaying a
//! plan reproduces the planner's trajectory bit for bit.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::env::house::House;
use crate::env::navgraph::GoalField;
use crate::env::sim::{advance, Action, EnvConfig};
use crate::error::{Error, Result};

/// Integer lattice displacement of one forward step, per axis, in units of
/// 0.125 (`m`) and 0.125·√3 (`n`), indexed by heading 0..12.
const DELTA_X: [(i32, i32); 12] =
    [(2, 0), (0, 1), (1, 0), (0, 0), (-1, 0), (0, -1), (-2, 0), (0, -1), (-1, 0), (0, 0), (1, 0), (0, 1)];
const DELTA_Y: [(i32, i32); 12] =
    [(0, 0), (1, 0), (0, 1), (2, 0), (0, 1), (1, 0), (0, 0), (-1, 0), (0, -1), (-2, 0), (0, -1), (-1, 0)];

type Key = ([i32; 4], u8);

/// An executable action sequence ending in `Stop`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub actions: Vec<Action>,
    pub forwards: usize,
    /// Pose after the last pre-stop action, reached through `advance`.
    pub end_pose: (f64, f64, usize),
}

impl Plan {
    /// Actions before the final stop; the two worked costs are four when the
    /// goal region is 1 m dead ahead, seven when it is 1 m away at 90°.
    pub fn steps(&self) -> usize {
        self.actions.len() - 1
    }

    /// Realized shortest-path length in meters.
    pub fn path_length(&self, config: &EnvConfig) -> f64 {
        self.forwards as f64 * config.forward_step
    }

    /// Compact trace: F (forward), L, R, S.
    pub fn encode(&self) -> String {
        self.actions
            .iter()
            .map(|a| match a {
                Action::GoForward => 'F',
                Action::TurnLeft => 'L',
                Action::TurnRight => 'R',
                Action::Stop => 'S',
            })
            .collect()
    }

    pub fn decode(s: &str) -> Result<Plan> {
        let mut actions = Vec::with_capacity(s.len());
        for ch in s.chars() {
            actions.push(match ch {
                'F' => Action::GoForward,
                'L' => Action::TurnLeft,
                'R' => Action::TurnRight,
                'S' => Action::Stop,
                other => return Err(Error::Data(format!("unknown plan action {other:?}"))),
            });
        }
        if actions.last() != Some(&Action::Stop) || actions.iter().filter(|&&a| a == Action::Stop).count() != 1 {
            return Err(Error::Data("a plan must end with its single stop".into()));
        }
        let forwards = actions.iter().filter(|&&a| a == Action::GoForward).count();
        Ok(Plan { actions, forwards, end_pose: (f64::NAN, f64::NAN, 0) })
    }
}

const EXPANSION_BUDGET: usize = 400_000;

pub fn plan(house: &House, config: &EnvConfig, goal_field: &GoalField, start: (f64, f64, usize)) -> Result<Option<Plan>> {
    plan_inner(house, config, goal_field, start, true)
}

/// Uniform-cost reference search: identical machinery with the heuristic
/// zeroed, for validating optimality on small instances.
pub fn plan_uniform_cost(
    house: &House,
    config: &EnvConfig,
    goal_field: &GoalField,
    start: (f64, f64, usize),
) -> Result<Option<Plan>> {
    plan_inner(house, config, goal_field, start, false)
}

fn plan_inner(
    house: &House,
    config: &EnvConfig,
    goal_field: &GoalField,
    start: (f64, f64, usize),
    use_heuristic: bool,
) -> Result<Option<Plan>> {
    if config.headings() != 12 {
        return Err(Error::Config(format!(
            "the optimal planner assumes 30° turns, got {}°",
            config.turn_angle_deg
        )));
    }
    let free_at = |x: f64, y: f64| {
        house
            .cell_of_point(x, y)
            .map(|(ix, iy)| house.is_free(ix as i64, iy as i64))
            .unwrap_or(false)
    };
    if !free_at(start.0, start.1) {
        return Err(Error::Contract(format!("plan start ({}, {}) is not free", start.0, start.1)));
    }
    // admissible and consistent: any successful pose lies strictly within
    // the success ring, so at least ceil((E − ring) / step) forwards remain
    let h_of = |x: f64, y: f64| -> u32 {
        if !use_heuristic {
            return 0;
        }
        let e = goal_field.euclid_to_region(x, y);
        if e > config.success_distance {
            ((e - config.success_distance) / config.forward_step).ceil() as u32
        } else {
            0
        }
    };

    // non-stop actions must leave room for the stop within the step cap
    let g_cap = (config.max_steps - 1) as u32;

    let start_key: Key = ([0, 0, 0, 0], start.2 as u8);
    let mut g_score: HashMap<Key, u32> = HashMap::new();
    let mut pose: HashMap<Key, (f64, f64)> = HashMap::new();
    let mut parent: HashMap<Key, (Key, Action)> = HashMap::new();
    let mut open: BinaryHeap<Reverse<(u32, u32, Key)>> = BinaryHeap::new();
    g_score.insert(start_key, 0);
    pose.insert(start_key, (start.0, start.1));
    open.push(Reverse((h_of(start.0, start.1), 0, start_key)));

    let mut pops = 0usize;
    while let Some(Reverse((_, g, key))) = open.pop() {
        if g > *g_score.get(&key).unwrap_or(&u32::MAX) {
            continue; // superseded entry
        }
        pops += 1;
        if pops > EXPANSION_BUDGET {
            return Ok(None);
        }
        let (x, y) = pose[&key];
        if goal_field.within(x, y, config.success_distance) {
            // reconstruct, then append the stop
            let mut actions = Vec::new();
            let mut cur = key;
            while let Some(&(prev, act)) = parent.get(&cur) {
                actions.push(act);
                cur = prev;
            }
            actions.reverse();
            let forwards = actions.iter().filter(|&&a| a == Action::GoForward).count();
            actions.push(Action::Stop);
            return Ok(Some(Plan { actions, forwards, end_pose: (x, y, key.1 as usize) }));
        }
        if g >= g_cap {
            continue;
        }
        let heading = key.1 as usize;
        let mut push = |succ: Key, sx: f64, sy: f64, act: Action, open: &mut BinaryHeap<Reverse<(u32, u32, Key)>>| {
            let ng = g + 1;
            if ng < *g_score.get(&succ).unwrap_or(&u32::MAX) {
                g_score.insert(succ, ng);
                pose.insert(succ, (sx, sy));
                parent.insert(succ, (key, act));
                open.push(Reverse((ng + h_of(sx, sy), ng, succ)));
            }
        };
        // turns
        let left: Key = (key.0, ((heading + 1) % 12) as u8);
        push(left, x, y, Action::TurnLeft, &mut open);
        let right: Key = (key.0, ((heading + 11) % 12) as u8);
        push(right, x, y, Action::TurnRight, &mut open);
        // forward, only when the destination cell is free
        let (nx, ny) = advance((x, y), heading, 12, config.forward_step);
        if free_at(nx, ny) {
            let (dxm, dxn) = DELTA_X[heading];
            let (dym, dyn_) = DELTA_Y[heading];
            let fwd: Key = (
                [key.0[0] + dxm, key.0[1] + dxn, key.0[2] + dym, key.0[3] + dyn_],
                key.1,
            );
            push(fwd, nx, ny, Action::GoForward, &mut open);
        }
    }
    Ok(None)
}
