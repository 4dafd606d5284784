//! Procedural worlds and the navigation POMDP built on top of them.

pub mod house;
pub mod navgraph;
pub mod sensor;
pub mod sim;

pub use house::{generate_house, House, HouseParams, ObjectClass, RoomType, CELL};
pub use navgraph::{geodesic_distance, GoalField};
pub use sensor::{Observation, ACTION_NONE, SEG_CHANNELS};
pub use sim::{advance, heading_angle, Action, AgentState, EnvConfig, Simulator, StepInfo, StepOutcome, N_ACTIONS};
