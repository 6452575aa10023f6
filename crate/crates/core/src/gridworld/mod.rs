//! Continuous 2D goal-sequence navigation.
//!
//! The agent moves in a square world with axis-aligned walls and must visit an
//! ordered list of goals. Transitions add Gaussian noise to the commanded
//! action before clipping it to the unit box, so the same state-action pair
//! leads to a distribution of next states. There is no reward signal.

mod env;
mod task;

pub use env::{
    current_goal_of_observation, effective_action, fraction_goals_reached, observe, reset, step,
    step_with_noise, EnvState, Observation,
};
pub use task::{TaskName, TaskSpec, Wall};
