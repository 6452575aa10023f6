//! Scripted demonstrators: a receding-horizon A* planner that replans to the
//! next unreached goal at every step, and a noisier surrogate that adds action
//! jitter and one random detour per leg to mimic human variability.

mod collect;
mod grid;
mod planner;

pub use collect::{collect_dataset, collect_trajectory, visitation_spread, CollectReport};
pub use grid::{astar, Cell, Grid};
pub use planner::{astar_plan, planner_action, Demonstrator, PlannerConfig};
