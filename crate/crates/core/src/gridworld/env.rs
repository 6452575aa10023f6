use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::task::{TaskSpec, Wall};
use crate::{Error, Result};

/// Smallest distance kept between the agent and a wall line or the world edge.
const EDGE_EPS: f64 = 1e-6;

/// Flat observation: agent `(x, y)` normalized by the world size, then
/// `(x, y, reached)` for every goal in order.
pub type Observation = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub agent: [f64; 2],
    pub reached: Vec<bool>,
    pub step: usize,
}

impl EnvState {
    /// Index of the next goal to reach; equals the goal count when finished.
    pub fn current_goal(&self) -> usize {
        self.reached.iter().take_while(|r| **r).count()
    }

    pub fn all_reached(&self) -> bool {
        self.reached.iter().all(|r| *r)
    }

    pub fn is_done(&self, task: &TaskSpec) -> bool {
        self.all_reached() || self.step >= task.max_steps
    }
}

/// Initial state: start position plus a uniform draw from the jitter disk.
pub fn reset(task: &TaskSpec, rng: &mut impl rand::Rng) -> EnvState {
    let r = task.start_jitter_radius;
    let mut agent = task.start;
    if r > 0.0 {
        let radius = r * rng.gen::<f64>().sqrt();
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        agent[0] += radius * theta.cos();
        agent[1] += radius * theta.sin();
    }
    EnvState {
        agent,
        reached: vec![false; task.goals.len()],
        step: 0,
    }
}

pub fn effective_action(action: [f64; 2], noise: [f64; 2]) -> [f64; 2] {
    [
        (action[0] + noise[0]).clamp(-1.0, 1.0),
        (action[1] + noise[1]).clamp(-1.0, 1.0),
    ]
}

/// Advances one step, drawing the transition noise from `rng`.
pub fn step(
    state: &EnvState,
    action: [f64; 2],
    task: &TaskSpec,
    rng: &mut impl rand::Rng,
) -> Result<(EnvState, bool)> {
    let nx: f64 = StandardNormal.sample(rng);
    let ny: f64 = StandardNormal.sample(rng);
    step_with_noise(state, action, [nx * task.noise_std, ny * task.noise_std], task)
}

/// Deterministic transition given an explicit noise draw.
pub fn step_with_noise(
    state: &EnvState,
    action: [f64; 2],
    noise: [f64; 2],
    task: &TaskSpec,
) -> Result<(EnvState, bool)> {
    if state.is_done(task) {
        return Err(Error::Contract("step called on a finished episode".into()));
    }
    if action.iter().any(|a| !a.is_finite() || a.abs() > 1.0 + 1e-9) {
        return Err(Error::Contract(format!("action {action:?} outside [-1, 1]^2")));
    }
    let eff = effective_action(action, noise);
    let [x0, y0] = state.agent;
    let x1 = move_axis(x0, eff[0] * task.step_scale, y0, Axis::X, &task.walls, task.world_size);
    let y1 = move_axis(y0, eff[1] * task.step_scale, x1, Axis::Y, &task.walls, task.world_size);

    let mut next = state.clone();
    next.agent = [x1, y1];
    next.step += 1;
    let g = next.current_goal();
    if g < task.goals.len() {
        let goal = task.goals[g];
        if (x1 - goal[0]).hypot(y1 - goal[1]) <= task.goal_radius {
            next.reached[g] = true;
        }
    }
    let done = next.is_done(task);
    Ok((next, done))
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

/// Moves `pos` by `delta` along one axis with the other coordinate held at
/// `other`. The first wall line crossed reflects the overshoot, then the world
/// edges do the same, then the result is clamped strictly inside the world.
fn move_axis(pos: f64, delta: f64, other: f64, axis: Axis, walls: &[Wall], size: f64) -> f64 {
    if delta == 0.0 {
        return pos;
    }
    let target = pos + delta;
    let mut hit: Option<f64> = None;
    for w in walls {
        let (line, lo, hi) = match axis {
            Axis::X if w.is_vertical() => (w.x1, w.y1.min(w.y2), w.y1.max(w.y2)),
            Axis::Y if w.is_horizontal() => (w.y1, w.x1.min(w.x2), w.x1.max(w.x2)),
            _ => continue,
        };
        if other < lo || other > hi {
            continue;
        }
        let crosses = if delta > 0.0 {
            pos < line && target >= line
        } else {
            pos > line && target <= line
        };
        if crosses && hit.is_none_or(|h| (line - pos).abs() < (h - pos).abs()) {
            hit = Some(line);
        }
    }
    let mut out = match hit {
        Some(line) => reflect(pos, target, line),
        None => target,
    };
    if out <= 0.0 {
        out = -out;
    } else if out >= size {
        out = 2.0 * size - out;
    }
    out.clamp(EDGE_EPS, size - EDGE_EPS)
}

fn reflect(pos: f64, target: f64, line: f64) -> f64 {
    let r = 2.0 * line - target;
    if pos < line {
        r.min(line - EDGE_EPS)
    } else {
        r.max(line + EDGE_EPS)
    }
}

pub fn observe(state: &EnvState, task: &TaskSpec) -> Observation {
    let s = task.world_size;
    let mut obs = Vec::with_capacity(task.obs_dim());
    obs.push(state.agent[0] / s);
    obs.push(state.agent[1] / s);
    for (g, reached) in task.goals.iter().zip(&state.reached) {
        obs.push(g[0] / s);
        obs.push(g[1] / s);
        obs.push(if *reached { 1.0 } else { 0.0 });
    }
    obs
}

/// Current-goal index encoded in an observation (number of reached flags).
pub fn current_goal_of_observation(obs: &[f64]) -> usize {
    let n_goals = (obs.len() - 2) / 3;
    (0..n_goals).take_while(|g| obs[2 + 3 * g + 2] > 0.5).count()
}

pub fn fraction_goals_reached(state: &EnvState) -> f64 {
    if state.reached.is_empty() {
        return 0.0;
    }
    state.reached.iter().filter(|r| **r).count() as f64 / state.reached.len() as f64
}
