use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::grid::{astar, Grid};
use crate::dataset::Provenance;
use crate::gridworld::{EnvState, TaskSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub grid_cell: f64,
    pub replan_every_step: bool,
    pub surrogate_jitter_std: f64,
    /// Largest distance of a detour waypoint from the midpoint of a leg.
    pub surrogate_waypoint_offset: f64,
    /// A detour waypoint counts as visited within this distance.
    pub detour_reach: f64,
    /// Path length per detour waypoint; each leg gets at least one.
    pub detour_spacing: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            grid_cell: 0.5,
            replan_every_step: true,
            surrogate_jitter_std: 0.3,
            surrogate_waypoint_offset: 1.5,
            detour_reach: 1.0,
            detour_spacing: 6.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self, task: &TaskSpec) -> Result<()> {
        if !(self.grid_cell > 0.0 && self.grid_cell < task.goal_radius) {
            return Err(Error::InvalidArgument(format!(
                "grid_cell {} must lie in (0, goal_radius = {})",
                self.grid_cell, task.goal_radius
            )));
        }
        if self.surrogate_jitter_std < 0.0 || self.surrogate_waypoint_offset < 0.0 || self.detour_spacing <= 0.0 {
            return Err(Error::InvalidArgument("surrogate parameters must be non-negative".into()));
        }
        Ok(())
    }
}

/// Waypoints (cell centers) from the agent to the current goal; the final
/// waypoint is the goal center itself. Empty when the agent is already inside
/// the goal radius.
pub fn astar_plan(state: &EnvState, task: &TaskSpec, grid: &Grid) -> Result<Vec<[f64; 2]>> {
    let g = state.current_goal();
    let goal = *task
        .goals
        .get(g)
        .ok_or_else(|| Error::Contract("all goals already reached".into()))?;
    plan_to(state.agent, goal, task.goal_radius, grid).ok_or(Error::UnreachableGoal {
        goal: g,
        x: state.agent[0],
        y: state.agent[1],
    })
}

fn plan_to(from: [f64; 2], target: [f64; 2], radius: f64, grid: &Grid) -> Option<Vec<[f64; 2]>> {
    if dist(from, target) <= radius {
        return Some(Vec::new());
    }
    let (cells, _) = astar(grid, grid.cell_of(from), grid.cell_of(target))?;
    let mut wps: Vec<[f64; 2]> = cells.iter().map(|c| grid.center(*c)).collect();
    match wps.last_mut() {
        Some(last) => *last = target,
        None => wps.push(target),
    }
    Some(wps)
}

/// Direction to `target` scaled so the larger component has magnitude 1.
fn heading(from: [f64; 2], target: [f64; 2]) -> [f64; 2] {
    let d = [target[0] - from[0], target[1] - from[1]];
    let m = d[0].abs().max(d[1].abs());
    if m == 0.0 {
        return [0.0, 0.0];
    }
    [(d[0] / m).clamp(-1.0, 1.0), (d[1] / m).clamp(-1.0, 1.0)]
}

/// Noise-free planner action: head for the first waypoint of a fresh plan.
pub fn planner_action(state: &EnvState, task: &TaskSpec, grid: &Grid) -> Result<[f64; 2]> {
    let plan = astar_plan(state, task, grid)?;
    let goal = task.goals[state.current_goal()];
    Ok(heading(state.agent, plan.first().copied().unwrap_or(goal)))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Adds per-axis Gaussian jitter without clipping.
pub(crate) fn jitter(action: [f64; 2], std: f64, rng: &mut impl Rng) -> [f64; 2] {
    if std == 0.0 {
        return action;
    }
    let n = Normal::new(0.0, std).expect("std is non-negative");
    [action[0] + n.sample(rng), action[1] + n.sample(rng)]
}

#[derive(Debug, Clone)]
struct Leg {
    goal: usize,
    /// Remaining detour waypoints, next one first.
    detours: Vec<[f64; 2]>,
}

/// Stateful demonstrator for one episode at a time.
#[derive(Debug, Clone)]
pub struct Demonstrator {
    pub task: TaskSpec,
    pub config: PlannerConfig,
    pub provenance: Provenance,
    grid: Grid,
    leg: Option<Leg>,
    cached_plan: Vec<[f64; 2]>,
}

impl Demonstrator {
    pub fn new(task: &TaskSpec, config: PlannerConfig, provenance: Provenance) -> Result<Self> {
        config.validate(task)?;
        Ok(Self {
            grid: Grid::new(task, config.grid_cell),
            task: task.clone(),
            config,
            provenance,
            leg: None,
            cached_plan: Vec::new(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Forgets per-episode state (detours, cached plans).
    pub fn reset(&mut self) {
        self.leg = None;
        self.cached_plan.clear();
    }

    /// Commanded action in `[-1, 1]^2` for the current state.
    pub fn act(&mut self, state: &EnvState, rng: &mut impl Rng) -> Result<[f64; 2]> {
        match self.provenance {
            Provenance::Planner => self.planner_step(state),
            Provenance::Surrogate => {
                let raw = self.surrogate_raw(state, rng)?;
                Ok([raw[0].clamp(-1.0, 1.0), raw[1].clamp(-1.0, 1.0)])
            }
        }
    }

    fn planner_step(&mut self, state: &EnvState) -> Result<[f64; 2]> {
        if self.config.replan_every_step {
            return planner_action(state, &self.task, &self.grid);
        }
        while self
            .cached_plan
            .first()
            .is_some_and(|w| dist(*w, state.agent) < 0.5 * self.grid.cell)
        {
            self.cached_plan.remove(0);
        }
        if self.cached_plan.is_empty() {
            self.cached_plan = astar_plan(state, &self.task, &self.grid)?;
        }
        let goal = self.task.goals[state.current_goal()];
        Ok(heading(state.agent, self.cached_plan.first().copied().unwrap_or(goal)))
    }

    /// Surrogate action before clipping: heading plus Gaussian jitter.
    pub(crate) fn surrogate_raw(&mut self, state: &EnvState, rng: &mut impl Rng) -> Result<[f64; 2]> {
        let g = state.current_goal();
        if self.leg.as_ref().is_none_or(|l| l.goal != g) {
            let detours = self.pick_detours(state, rng)?;
            self.leg = Some(Leg { goal: g, detours });
        }
        let reach = self.config.detour_reach;
        let leg = self.leg.as_mut().expect("leg set above");
        while let Some(&d) = leg.detours.first() {
            if dist(d, state.agent) <= reach {
                leg.detours.remove(0);
                continue;
            }
            match plan_to(state.agent, d, reach, &self.grid) {
                Some(plan) => {
                    let base = heading(state.agent, plan.first().copied().unwrap_or(d));
                    return Ok(jitter(base, self.config.surrogate_jitter_std, rng));
                }
                None => {
                    leg.detours.remove(0);
                }
            }
        }
        let base = planner_action(state, &self.task, &self.grid)?;
        Ok(jitter(base, self.config.surrogate_jitter_std, rng))
    }

    /// Splits the planned leg into pieces of roughly `detour_spacing` and
    /// offsets the midpoint of each piece uniformly within the offset disk.
    /// A piece keeps no detour when ten draws all land on blocked cells.
    fn pick_detours(&self, state: &EnvState, rng: &mut impl Rng) -> Result<Vec<[f64; 2]>> {
        let plan = astar_plan(state, &self.task, &self.grid)?;
        let r = self.config.surrogate_waypoint_offset;
        if plan.len() < 2 || r == 0.0 {
            return Ok(Vec::new());
        }
        let mut arc = Vec::with_capacity(plan.len());
        let mut acc = 0.0;
        let mut prev = state.agent;
        for w in &plan {
            acc += dist(prev, *w);
            arc.push(acc);
            prev = *w;
        }
        let pieces = (acc / self.config.detour_spacing).round().max(1.0) as usize;
        let mut out = Vec::new();
        for k in 0..pieces {
            let at = (k as f64 + 0.5) * acc / pieces as f64;
            let idx = arc.partition_point(|a| *a < at).min(plan.len() - 1);
            let mid = plan[idx];
            for _ in 0..10 {
                let rad = r * rng.gen::<f64>().sqrt();
                let th = rng.gen::<f64>() * std::f64::consts::TAU;
                let p = [mid[0] + rad * th.cos(), mid[1] + rad * th.sin()];
                if self.task.inside_world(p) && self.grid.is_free(self.grid.cell_of(p)) {
                    out.push(p);
                    break;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{reset, TaskName};
    use crate::rng::seeded;

    fn state_at(task: &TaskSpec, p: [f64; 2]) -> EnvState {
        let mut s = reset(task, &mut seeded(0));
        s.agent = p;
        s
    }

    #[test]
    fn plan_is_empty_inside_goal_radius() {
        let task = TaskSpec::builtin(TaskName::FourRoom);
        let grid = Grid::new(&task, 0.5);
        let s = state_at(&task, [16.3, 3.2]);
        assert!(astar_plan(&s, &task, &grid).unwrap().is_empty());
    }

    #[test]
    fn due_east_waypoint_gives_unit_x() {
        assert_eq!(heading([1.0, 1.0], [3.0, 1.0]), [1.0, 0.0]);
        assert_eq!(heading([1.0, 1.0], [0.0, 3.0]), [-0.5, 1.0]);
        // open corridor toward the first goal, straight east
        let task = TaskSpec::builtin(TaskName::FourRoom);
        let grid = Grid::new(&task, 0.5);
        let s = state_at(&task, [12.25, 3.25]);
        assert_eq!(planner_action(&s, &task, &grid).unwrap(), [1.0, 0.0]);
    }

    #[test]
    fn planner_is_deterministic() {
        let task = TaskSpec::builtin(TaskName::Maze);
        let grid = Grid::new(&task, 0.5);
        let s = state_at(&task, [2.1, 2.7]);
        assert_eq!(
            planner_action(&s, &task, &grid).unwrap(),
            planner_action(&s, &task, &grid).unwrap()
        );
    }

    #[test]
    fn plan_ends_at_goal_center() {
        let task = TaskSpec::builtin(TaskName::FourRoom);
        let grid = Grid::new(&task, 0.5);
        let s = state_at(&task, [3.0, 3.0]);
        let plan = astar_plan(&s, &task, &grid).unwrap();
        assert_eq!(plan.last(), Some(&task.goals[0]));
    }

    #[test]
    fn surrogate_jitter_has_configured_std() {
        let task = TaskSpec::builtin(TaskName::FourRoom);
        let mut demo = Demonstrator::new(&task, PlannerConfig::default(), Provenance::Surrogate).unwrap();
        let s = state_at(&task, [12.25, 3.25]);
        let mut rng = seeded(5);
        let n = 10_000;
        let draws: Vec<[f64; 2]> = (0..n).map(|_| demo.surrogate_raw(&s, &mut rng).unwrap()).collect();
        for axis in 0..2 {
            let mean = draws.iter().map(|d| d[axis]).sum::<f64>() / n as f64;
            let var = draws.iter().map(|d| (d[axis] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let sd = var.sqrt();
            assert!((sd - 0.3).abs() <= 0.03, "axis {axis}: std {sd}");
        }
    }

    #[test]
    fn config_rejects_coarse_grid() {
        let task = TaskSpec::builtin(TaskName::FourRoom);
        let cfg = PlannerConfig {
            grid_cell: 1.0,
            ..PlannerConfig::default()
        };
        assert!(cfg.validate(&task).is_err());
    }
}
