use log::debug;

use crate::dataset::Dataset;
use crate::gridworld::{current_goal_of_observation, Observation};
use crate::{Error, Result};

/// One bank entry: trajectory `traj`, step `idx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    traj: usize,
    idx: usize,
}

/// Bank entries of one current-goal index, sorted by agent x coordinate so
/// the exact nearest-neighbour scan can stop once the x gap alone exceeds the
/// best distance found.
#[derive(Debug, Clone)]
struct Group {
    xs: Vec<f64>,
    keys: Vec<Key>,
}

/// Lazy state predictor: finds the nearest recorded state (restricted to the
/// same current goal when possible) and returns the state `k` steps later in
/// the same trajectory, clamped to its final observation.
#[derive(Debug, Clone)]
pub struct InstancePredictor {
    trajectories: Vec<Vec<Observation>>,
    seeds: Vec<u64>,
    groups: Vec<Group>,
    all: Group,
    pub k: usize,
}

impl InstancePredictor {
    pub fn new(ds: &Dataset, k: usize) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::InvalidArgument("predictor bank is empty".into()));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("lookahead must be at least 1".into()));
        }
        let trajectories: Vec<Vec<Observation>> = ds.trajectories.iter().map(|t| t.observations.clone()).collect();
        let n_goals = ds.task.goal_count();
        let mut by_goal: Vec<Vec<(f64, Key)>> = vec![Vec::new(); n_goals + 1];
        let mut all = Vec::new();
        for (traj, obs) in trajectories.iter().enumerate() {
            for (idx, o) in obs.iter().enumerate() {
                let key = Key { traj, idx };
                let g = current_goal_of_observation(o).min(n_goals);
                by_goal[g].push((o[0], key));
                all.push((o[0], key));
            }
        }
        let build = |mut v: Vec<(f64, Key)>| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            Group {
                xs: v.iter().map(|e| e.0).collect(),
                keys: v.iter().map(|e| e.1).collect(),
            }
        };
        Ok(Self {
            groups: by_goal.into_iter().map(build).collect(),
            all: build(all),
            seeds: ds.trajectories.iter().map(|t| t.seed).collect(),
            trajectories,
            k,
        })
    }

    /// Episode seeds of the bank trajectories.
    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn bank_size(&self) -> usize {
        self.all.keys.len()
    }

    fn obs(&self, key: Key) -> &Observation {
        &self.trajectories[key.traj][key.idx]
    }

    fn scan(&self, group: &Group, q: &[f64]) -> Option<(Key, f64)> {
        if group.keys.is_empty() {
            return None;
        }
        let start = group.xs.partition_point(|x| *x < q[0]);
        let mut best: Option<(Key, f64)> = None;
        let consider = |key: Key, best: &mut Option<(Key, f64)>| {
            let o = self.obs(key);
            let d: f64 = o.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            let better = match *best {
                None => true,
                Some((bk, bd)) => d < bd || (d == bd && key < bk),
            };
            if better {
                *best = Some((key, d));
            }
        };
        // Walk outward from the insertion point in both directions.
        let (mut lo, mut hi) = (start, start);
        loop {
            let bound = best.map_or(f64::INFINITY, |b| b.1);
            let dl = if lo > 0 { (q[0] - group.xs[lo - 1]).powi(2) } else { f64::INFINITY };
            let dh = if hi < group.xs.len() { (group.xs[hi] - q[0]).powi(2) } else { f64::INFINITY };
            if dl > bound && dh > bound {
                break;
            }
            if dl <= dh {
                lo -= 1;
                consider(group.keys[lo], &mut best);
            } else {
                consider(group.keys[hi], &mut best);
                hi += 1;
            }
        }
        best
    }

    /// Nearest bank state as `(trajectory, index, squared distance)`.
    pub fn nearest(&self, q: &[f64]) -> Result<(usize, usize, f64)> {
        let g = current_goal_of_observation(q).min(self.groups.len() - 1);
        let hit = match self.scan(&self.groups[g], q) {
            Some(h) => h,
            None => {
                debug!("no bank state for goal {g}; falling back to unconstrained search");
                self.scan(&self.all, q).expect("bank is non-empty")
            }
        };
        Ok((hit.0.traj, hit.0.idx, hit.1))
    }

    pub fn predict(&self, q: &[f64]) -> Result<Observation> {
        self.predict_k(q, self.k)
    }

    pub fn predict_k(&self, q: &[f64], k: usize) -> Result<Observation> {
        let (traj, idx, _) = self.nearest(q)?;
        let obs = &self.trajectories[traj];
        Ok(obs[(idx + k).min(obs.len() - 1)].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Provenance, Trajectory};
    use crate::demonstrator::{collect_dataset, PlannerConfig};
    use crate::gridworld::{TaskName, TaskSpec};
    use crate::rng::seeded;
    use rand::Rng;

    fn small_dataset() -> Dataset {
        let task = TaskSpec::builtin(TaskName::FourRoom);
        collect_dataset(&task, Provenance::Surrogate, 3, 4, &PlannerConfig::default()).unwrap().0
    }

    #[test]
    fn exact_match_returns_recorded_future() {
        let ds = small_dataset();
        let p = InstancePredictor::new(&ds, 1).unwrap();
        for (i, t) in ds.trajectories.iter().enumerate() {
            for j in (0..t.len()).step_by(7) {
                let (ti, tj, d) = p.nearest(&t.observations[j]).unwrap();
                assert_eq!(d, 0.0);
                assert_eq!(&ds.trajectories[ti].observations[tj], &t.observations[j]);
                assert_eq!(p.predict(&t.observations[j]).unwrap(), t.observations[j + 1], "traj {i} step {j}");
            }
        }
    }

    #[test]
    fn trajectory_end_clamps() {
        let ds = small_dataset();
        let p = InstancePredictor::new(&ds, 5).unwrap();
        let last = ds.trajectories[1].observations.last().unwrap();
        assert_eq!(&p.predict(last).unwrap(), last);
    }

    #[test]
    fn matches_brute_force_scan() {
        let ds = small_dataset();
        let p = InstancePredictor::new(&ds, 1).unwrap();
        let mut rng = seeded(1);
        let template = ds.trajectories[0].observations[0].clone();
        for q_i in 0..1000 {
            let mut q = template.clone();
            q[0] = rng.gen_range(0.0..1.0);
            q[1] = rng.gen_range(0.0..1.0);
            let reached = rng.gen_range(0..4);
            for g in 0..4 {
                q[2 + 3 * g + 2] = if g < reached { 1.0 } else { 0.0 };
            }
            let (_, _, d) = p.nearest(&q).unwrap();
            let goal = current_goal_of_observation(&q);
            let mut best = f64::INFINITY;
            for t in &ds.trajectories {
                for o in &t.observations {
                    if current_goal_of_observation(o) == goal {
                        best = best.min(o.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum());
                    }
                }
            }
            assert!(d <= best, "query {q_i}: {d} > {best}");
            assert!(d == best);
        }
    }

    fn line_dataset() -> (Dataset, impl Fn(f64) -> Observation) {
        let task = TaskName::FourRoom;
        let obs = move |x: f64| {
            let mut o = vec![0.0; task.obs_dim()];
            o[0] = x;
            o
        };
        let traj = |seed, xs: &[f64]| Trajectory {
            task,
            seed,
            observations: xs.iter().map(|&x| obs(x)).collect(),
            actions: vec![[0.0, 0.0]; xs.len() - 1],
        };
        let ds = Dataset::new(
            task,
            Provenance::Planner,
            vec![traj(0, &[0.875, 0.75, 0.25]), traj(1, &[0.25, 0.125])],
        )
        .unwrap();
        (ds, obs)
    }

    #[test]
    fn ties_prefer_lowest_trajectory_then_index() {
        let (ds, obs) = line_dataset();
        let p = InstancePredictor::new(&ds, 1).unwrap();
        // 0.5 is exactly 0.25 away from (0, 1), (0, 2) and (1, 0)
        assert_eq!(p.nearest(&obs(0.5)).unwrap(), (0, 1, 0.0625));
        assert_eq!(p.nearest(&obs(0.375)).unwrap(), (0, 2, 0.015625));
        assert_eq!(p.nearest(&obs(0.1)).unwrap().0, 1);
    }

    #[test]
    fn falls_back_when_goal_missing() {
        let (ds, obs) = line_dataset();
        let p = InstancePredictor::new(&ds, 1).unwrap();
        let mut q = obs(0.8);
        q[4] = 1.0;
        assert_eq!(current_goal_of_observation(&q), 1);
        assert_eq!(p.nearest(&q).unwrap().0, 0);
        assert_eq!(p.predict(&q).unwrap(), obs(0.25));
    }
}
