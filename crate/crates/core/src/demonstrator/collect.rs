use log::info;
use rayon::prelude::*;

use super::planner::{Demonstrator, PlannerConfig};
use crate::dataset::{Dataset, Provenance, Trajectory};
use crate::gridworld::{observe, reset, step, TaskSpec};
use crate::rng::{derive_seed, derived};
use crate::{Error, Result};

/// Attempts per trajectory slot before collection gives up.
const MAX_ATTEMPTS_PER_SLOT: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectReport {
    pub attempts: usize,
    pub discarded: usize,
}

/// Runs one episode from `episode_seed`. Returns `None` when the episode
/// times out before every goal is reached.
///
/// The environment and the demonstrator draw from separate streams of the
/// episode seed, so planner and surrogate episodes with the same seed see the
/// same start jitter and transition noise sequence.
pub fn collect_trajectory(demo: &mut Demonstrator, episode_seed: u64) -> Result<Option<Trajectory>> {
    let task = demo.task.clone();
    let mut env_rng = derived(episode_seed, 0);
    let mut demo_rng = derived(episode_seed, 1);
    demo.reset();
    let mut state = reset(&task, &mut env_rng);
    let mut observations = vec![observe(&state, &task)];
    let mut actions = Vec::new();
    loop {
        let a = demo.act(&state, &mut demo_rng)?;
        let (next, done) = step(&state, a, &task, &mut env_rng)?;
        actions.push(a);
        observations.push(observe(&next, &task));
        state = next;
        if done {
            break;
        }
    }
    if !state.all_reached() {
        return Ok(None);
    }
    Ok(Some(Trajectory {
        task: task.name,
        seed: episode_seed,
        observations,
        actions,
    }))
}

/// Collects `n_traj` successful demonstrations. Slot `i` tries episode seeds
/// derived from `(seed, i, attempt)` until one succeeds; slots run in
/// parallel and are merged in slot order.
pub fn collect_dataset(
    task: &TaskSpec,
    provenance: Provenance,
    n_traj: usize,
    seed: u64,
    config: &PlannerConfig,
) -> Result<(Dataset, CollectReport)> {
    if n_traj == 0 {
        return Err(Error::InvalidArgument("n_traj must be at least 1".into()));
    }
    task.validate()?;
    let proto = Demonstrator::new(task, config.clone(), provenance)?;
    let slots: Vec<(Option<Trajectory>, usize)> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut demo = proto.clone();
            let slot_seed = derive_seed(seed, i as u64);
            for attempt in 0..MAX_ATTEMPTS_PER_SLOT {
                let ep = derive_seed(slot_seed, attempt as u64);
                if let Some(t) = collect_trajectory(&mut demo, ep)? {
                    return Ok((Some(t), attempt + 1));
                }
            }
            Ok((None, MAX_ATTEMPTS_PER_SLOT))
        })
        .collect::<Result<_>>()?;
    let attempts: usize = slots.iter().map(|s| s.1).sum();
    let successes = slots.iter().filter(|s| s.0.is_some()).count();
    let discarded = attempts - successes;
    if successes < n_traj || (attempts >= 10 && discarded * 10 > attempts * 9) {
        return Err(Error::DemonstratorFailure {
            failed: discarded,
            attempts,
        });
    }
    info!(
        "{} {}: {} trajectories, {} discarded episodes",
        task.name, provenance, n_traj, discarded
    );
    let trajectories = slots.into_iter().filter_map(|s| s.0).collect();
    let ds = Dataset::new(task.name, provenance, trajectories)?;
    Ok((ds, CollectReport { attempts, discarded }))
}

/// Mean pairwise Euclidean distance (world units) between all visited agent
/// positions in the dataset.
pub fn visitation_spread(ds: &Dataset, world_size: f64) -> f64 {
    let pts: Vec<[f64; 2]> = ds
        .trajectories
        .iter()
        .flat_map(|t| t.observations.iter().map(|o| [o[0] * world_size, o[1] * world_size]))
        .collect();
    let n = pts.len();
    if n < 2 {
        return 0.0;
    }
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = pts[i];
            pts[i + 1..].iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).sum::<f64>()
        })
        .sum();
    total / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::write_to;
    use crate::gridworld::TaskName;

    #[test]
    fn collection_is_byte_reproducible() {
        for name in TaskName::ALL {
            let task = TaskSpec::builtin(name);
            let bytes = || {
                let (ds, _) = collect_dataset(&task, Provenance::Planner, 1, 9, &PlannerConfig::default()).unwrap();
                let mut out = Vec::new();
                write_to(&ds, &mut out).unwrap();
                out
            };
            assert_eq!(bytes(), bytes());
        }
    }

    #[test]
    fn zero_trajectories_is_rejected() {
        let task = TaskSpec::builtin(TaskName::FourRoom);
        assert!(collect_dataset(&task, Provenance::Planner, 0, 0, &PlannerConfig::default()).is_err());
    }

    #[test]
    fn impossible_budget_reports_failure() {
        let mut task = TaskSpec::builtin(TaskName::FourRoom);
        task.max_steps = 200;
        task.step_scale = 0.01;
        let err = collect_dataset(&task, Provenance::Planner, 1, 0, &PlannerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DemonstratorFailure { .. }), "{err}");
    }
}
