use std::sync::Arc;

use rayon::prelude::*;

use super::predictor::InstancePredictor;
use super::train::{BcPolicy, Checkpoint, IdmPolicy};
use crate::dataset::Provenance;
use crate::demonstrator::{Demonstrator, PlannerConfig};
use crate::gridworld::{fraction_goals_reached, observe, reset, step, EnvState, TaskSpec};
use crate::rng::{derived, Rng};
use crate::{Error, Result};

/// Anything that maps the current state to a commanded action.
pub trait Agent {
    /// Clears per-episode state.
    fn reset(&mut self) {}

    fn act(&mut self, state: &EnvState, obs: &[f64], rng: &mut Rng) -> Result<[f64; 2]>;
}

impl Agent for BcPolicy {
    fn act(&mut self, _: &EnvState, obs: &[f64], _: &mut Rng) -> Result<[f64; 2]> {
        BcPolicy::act(self, obs)
    }
}

/// Predicts the future with the instance predictor, then asks the IDM for
/// the action that leads there.
#[derive(Debug, Clone)]
pub struct PidmAgent {
    pub predictor: Arc<InstancePredictor>,
    pub idm: IdmPolicy,
    pub eval_k: usize,
}

impl PidmAgent {
    pub fn new(predictor: Arc<InstancePredictor>, idm: IdmPolicy, eval_k: usize) -> Result<Self> {
        if !idm.trained_k.contains(&eval_k) {
            return Err(Error::InvalidArgument(format!(
                "eval_k {eval_k} not in trained set {:?}",
                idm.trained_k
            )));
        }
        Ok(Self {
            predictor,
            idm,
            eval_k,
        })
    }
}

impl Agent for PidmAgent {
    fn act(&mut self, _: &EnvState, obs: &[f64], _: &mut Rng) -> Result<[f64; 2]> {
        let future = self.predictor.predict_k(obs, self.eval_k)?;
        self.idm.act(obs, &future, self.eval_k)
    }
}

/// The scripted demonstrator as a rollout agent.
#[derive(Debug, Clone)]
pub struct PlannerAgent(pub Demonstrator);

impl PlannerAgent {
    pub fn new(task: &TaskSpec, provenance: Provenance) -> Result<Self> {
        Ok(Self(Demonstrator::new(task, PlannerConfig::default(), provenance)?))
    }
}

impl Agent for PlannerAgent {
    fn reset(&mut self) {
        self.0.reset();
    }

    fn act(&mut self, state: &EnvState, _: &[f64], rng: &mut Rng) -> Result<[f64; 2]> {
        self.0.act(state, rng)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantAgent(pub [f64; 2]);

impl Agent for ConstantAgent {
    fn act(&mut self, _: &EnvState, _: &[f64], _: &mut Rng) -> Result<[f64; 2]> {
        Ok(self.0)
    }
}

/// Goal fraction reached in each of `n_rollouts` episodes. Episode `i` uses
/// generators derived from `(seed, i)`, so results do not depend on thread
/// scheduling.
pub fn rollout<A>(task: &TaskSpec, agent: &A, n_rollouts: usize, seed: u64) -> Result<Vec<f64>>
where
    A: Agent + Clone + Send + Sync,
{
    (0..n_rollouts)
        .into_par_iter()
        .map(|i| {
            let mut agent = agent.clone();
            agent.reset();
            let mut env_rng = derived(seed, 2 * i as u64);
            let mut agent_rng = derived(seed, 2 * i as u64 + 1);
            let mut state = reset(task, &mut env_rng);
            while !state.is_done(task) {
                let obs = observe(&state, task);
                let a = agent.act(&state, &obs, &mut agent_rng)?;
                let a = [a[0].clamp(-1.0, 1.0), a[1].clamp(-1.0, 1.0)];
                state = step(&state, a, task, &mut env_rng)?.0;
            }
            Ok(fraction_goals_reached(&state))
        })
        .collect()
}

/// Mean goal fraction for every checkpoint, in checkpoint order.
pub fn evaluate_checkpoints<P, A>(
    checkpoints: &[Checkpoint<P>],
    make_agent: impl Fn(&P) -> Result<A>,
    task: &TaskSpec,
    n_rollouts: usize,
    seed: u64,
) -> Result<Vec<(usize, f64)>>
where
    A: Agent + Clone + Send + Sync,
{
    checkpoints
        .iter()
        .map(|c| {
            let agent = make_agent(&c.policy)?;
            let fr = rollout(task, &agent, n_rollouts, seed)?;
            Ok((c.step, fr.iter().sum::<f64>() / fr.len().max(1) as f64))
        })
        .collect()
}

/// Largest per-checkpoint mean goal fraction.
pub fn evaluate_best_checkpoint<P, A>(
    checkpoints: &[Checkpoint<P>],
    make_agent: impl Fn(&P) -> Result<A>,
    task: &TaskSpec,
    n_rollouts: usize,
    seed: u64,
) -> Result<f64>
where
    A: Agent + Clone + Send + Sync,
{
    if checkpoints.is_empty() {
        return Err(Error::InvalidArgument("no checkpoints to evaluate".into()));
    }
    let means = evaluate_checkpoints(checkpoints, make_agent, task, n_rollouts, seed)?;
    Ok(means.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::TaskName;

    #[test]
    fn idle_agent_without_noise_reaches_nothing() {
        let mut task = TaskSpec::builtin(TaskName::FourRoom);
        task.noise_std = 0.0;
        let fr = rollout(&task, &ConstantAgent([0.0, 0.0]), 5, 0).unwrap();
        assert!(fr.iter().all(|f| *f == 0.0));
    }

    #[test]
    fn planner_agent_succeeds_and_is_deterministic() {
        for name in TaskName::ALL {
            let task = TaskSpec::builtin(name);
            let agent = PlannerAgent::new(&task, Provenance::Planner).unwrap();
            let a = rollout(&task, &agent, 20, 3).unwrap();
            let full = a.iter().filter(|f| **f == 1.0).count();
            assert!(full * 100 >= 95 * a.len(), "{name}: {full}/20");
            assert_eq!(a, rollout(&task, &agent, 20, 3).unwrap());
        }
    }

    #[test]
    fn best_checkpoint_is_the_max() {
        let task = TaskSpec::builtin(TaskName::FourRoom);
        let ck = |step, a: [f64; 2]| Checkpoint { step, policy: a };
        let make = |a: &[f64; 2]| Ok(ConstantAgent(*a));
        let one = vec![ck(1, [1.0, 0.0])];
        let single = evaluate_best_checkpoint(&one, make, &task, 4, 0).unwrap();
        let own = evaluate_checkpoints(&one, make, &task, 4, 0).unwrap()[0].1;
        assert_eq!(single, own);
        let two = vec![ck(1, [1.0, 0.0]), ck(2, [-1.0, -1.0])];
        assert_eq!(evaluate_best_checkpoint(&two, make, &task, 4, 0).unwrap(), single);
        let none: Vec<Checkpoint<[f64; 2]>> = vec![];
        assert!(evaluate_best_checkpoint(&none, make, &task, 4, 0).is_err());
    }
}
