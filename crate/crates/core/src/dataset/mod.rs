//! Demonstration storage: trajectories, JSON-Lines files, trajectory-level
//! splits and `(s_t, a_t, s_{t+k})` minibatches.

mod io;
mod sample;
mod synthetic;

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gridworld::{Observation, TaskName};
use crate::rng::seeded;
use crate::{Error, Result};

pub use io::{load, read_from, save, write_to, FORMAT_NAME, FORMAT_VERSION};
pub use sample::{sample_batch, TransitionBatch, TransitionIndex};
pub(crate) use sample::sample_with_index;
pub use synthetic::TwoModeTask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Planner,
    Surrogate,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Planner => "planner",
            Provenance::Surrogate => "surrogate",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planner" => Ok(Provenance::Planner),
            "surrogate" => Ok(Provenance::Surrogate),
            _ => Err(Error::InvalidArgument(format!("unknown provenance `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub task: TaskName,
    pub seed: u64,
    pub observations: Vec<Observation>,
    pub actions: Vec<[f64; 2]>,
}

impl Trajectory {
    /// Number of actions (steps).
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.actions.is_empty() || self.observations.len() != self.actions.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "trajectory needs |actions| = |observations| - 1 >= 1, got {} and {}",
                self.actions.len(),
                self.observations.len()
            )));
        }
        let dim = self.task.obs_dim();
        if let Some(o) = self.observations.iter().find(|o| o.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: o.len(),
            });
        }
        if self
            .actions
            .iter()
            .flatten()
            .any(|a| !a.is_finite() || a.abs() > 1.0)
        {
            return Err(Error::InvalidArgument("action outside [-1, 1]^2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub trajectories: usize,
    pub total_steps: usize,
    pub min_len: usize,
    pub avg_len: f64,
    pub max_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub task: TaskName,
    pub provenance: Provenance,
    pub trajectories: Vec<Trajectory>,
}

impl Dataset {
    pub fn new(task: TaskName, provenance: Provenance, trajectories: Vec<Trajectory>) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::InvalidArgument("dataset must contain a trajectory".into()));
        }
        for t in &trajectories {
            if t.task != task {
                return Err(Error::InvalidArgument(format!(
                    "trajectory for {} in a {} dataset",
                    t.task, task
                )));
            }
            t.validate()?;
        }
        Ok(Self {
            task,
            provenance,
            trajectories,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.task.obs_dim()
    }

    pub fn total_steps(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn stats(&self) -> DatasetStats {
        let lens: Vec<usize> = self.trajectories.iter().map(Trajectory::len).collect();
        let total: usize = lens.iter().sum();
        DatasetStats {
            trajectories: lens.len(),
            total_steps: total,
            min_len: lens.iter().copied().min().unwrap_or(0),
            avg_len: total as f64 / lens.len().max(1) as f64,
            max_len: lens.iter().copied().max().unwrap_or(0),
        }
    }

    /// SHA-256 over the serialized file contents.
    pub fn fingerprint(&self) -> String {
        let mut buf = Vec::new();
        write_to(self, &mut buf).expect("writing to memory cannot fail");
        Sha256::digest(&buf).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn with_indices(&self, idx: &[usize]) -> Dataset {
        Dataset {
            task: self.task,
            provenance: self.provenance,
            trajectories: idx.iter().map(|&i| self.trajectories[i].clone()).collect(),
        }
    }

    /// Uniform sample of `n_traj` trajectories without replacement, kept in
    /// their original order.
    pub fn subsample(&self, n_traj: usize, seed: u64) -> Result<Dataset> {
        if n_traj == 0 || n_traj > self.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot subsample {n_traj} of {} trajectories",
                self.len()
            )));
        }
        let mut idx = index::sample(&mut seeded(seed), self.len(), n_traj).into_vec();
        idx.sort_unstable();
        Ok(self.with_indices(&idx))
    }

    /// Disjoint `(train, held_out)` split at trajectory granularity.
    pub fn split_by_trajectory(&self, n_train: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        if n_train == 0 || n_train >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "n_train must be in 1..{}, got {n_train}",
                self.len()
            )));
        }
        let mut train = index::sample(&mut seeded(seed), self.len(), n_train).into_vec();
        train.sort_unstable();
        let held: Vec<usize> = (0..self.len()).filter(|i| train.binary_search(i).is_err()).collect();
        Ok((self.with_indices(&train), self.with_indices(&held)))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Tiny four-room trajectory with deterministic contents.
    pub fn trajectory(seed: u64, len: usize) -> Trajectory {
        let dim = TaskName::FourRoom.obs_dim();
        let observations = (0..=len)
            .map(|t| {
                (0..dim)
                    .map(|d| ((seed as f64) * 0.1 + t as f64 * 0.01 + d as f64 * 1e-3) % 1.0)
                    .collect()
            })
            .collect();
        let actions = (0..len)
            .map(|t| [((t as f64) * 0.1).sin(), ((seed as f64) * 0.3).cos()])
            .collect();
        Trajectory {
            task: TaskName::FourRoom,
            seed,
            observations,
            actions,
        }
    }

    pub fn dataset(n: usize) -> Dataset {
        let trajs = (0..n).map(|i| trajectory(i as u64, 3 + i % 4)).collect();
        Dataset::new(TaskName::FourRoom, Provenance::Surrogate, trajs).unwrap()
    }
}
