use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Dataset, Provenance, Trajectory};
use crate::gridworld::TaskName;
use crate::rng::derived;
use crate::Result;

/// One-step task with two equally likely actions per state,
/// `(+half_width, drift)` and `(-half_width, drift)`, and a noise-free
/// transition `s' = s + step * a` on the agent coordinates. Every other
/// observation entry is zero.
///
/// `Var(a|s) = half_width^2` while the future pins the action down, so the
/// optimal BC error is `half_width^2`, the optimal IDM error is zero and the
/// gap equals `half_width^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeTask {
    pub half_width: f64,
    pub drift: f64,
    pub step: f64,
}

impl Default for TwoModeTask {
    fn default() -> Self {
        Self {
            half_width: 0.8,
            drift: 0.3,
            step: 0.1,
        }
    }
}

impl TwoModeTask {
    pub fn analytic_delta(&self) -> f64 {
        self.half_width * self.half_width
    }

    /// `n` single-step trajectories with starts uniform in `[0.2, 0.8]^2`.
    pub fn dataset(&self, n: usize, seed: u64) -> Result<Dataset> {
        let task = TaskName::FourRoom;
        let dim = task.obs_dim();
        let trajs = (0..n)
            .map(|i| {
                let mut rng = derived(seed, i as u64);
                let (x, y) = (rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8));
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let a = [sign * self.half_width, self.drift];
                let mut s0 = vec![0.0; dim];
                s0[0] = x;
                s0[1] = y;
                let mut s1 = s0.clone();
                s1[0] += self.step * a[0];
                s1[1] += self.step * a[1];
                Trajectory {
                    task,
                    seed: i as u64,
                    observations: vec![s0, s1],
                    actions: vec![a],
                }
            })
            .collect();
        Dataset::new(task, Provenance::Surrogate, trajs)
    }
}
