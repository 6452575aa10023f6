use serde::{Deserialize, Serialize};

use crate::dataset::TwoModeTask;
use crate::nn::TrainConfig;
use crate::policies::{train_bc, train_idm};
use crate::rng::derive_seed;
use crate::Result;

/// Learned BC and IDM errors on the two-mode task, measured on fresh data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticGap {
    pub delta_analytic: f64,
    pub epe_bc: f64,
    pub epe_idm: f64,
}

impl SyntheticGap {
    pub fn gap(&self) -> f64 {
        self.epe_bc - self.epe_idm
    }
}

/// Trains both policies on `n` transitions of `task` and scores them on
/// another `n` drawn with an independent seed.
pub fn synthetic_gap(task: &TwoModeTask, n: usize, cfg: &TrainConfig) -> Result<SyntheticGap> {
    let train = task.dataset(n, derive_seed(cfg.seed, 0))?;
    let test = task.dataset(n, derive_seed(cfg.seed, 1))?;
    let bc = train_bc(&train, cfg, None)?.policy;
    let idm = train_idm(&train, &[1], false, cfg, None)?.policy;
    Ok(SyntheticGap {
        delta_analytic: task.analytic_delta(),
        epe_bc: bc.mse(&test)?,
        epe_idm: idm.mse(&test, 1)?,
    })
}
