//! BC and PIDM policies: training loops, the nearest-neighbour state
//! predictor, rollout agents and checkpoint evaluation.

mod agent;
mod predictor;
mod train;

pub use agent::{
    evaluate_best_checkpoint, evaluate_checkpoints, rollout, Agent, ConstantAgent, PidmAgent, PlannerAgent,
};
pub use predictor::InstancePredictor;
pub use train::{train_bc, train_idm, BcPolicy, Checkpoint, IdmPolicy, Trained};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Bc,
    Pidm,
}

impl Algo {
    pub const ALL: [Algo; 2] = [Algo::Bc, Algo::Pidm];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Bc => "bc",
            Algo::Pidm => "pidm",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "bc" => Ok(Algo::Bc),
            "pidm" => Ok(Algo::Pidm),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm `{s}`"))),
        }
    }
}
