use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::Architecture;
use super::optim::{AdamConfig, LrSchedule};
use crate::gridworld::TaskName;
use crate::kv::KvDoc;
use crate::{Error, Result};

/// Hidden widths of a policy network; the input width comes from the data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub encoder: Vec<usize>,
    pub batchnorm: bool,
    pub head: Vec<usize>,
}

impl NetShape {
    pub fn reference() -> Self {
        Self {
            encoder: vec![512, 1024, 256],
            batchnorm: true,
            head: vec![256, 2],
        }
    }

    /// Same topology as [`NetShape::reference`] at widths a single core trains in
    /// seconds.
    pub fn desk() -> Self {
        Self {
            encoder: vec![64, 64],
            batchnorm: true,
            head: vec![64, 2],
        }
    }

    pub fn architecture(&self, input: usize) -> Architecture {
        Architecture {
            input,
            encoder: self.encoder.clone(),
            batchnorm: self.batchnorm,
            head: self.head.clone(),
        }
    }
}

/// Training budget presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 100k steps at batch 4096 with the full-width network.
    Full,
    /// 20k steps at batch 512 with the full-width network.
    Ci,
    /// Small network and a few thousand steps; fits a single core.
    Desk,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Full => "full",
            Preset::Ci => "ci",
            Preset::Desk => "desk",
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Preset::Full),
            "ci" => Ok(Preset::Ci),
            "desk" => Ok(Preset::Desk),
            _ => Err(Error::InvalidArgument(format!("unknown preset `{s}` (full, ci, desk)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub total_steps: usize,
    pub lr_schedule: LrSchedule,
    pub grad_clip: Option<f64>,
    pub adam: AdamConfig,
    pub seed: u64,
    pub checkpoint_steps: Vec<usize>,
    pub shape: NetShape,
}

impl TrainConfig {
    /// Behavior cloning schedule for `task`.
    pub fn bc(task: TaskName, preset: Preset) -> Self {
        let decay = |start| LrSchedule::LinearDecay {
            start,
            end: 1e-6,
            steps: 50_000,
        };
        let (lr_schedule, grad_clip) = match task {
            TaskName::FourRoom => (decay(1e-3), Some(1.0)),
            TaskName::Zigzag | TaskName::Maze => (decay(1e-4), Some(1.0)),
            TaskName::Multiroom => (decay(1e-4), None),
        };
        Self::scaled(lr_schedule, grad_clip, preset)
    }

    /// Inverse dynamics schedule (task independent).
    pub fn idm(preset: Preset) -> Self {
        Self::scaled(LrSchedule::Constant { lr: 1e-5 }, None, preset)
    }

    fn scaled(lr_schedule: LrSchedule, grad_clip: Option<f64>, preset: Preset) -> Self {
        let base = Self {
            batch_size: 4096,
            total_steps: 100_000,
            lr_schedule,
            grad_clip,
            adam: AdamConfig::default(),
            seed: 0,
            checkpoint_steps: vec![5_000, 10_000, 50_000, 100_000],
            shape: NetShape::reference(),
        };
        match preset {
            Preset::Full => base,
            Preset::Ci => Self {
                batch_size: 512,
                total_steps: 20_000,
                checkpoint_steps: vec![1_000, 2_000, 10_000, 20_000],
                ..base
            },
            // The per-task schedules barely move a small network within a
            // few thousand steps, so both algorithms share one schedule here.
            Preset::Desk => Self::desk(),
        }
    }

    /// Shared schedule for both algorithms at desk scale.
    pub fn desk() -> Self {
        Self {
            batch_size: 128,
            total_steps: 3_000,
            lr_schedule: LrSchedule::LinearDecay {
                start: 1e-3,
                end: 1e-5,
                steps: 3_000,
            },
            grad_clip: Some(1.0),
            adam: AdamConfig::default(),
            seed: 0,
            checkpoint_steps: vec![500, 1_000, 2_000, 3_000],
            shape: NetShape::desk(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.batch_size == 0 || self.total_steps == 0 {
            return Err(Error::InvalidArgument("batch_size and total_steps must be positive".into()));
        }
        if let Some(&last) = self.checkpoint_steps.iter().max() {
            if last > self.total_steps {
                return Err(Error::InvalidArgument(format!(
                    "checkpoint at step {last} exceeds total_steps {}",
                    self.total_steps
                )));
            }
        }
        if self.checkpoint_steps.contains(&0) {
            return Err(Error::InvalidArgument("checkpoint steps are 1-based".into()));
        }
        if matches!(self.grad_clip, Some(c) if c <= 0.0) {
            return Err(Error::InvalidArgument("grad_clip must be positive".into()));
        }
        if self.shape.encoder.is_empty() || self.shape.head.last() != Some(&2) {
            return Err(Error::InvalidArgument("network needs an encoder and a 2-wide output".into()));
        }
        Ok(())
    }

    /// Reads `key = value` overrides on top of `base`. Recognized keys:
    /// `batch_size`, `total_steps`, `lr`, `grad_clip` (a number or `none`),
    /// `adam_beta1`, `adam_beta2`, `adam_eps`, `seed`, `checkpoint_steps`,
    /// `encoder`, `batchnorm`, `head`.
    pub fn parse_overrides(base: Self, text: &str, source: &str) -> Result<Self> {
        let doc = KvDoc::parse(text, source)?;
        let mut cfg = base;
        for e in &doc.entries {
            match e.key.as_str() {
                "batch_size" => cfg.batch_size = doc.usize_of(e)?,
                "total_steps" => cfg.total_steps = doc.usize_of(e)?,
                "lr" => cfg.lr_schedule = e.value.parse().map_err(|m: String| doc.err(e, m))?,
                "grad_clip" => {
                    cfg.grad_clip = if e.value == "none" { None } else { Some(doc.f64_of(e)?) }
                }
                "adam_beta1" => cfg.adam.beta1 = doc.f64_of(e)?,
                "adam_beta2" => cfg.adam.beta2 = doc.f64_of(e)?,
                "adam_eps" => cfg.adam.eps = doc.f64_of(e)?,
                "seed" => cfg.seed = e.value.parse().map_err(|_| doc.err(e, "seed must be an integer"))?,
                "checkpoint_steps" => cfg.checkpoint_steps = doc.list_of(e)?,
                "encoder" => cfg.shape.encoder = doc.list_of(e)?,
                "head" => cfg.shape.head = doc.list_of(e)?,
                "batchnorm" => {
                    cfg.shape.batchnorm = e.value.parse().map_err(|_| doc.err(e, "expected true or false"))?
                }
                other => return Err(doc.err(e, format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_overrides(base: Self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_overrides(base, &text, &path.display().to_string())
    }
}
