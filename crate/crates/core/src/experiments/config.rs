use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Provenance;
use crate::gridworld::TaskName;
use crate::kv::KvDoc;
use crate::nn::{Preset, TrainConfig};
use crate::policies::Algo;
use crate::{Error, Result};

pub const FULL_N_GRID: [usize; 8] = [1, 2, 5, 10, 20, 30, 40, 50];

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Grid of `(task, algo, n, seed)` cells plus the settings shared by every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub tasks: Vec<TaskName>,
    pub algos: Vec<Algo>,
    pub n_grid: Vec<usize>,
    pub seeds: usize,
    pub rollouts_per_eval: usize,
    pub preset: Preset,
    /// Overrides the preset's checkpoint steps when set.
    pub checkpoint_steps: Option<Vec<usize>>,
    pub provenance: Provenance,
    /// Demonstrations collected per task; the `n` of each cell is drawn from these.
    pub demos: usize,
    pub data_seed: u64,
    /// Lookahead used to train and run the IDM.
    pub k: usize,
    pub output_dir: PathBuf,
}

impl SweepConfig {
    /// Defaults for a preset: 20 seeds (50 on planner data) at full scale,
    /// 5 seeds for the ci and desk presets.
    pub fn preset(preset: Preset, provenance: Provenance, output_dir: impl Into<PathBuf>) -> Self {
        let seeds = match (preset, provenance) {
            (Preset::Full, Provenance::Planner) => 50,
            (Preset::Full, Provenance::Surrogate) => 20,
            _ => 5,
        };
        Self {
            tasks: TaskName::ALL.to_vec(),
            algos: Algo::ALL.to_vec(),
            n_grid: FULL_N_GRID.to_vec(),
            seeds,
            rollouts_per_eval: 50,
            preset,
            checkpoint_steps: None,
            provenance,
            demos: 50,
            data_seed: 0,
            k: 1,
            output_dir: output_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.tasks.is_empty() || self.algos.is_empty() || self.n_grid.is_empty() {
            return bad("tasks, algos and n_grid must be non-empty");
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] == 0 {
            return bad("n_grid must be positive and strictly ascending");
        }
        if *self.n_grid.last().unwrap() > self.demos {
            return bad("n_grid exceeds the number of demonstrations");
        }
        if self.seeds == 0 || self.rollouts_per_eval == 0 || self.k == 0 {
            return bad("seeds, rollouts_per_eval and k must be at least 1");
        }
        for t in &self.tasks {
            self.train_config(*t, Algo::Bc, 0).validate()?;
        }
        Ok(())
    }

    pub fn train_config(&self, task: TaskName, algo: Algo, seed: u64) -> TrainConfig {
        let mut cfg = match algo {
            Algo::Bc => TrainConfig::bc(task, self.preset),
            Algo::Pidm => TrainConfig::idm(self.preset),
        };
        if let Some(steps) = &self.checkpoint_steps {
            cfg.checkpoint_steps = steps.clone();
        }
        cfg.with_seed(seed)
    }

    /// Hash over every setting that can change a cell's result. Seeds count
    /// and output directory are excluded so that growing a sweep or moving it
    /// keeps completed cells valid.
    pub fn content_hash(&self) -> String {
        let key = serde_json::json!({
            "preset": self.preset,
            "checkpoint_steps": self.checkpoint_steps,
            "provenance": self.provenance,
            "demos": self.demos,
            "data_seed": self.data_seed,
            "k": self.k,
            "rollouts": self.rollouts_per_eval,
        });
        sha256_hex(key.to_string().as_bytes())[..16].to_string()
    }

    /// Cartesian product of the grid, in task, algo, n, seed order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &task in &self.tasks {
            for &algo in &self.algos {
                for &n in &self.n_grid {
                    for seed in 0..self.seeds as u64 {
                        out.push(Cell { task, algo, n, seed });
                    }
                }
            }
        }
        out
    }

    /// Deviation flags written into every output of a reduced-scale preset.
    pub fn deviation_flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        match self.preset {
            Preset::Full => {}
            Preset::Ci => flags.push("ci preset: 20000 steps, batch 512, reduced seeds".to_string()),
            Preset::Desk => flags.push(
                "desk preset: 64-wide network, 3000 steps, batch 128, linear decay 1e-3 to 1e-5".to_string(),
            ),
        }
        if self.provenance == Provenance::Surrogate {
            flags.push("scripted noisy surrogate demonstrations stand in for human data".into());
        }
        if self.checkpoint_steps.is_some() {
            flags.push("checkpoint steps overridden".into());
        }
        flags.push("seed controls both demonstration subsampling and initialization".into());
        flags
    }

    /// Applies `key = value` overrides; unknown keys are errors.
    pub fn parse_overrides(base: Self, text: &str, source: &str) -> Result<Self> {
        let doc = KvDoc::parse(text, source)?;
        let mut cfg = base;
        for e in &doc.entries {
            match e.key.as_str() {
                "tasks" => cfg.tasks = doc.list_of(e)?,
                "algos" => cfg.algos = doc.list_of(e)?,
                "n_grid" => cfg.n_grid = doc.list_of(e)?,
                "seeds" => cfg.seeds = doc.usize_of(e)?,
                "rollouts_per_eval" => cfg.rollouts_per_eval = doc.usize_of(e)?,
                "preset" => cfg.preset = e.value.parse().map_err(|_| doc.err(e, "unknown preset"))?,
                "checkpoint_steps" => cfg.checkpoint_steps = Some(doc.list_of(e)?),
                "provenance" => cfg.provenance = e.value.parse().map_err(|_| doc.err(e, "unknown provenance"))?,
                "demos" => cfg.demos = doc.usize_of(e)?,
                "data_seed" => cfg.data_seed = e.value.parse().map_err(|_| doc.err(e, "expected an integer"))?,
                "k" => cfg.k = doc.usize_of(e)?,
                "output_dir" => cfg.output_dir = PathBuf::from(&e.value),
                other => return Err(doc.err(e, format!("unknown key `{other}`"))),
            }
        }
        cfg.validate().map_err(|err| Error::parse(source, 0, err.to_string()))?;
        Ok(cfg)
    }

    pub fn load_overrides(base: Self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_overrides(base, &text, &path.display().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub task: TaskName,
    pub algo: Algo,
    pub n: usize,
    pub seed: u64,
}

impl Cell {
    pub fn id(&self, config_hash: &str) -> String {
        format!("{config_hash}_{}_{}_n{}_s{}", self.task, self.algo, self.n, self.seed)
    }
}
