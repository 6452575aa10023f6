use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Cell, SweepConfig};
use crate::dataset::{self, Dataset};
use crate::demonstrator::{collect_dataset, PlannerConfig};
use crate::gridworld::{TaskName, TaskSpec};
use crate::policies::{evaluate_checkpoints, train_bc, train_idm, Algo, InstancePredictor, PidmAgent};
use crate::rng::derive_seed;
use crate::theory::{empirical_efficiency, CurvePoint, EfficiencyReport, THRESHOLDS};
use crate::Result;

pub const CSV_VERSION: u32 = 1;

/// Outcome of one `(task, algo, n, seed)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub task: TaskName,
    pub algo: Algo,
    pub n: usize,
    pub seed: u64,
    /// `(step, mean goal fraction)` per checkpoint.
    pub checkpoints: Vec<(usize, f64)>,
    pub best: Option<f64>,
    pub wall_time_s: f64,
    pub data_fingerprint: String,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn cell(&self) -> Cell {
        Cell {
            task: self.task,
            algo: self.algo,
            n: self.n,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub records: Vec<RunRecord>,
    pub efficiency: Vec<(TaskName, EfficiencyReport)>,
    /// Cells executed in this call (the rest were loaded from disk).
    pub executed: usize,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

fn runs_dir(cfg: &SweepConfig) -> PathBuf {
    cfg.output_dir.join("runs")
}

/// Loads the task's demonstrations from the output directory, collecting and
/// saving them first if absent.
pub fn ensure_dataset(cfg: &SweepConfig, task: TaskName) -> Result<Dataset> {
    let path = cfg
        .output_dir
        .join("data")
        .join(format!("{}_{}_{}_seed{}.jsonl", task, cfg.provenance, cfg.demos, cfg.data_seed));
    if path.exists() {
        return dataset::load(&path);
    }
    let spec = TaskSpec::builtin(task);
    let (ds, report) = collect_dataset(&spec, cfg.provenance, cfg.demos, cfg.data_seed, &PlannerConfig::default())?;
    info!("collected {} {} demos ({} discarded)", cfg.demos, task, report.discarded);
    std::fs::create_dir_all(path.parent().expect("data path has a parent"))?;
    dataset::save(&ds, &path)?;
    Ok(ds)
}

/// Trains one cell and evaluates each checkpoint. Rollout seeds depend only
/// on the cell seed, so BC and PIDM share evaluation episodes.
pub fn run_cell(cfg: &SweepConfig, cell: Cell, full: &Dataset) -> Result<Vec<(usize, f64)>> {
    let ds = full.subsample(cell.n, cell.seed)?;
    let task = TaskSpec::builtin(cell.task);
    let train_cfg = cfg.train_config(cell.task, cell.algo, cell.seed);
    let eval_seed = derive_seed(cell.seed, 0xE7A1);
    match cell.algo {
        Algo::Bc => {
            let t = train_bc(&ds, &train_cfg, None)?;
            evaluate_checkpoints(&t.checkpoints, |p| Ok(p.clone()), &task, cfg.rollouts_per_eval, eval_seed)
        }
        Algo::Pidm => {
            let t = train_idm(&ds, &[cfg.k], false, &train_cfg, None)?;
            let predictor = Arc::new(InstancePredictor::new(&ds, cfg.k)?);
            evaluate_checkpoints(
                &t.checkpoints,
                |p| PidmAgent::new(predictor.clone(), p.clone(), cfg.k),
                &task,
                cfg.rollouts_per_eval,
                eval_seed,
            )
        }
    }
}

fn execute(cfg: &SweepConfig, hash: &str, cell: Cell, full: &Result<Dataset>) -> RunRecord {
    let start = Instant::now();
    let (fingerprint, result) = match full {
        Ok(ds) => (ds.fingerprint(), run_cell(cfg, cell, ds)),
        Err(e) => (String::new(), Err(crate::Error::InvalidArgument(format!("dataset unavailable: {e}")))),
    };
    let (checkpoints, error) = match result {
        Ok(c) => (c, None),
        Err(e) => {
            warn!("cell {} failed: {e}", cell.id(hash));
            (Vec::new(), Some(e.to_string()))
        }
    };
    RunRecord {
        config_hash: hash.to_string(),
        task: cell.task,
        algo: cell.algo,
        n: cell.n,
        seed: cell.seed,
        best: checkpoints.iter().map(|c| c.1).reduce(f64::max),
        checkpoints,
        wall_time_s: start.elapsed().as_secs_f64(),
        data_fingerprint: fingerprint,
        error,
    }
}

/// Runs every cell of the grid that has no stored record, then writes the
/// CSV outputs. Failed cells are recorded and never abort the sweep; they are
/// retried on the next call.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let hash = cfg.content_hash();
    let dir = runs_dir(cfg);
    std::fs::create_dir_all(&dir)?;

    let cells = cfg.cells();
    let mut stored: BTreeMap<Cell, RunRecord> = BTreeMap::new();
    for cell in &cells {
        let path = dir.join(format!("{}.json", cell.id(&hash)));
        if path.exists() {
            let rec: RunRecord = serde_json::from_slice(&std::fs::read(&path)?)?;
            if rec.error.is_none() {
                stored.insert(*cell, rec);
            }
        }
    }
    let pending: Vec<Cell> = cells.iter().copied().filter(|c| !stored.contains_key(c)).collect();
    let tasks: Vec<TaskName> = {
        let mut t: Vec<TaskName> = pending.iter().map(|c| c.task).collect();
        t.dedup();
        t
    };
    let data: BTreeMap<TaskName, Result<Dataset>> = tasks.iter().map(|&t| (t, ensure_dataset(cfg, t))).collect();

    let fresh: Vec<RunRecord> = pending
        .par_iter()
        .map(|&cell| execute(cfg, &hash, cell, &data[&cell.task]))
        .collect();
    for rec in &fresh {
        let path = dir.join(format!("{}.json", rec.cell().id(&hash)));
        std::fs::write(path, serde_json::to_vec_pretty(rec)?)?;
    }
    let executed = fresh.len();
    for rec in fresh {
        stored.insert(rec.cell(), rec);
    }
    let records: Vec<RunRecord> = cells.iter().map(|c| stored.remove(c).expect("every cell has a record")).collect();
    let efficiency = efficiency_by_task(&records);
    write_outputs(cfg, &records, &efficiency)?;
    Ok(SweepOutcome {
        records,
        efficiency,
        executed,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Mean and sample standard deviation of the best-checkpoint value over
/// seeds, per `(task, algo, n)`. Failed cells are left out.
pub fn curves(records: &[RunRecord]) -> BTreeMap<TaskName, Vec<CurvePoint>> {
    let mut groups: BTreeMap<(TaskName, Algo, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(b) = r.best {
            groups.entry((r.task, r.algo, r.n)).or_default().push(b);
        }
    }
    let mut out: BTreeMap<TaskName, Vec<CurvePoint>> = BTreeMap::new();
    for ((task, algo, n), v) in groups {
        let (mean, std) = mean_std(&v);
        out.entry(task).or_default().push(CurvePoint { algo, n, mean, std });
    }
    out
}

pub fn efficiency_by_task(records: &[RunRecord]) -> Vec<(TaskName, EfficiencyReport)> {
    curves(records)
        .into_iter()
        .map(|(t, c)| (t, empirical_efficiency(&c, &THRESHOLDS)))
        .collect()
}

fn header(cfg: &SweepConfig, schema: &str) -> String {
    let mut s = format!("# {schema} v{CSV_VERSION}; config {}\n", cfg.content_hash());
    for f in cfg.deviation_flags() {
        let _ = writeln!(s, "# deviation: {f}");
    }
    s
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "not_reached".into(), |x| x.to_string())
}

pub fn sample_efficiency_csv(records: &[RunRecord]) -> String {
    let mut s = String::from("task,algo,n,mean,std\n");
    for (task, pts) in curves(records) {
        for p in pts {
            let _ = writeln!(s, "{task},{},{},{:.6},{:.6}", p.algo, p.n, p.mean, p.std);
        }
    }
    s
}

/// One column per task: maximum mean goal fraction of each algorithm, then
/// the efficiency ratio at each threshold.
pub fn eta_table_csv(efficiency: &[(TaskName, EfficiencyReport)]) -> String {
    let mut s = String::from("metric");
    for (t, _) in efficiency {
        let _ = write!(s, ",{t}");
    }
    s.push('\n');
    for algo in Algo::ALL {
        let _ = write!(s, "max_{algo}");
        for (_, r) in efficiency {
            let m = r.curves.iter().filter(|c| c.algo == algo).map(|c| c.mean).reduce(f64::max);
            let _ = write!(s, ",{}", m.map_or("-".into(), |v| format!("{v:.4}")));
        }
        s.push('\n');
    }
    for (i, th) in THRESHOLDS.iter().enumerate() {
        let _ = write!(s, "eta_{}", (th * 100.0).round());
        for (_, r) in efficiency {
            let _ = write!(s, ",{}", fmt_opt(r.rows[i].eta.map(|e| format!("{e:.3}"))));
        }
        s.push('\n');
    }
    s
}

pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut s = String::from("task,algo,n,seed,best,checkpoints,error\n");
    for r in records {
        let ck: Vec<String> = r.checkpoints.iter().map(|(st, v)| format!("{st}:{v:.6}")).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.task,
            r.algo,
            r.n,
            r.seed,
            r.best.map_or("".into(), |b| format!("{b:.6}")),
            ck.join(";"),
            r.error.as_deref().unwrap_or("").replace([',', '\n'], " ")
        );
    }
    s
}

fn write_outputs(cfg: &SweepConfig, records: &[RunRecord], eff: &[(TaskName, EfficiencyReport)]) -> Result<()> {
    let out = &cfg.output_dir;
    write(out, "sample_efficiency.csv", header(cfg, "sample_efficiency") + &sample_efficiency_csv(records))?;
    write(out, "eta_table.csv", header(cfg, "eta_table") + &eta_table_csv(eff))?;
    write(out, "runs.csv", header(cfg, "runs") + &runs_csv(records))?;
    std::fs::write(out.join("sweep_config.json"), serde_json::to_vec_pretty(cfg)?)?;
    Ok(())
}

fn write(dir: &Path, name: &str, text: String) -> Result<()> {
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(algo: Algo, n: usize, seed: u64, best: Option<f64>) -> RunRecord {
        RunRecord {
            config_hash: "h".into(),
            task: TaskName::FourRoom,
            algo,
            n,
            seed,
            checkpoints: best.map(|b| vec![(1, b)]).unwrap_or_default(),
            best,
            wall_time_s: 0.0,
            data_fingerprint: String::new(),
            error: best.is_none().then(|| "boom".into()),
        }
    }

    #[test]
    fn curves_skip_failed_cells() {
        let r = vec![
            rec(Algo::Bc, 1, 0, Some(0.5)),
            rec(Algo::Bc, 1, 1, Some(0.7)),
            rec(Algo::Bc, 1, 2, None),
        ];
        let c = &curves(&r)[&TaskName::FourRoom];
        assert_eq!(c.len(), 1);
        assert!((c[0].mean - 0.6).abs() < 1e-12);
        assert!((c[0].std - 0.02f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn eta_table_layout() {
        let r = vec![
            rec(Algo::Bc, 1, 0, Some(0.5)),
            rec(Algo::Bc, 5, 0, Some(1.0)),
            rec(Algo::Pidm, 1, 0, Some(0.95)),
            rec(Algo::Pidm, 5, 0, Some(1.0)),
        ];
        let t = eta_table_csv(&efficiency_by_task(&r));
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "metric,four_room");
        assert_eq!(lines[3], "eta_80,5.000");
        assert_eq!(lines[5], "eta_95,5.000");
    }
}
