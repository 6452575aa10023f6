use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::sha256_hex;
use super::sweep::{curves, efficiency_by_task, RunRecord};
use crate::gridworld::TaskName;
use crate::theory::{CurvePoint, EfficiencyReport};
use crate::Result;

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub cells: usize,
    pub failures: usize,
    pub sum_best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config_hashes: Vec<String>,
    pub sweep_config: Option<Value>,
    pub totals: Totals,
    pub curves: BTreeMap<TaskName, Vec<CurvePoint>>,
    pub efficiency: Vec<(TaskName, EfficiencyReport)>,
    /// File name to SHA-256 of every stored dataset.
    pub datasets: BTreeMap<String, String>,
    /// Parsed JSON of every file in `analyses/` and of `theory.json`, by name.
    pub analyses: BTreeMap<String, Value>,
    pub records: Vec<RunRecord>,
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<std::path::PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    out.sort();
    Ok(out)
}

fn name_of(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Consolidates everything found under `run_dir` into one report. Missing
/// pieces are simply absent, so an empty directory gives an empty report.
pub fn build_report(run_dir: &Path) -> Result<Report> {
    let mut records: Vec<RunRecord> = Vec::new();
    for p in sorted_files(&run_dir.join("runs"), "json")? {
        records.push(serde_json::from_slice(&std::fs::read(&p)?)?);
    }
    records.sort_by(|a, b| (a.task, a.algo, a.n, a.seed, &a.config_hash).cmp(&(b.task, b.algo, b.n, b.seed, &b.config_hash)));
    let mut config_hashes: Vec<String> = records.iter().map(|r| r.config_hash.clone()).collect();
    config_hashes.sort();
    config_hashes.dedup();

    let sweep_path = run_dir.join("sweep_config.json");
    let sweep_config = if sweep_path.exists() {
        Some(serde_json::from_slice(&std::fs::read(&sweep_path)?)?)
    } else {
        None
    };

    let mut datasets = BTreeMap::new();
    for p in sorted_files(&run_dir.join("data"), "jsonl")? {
        datasets.insert(name_of(&p), sha256_hex(&std::fs::read(&p)?));
    }

    let mut analyses = BTreeMap::new();
    let mut json_files = sorted_files(&run_dir.join("analyses"), "json")?;
    let theory = run_dir.join("theory.json");
    if theory.exists() {
        json_files.push(theory);
    }
    for p in json_files {
        analyses.insert(name_of(&p), serde_json::from_slice(&std::fs::read(&p)?)?);
    }

    let totals = Totals {
        cells: records.len(),
        failures: records.iter().filter(|r| r.error.is_some()).count(),
        sum_best: records.iter().filter_map(|r| r.best).sum(),
    };
    Ok(Report {
        config_hashes,
        sweep_config,
        totals,
        curves: curves(&records),
        efficiency: efficiency_by_task(&records),
        datasets,
        analyses,
        records,
    })
}

/// Builds the report and writes it to `run_dir/report.json`.
pub fn report(run_dir: &Path) -> Result<Report> {
    let r = build_report(run_dir)?;
    std::fs::create_dir_all(run_dir)?;
    let mut value = serde_json::to_value(&r)?;
    // wall times differ between otherwise identical runs
    if let Some(recs) = value.get_mut("records").and_then(Value::as_array_mut) {
        for rec in recs {
            if let Some(obj) = rec.as_object_mut() {
                obj.remove("wall_time_s");
            }
        }
    }
    std::fs::write(run_dir.join(REPORT_FILE), serde_json::to_vec_pretty(&value)?)?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_gives_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(dir.path()).unwrap();
        assert_eq!(r.totals.cells, 0);
        assert!(r.records.is_empty() && r.efficiency.is_empty());
        let text = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert!(v.is_object());
    }

    #[test]
    fn regeneration_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("analyses")).unwrap();
        std::fs::write(dir.path().join("analyses/x.json"), "{\"a\": 1}").unwrap();
        report(dir.path()).unwrap();
        let first = std::fs::read(dir.path().join(REPORT_FILE)).unwrap();
        report(dir.path()).unwrap();
        assert_eq!(first, std::fs::read(dir.path().join(REPORT_FILE)).unwrap());
    }
}
