use std::path::Path;

use pidm_core::dataset::{Dataset, Provenance, Trajectory};
use pidm_core::demonstrator::{collect_dataset, PlannerConfig};
use pidm_core::experiments::{
    angular_spreads, build_report, export_vector_field, report, run_sweep, vector_field_at, vector_field_csv,
    SweepConfig,
};
use pidm_core::gridworld::{TaskName, TaskSpec};
use pidm_core::nn::{Preset, TrainConfig};
use pidm_core::policies::{train_idm, Algo};
use pidm_core::theory::delta_per_state_empirical;

fn small_sweep(dir: &Path, seeds: usize) -> SweepConfig {
    let mut cfg = SweepConfig::preset(Preset::Desk, Provenance::Planner, dir);
    cfg.tasks = vec![TaskName::FourRoom];
    cfg.algos = vec![Algo::Bc];
    cfg.n_grid = vec![1];
    cfg.seeds = seeds;
    cfg.rollouts_per_eval = 5;
    cfg.demos = 5;
    cfg
}

fn obs(x: f64, y: f64) -> Vec<f64> {
    let task = TaskSpec::builtin(TaskName::FourRoom);
    let mut o = vec![x, y];
    for g in &task.goals {
        o.extend([g[0] / task.world_size, g[1] / task.world_size, 0.0]);
    }
    o
}

#[test]
fn one_task_one_algo_two_seeds_gives_two_records_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sweep(dir.path(), 2);
    let first = run_sweep(&cfg).unwrap();
    assert_eq!(first.records.len(), 2);
    assert_eq!(first.executed, 2);
    assert_eq!(first.failures(), 0);
    let csv = std::fs::read(dir.path().join("sample_efficiency.csv")).unwrap();

    let again = run_sweep(&cfg).unwrap();
    assert_eq!(again.executed, 0);
    assert_eq!(again.records, first.records);
    assert_eq!(std::fs::read(dir.path().join("sample_efficiency.csv")).unwrap(), csv);
}

#[test]
fn unreadable_data_fails_cells_without_aborting_and_is_retried() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sweep(dir.path(), 2);
    let data = dir.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    let path = data.join(format!("four_room_planner_{}_seed0.jsonl", cfg.demos));
    std::fs::write(&path, "not a dataset\n").unwrap();

    let broken = run_sweep(&cfg).unwrap();
    assert_eq!(broken.records.len(), 2);
    assert_eq!(broken.failures(), 2);
    assert!(broken.records.iter().all(|r| r.best.is_none()));

    std::fs::remove_file(&path).unwrap();
    let fixed = run_sweep(&cfg).unwrap();
    assert_eq!(fixed.executed, 2);
    assert_eq!(fixed.failures(), 0);
}

#[test]
fn report_totals_match_the_runs_csv() {
    let dir = tempfile::tempdir().unwrap();
    run_sweep(&small_sweep(dir.path(), 3)).unwrap();
    let r = report(dir.path()).unwrap();

    let text = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "best").unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let sum: f64 = rows.iter().filter_map(|r| r[col].parse::<f64>().ok()).sum();

    assert_eq!(r.totals.cells, rows.len());
    assert_eq!(r.totals.failures, 0);
    assert!((r.totals.sum_best - sum).abs() < 1e-5 * rows.len() as f64);
    assert_eq!(r.datasets.len(), 1);
    assert_eq!(build_report(dir.path()).unwrap().records, r.records);
}

#[test]
fn vector_field_has_eight_rows_per_centroid() {
    let task = TaskSpec::builtin(TaskName::FourRoom);
    let (ds, _) = collect_dataset(&task, Provenance::Planner, 3, 0, &PlannerConfig::default()).unwrap();
    let mut cfg = TrainConfig::idm(Preset::Desk);
    cfg.total_steps = 50;
    cfg.checkpoint_steps = vec![50];
    let idm = train_idm(&ds, &[1], false, &cfg, None).unwrap().policy;
    let rows = export_vector_field(&idm, &ds, &task, 7, 1, 0).unwrap();
    assert_eq!(rows.len(), 7 * 8);
    assert_eq!(vector_field_csv(&rows).lines().count(), 7 * 8 + 1);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!((r.centroid, r.direction), (i / 8, i % 8));
    }
}

#[test]
fn single_path_idm_ignores_the_queried_direction() {
    let task = TaskSpec::builtin(TaskName::FourRoom);
    let d = task.step_scale / task.world_size;
    let a = [0.6, 0.8];
    let mut pts = vec![obs(0.1, 0.1)];
    let mut actions = Vec::new();
    for _ in 0..40 {
        let p = pts.last().unwrap().clone();
        pts.push(obs(p[0] + d * a[0], p[1] + d * a[1]));
        actions.push(a);
    }
    let tr = Trajectory {
        task: TaskName::FourRoom,
        seed: 0,
        observations: pts,
        actions,
    };
    let ds = Dataset::new(TaskName::FourRoom, Provenance::Planner, vec![tr]).unwrap();
    let idm = train_idm(&ds, &[1], false, &TrainConfig::desk(), None).unwrap().policy;
    let rows = export_vector_field(&idm, &ds, &task, 5, 1, 0).unwrap();
    for c in rows.chunks(8) {
        for r in c {
            assert!(
                (r.dx - c[0].dx).abs() < 0.1 && (r.dy - c[0].dy).abs() < 0.1,
                "centroid {}: {:?} vs {:?}",
                r.centroid,
                (r.dx, r.dy),
                (c[0].dx, c[0].dy)
            );
        }
    }
}

#[test]
fn highest_gap_centroid_follows_the_queried_future() {
    let task = TaskSpec::builtin(TaskName::FourRoom);
    let (ds, _) = collect_dataset(&task, Provenance::Surrogate, 50, 0, &PlannerConfig::default()).unwrap();
    let map = delta_per_state_empirical(&ds, 50, 1, 0).unwrap();
    let idm = train_idm(&ds, &[1], false, &TrainConfig::idm(Preset::Desk), None).unwrap().policy;
    let rows = vector_field_at(&idm, &task, &map.centroids, 1).unwrap();
    let top = (0..map.delta.len()).max_by(|&a, &b| map.delta[a].total_cmp(&map.delta[b])).unwrap();
    let spread = angular_spreads(&rows)[top];
    assert!(spread > 90.0, "spread {spread} at gap {}", map.delta[top]);
}
