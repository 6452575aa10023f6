use pidm_core::dataset::{Dataset, Provenance, Trajectory, TwoModeTask};
use pidm_core::demonstrator::{collect_dataset, PlannerConfig};
use pidm_core::gridworld::{TaskName, TaskSpec};
use pidm_core::nn::{Preset, TrainConfig};
use pidm_core::policies::{evaluate_best_checkpoint, train_bc, train_idm};
use pidm_core::rng::seeded;
use rand::Rng;

fn obs(x: f64, y: f64) -> Vec<f64> {
    let mut o = vec![0.0; TaskName::FourRoom.obs_dim()];
    o[0] = x;
    o[1] = y;
    o
}

#[test]
fn constant_action_is_recovered() {
    let mut rng = seeded(4);
    let a = [0.5, -0.3];
    let trajs = (0..40)
        .map(|i| {
            let pts: Vec<Vec<f64>> = (0..6).map(|_| obs(rng.gen(), rng.gen())).collect();
            Trajectory {
                task: TaskName::FourRoom,
                seed: i,
                observations: pts,
                actions: vec![a; 5],
            }
        })
        .collect();
    let ds = Dataset::new(TaskName::FourRoom, Provenance::Planner, trajs).unwrap();
    let bc = train_bc(&ds, &TrainConfig::desk().with_seed(1), None).unwrap();
    for tr in &ds.trajectories {
        for s in &tr.observations[..tr.len()] {
            let out = bc.policy.act(s).unwrap();
            assert!((out[0] - a[0]).abs() < 0.02 && (out[1] - a[1]).abs() < 0.02, "{out:?}");
        }
    }
}

#[test]
fn two_mode_task_separates_bc_from_idm() {
    let task = TwoModeTask::default();
    let train = task.dataset(2000, 0).unwrap();
    let test = task.dataset(2000, 1).unwrap();
    let cfg = TrainConfig::desk().with_seed(2);
    let bc = train_bc(&train, &cfg, None).unwrap().policy;
    let idm = train_idm(&train, &[1], false, &cfg, None).unwrap().policy;
    let (e_bc, e_idm) = (bc.mse(&test).unwrap(), idm.mse(&test, 1).unwrap());
    let var = task.analytic_delta();
    assert!(var > 0.1);
    assert!(e_idm < 1e-3, "IDM error {e_idm}");
    assert!(e_bc >= 0.95 * var, "BC error {e_bc} vs Var(a|s) {var}");
    assert!(e_bc - e_idm >= 0.9 * var);
}

#[test]
fn deterministic_single_path_makes_idm_match_bc() {
    let mut pts = vec![obs(0.2, 0.2)];
    let mut actions = Vec::new();
    for t in 0..40 {
        let th = 0.05 * t as f64;
        let a = [0.8 * th.cos(), 0.8 * th.sin()];
        let p = pts.last().unwrap();
        pts.push(obs(p[0] + 0.02 * a[0], p[1] + 0.02 * a[1]));
        actions.push(a);
    }
    let tr = Trajectory {
        task: TaskName::FourRoom,
        seed: 0,
        observations: pts,
        actions,
    };
    let ds = Dataset::new(TaskName::FourRoom, Provenance::Planner, vec![tr]).unwrap();
    let cfg = TrainConfig::desk().with_seed(3);
    let bc = train_bc(&ds, &cfg, None).unwrap().policy;
    let idm = train_idm(&ds, &[1], false, &cfg, None).unwrap().policy;
    let tr = &ds.trajectories[0];
    for t in 0..tr.len() {
        let b = bc.act(&tr.observations[t]).unwrap();
        let i = idm.act(&tr.observations[t], &tr.observations[t + 1], 1).unwrap();
        assert!((b[0] - i[0]).abs() < 0.05 && (b[1] - i[1]).abs() < 0.05, "t={t}: {b:?} vs {i:?}");
    }
}

#[test]
fn bc_on_fifty_surrogate_demos_solves_four_room() {
    let task = TaskSpec::builtin(TaskName::FourRoom);
    let (ds, _) = collect_dataset(&task, Provenance::Surrogate, 50, 0, &PlannerConfig::default()).unwrap();
    let cfg = TrainConfig::bc(TaskName::FourRoom, Preset::Desk).with_seed(0);
    let bc = train_bc(&ds, &cfg, None).unwrap();
    let best = evaluate_best_checkpoint(&bc.checkpoints, |p| Ok(p.clone()), &task, 50, 0).unwrap();
    assert!(best >= 0.9, "best checkpoint goal fraction {best}");
}
