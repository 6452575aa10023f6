//! Collects surrogate demonstrations, trains BC and PIDM on the first `n`
//! trajectories and reports the best-checkpoint goal fraction of each.
//!
//! ```text
//! cargo run --release --example train_and_eval -- four_room 10 desk
//! ```

use std::sync::Arc;
use std::time::Instant;

use pidm_core::dataset::Provenance;
use pidm_core::demonstrator::{collect_dataset, PlannerConfig};
use pidm_core::gridworld::{TaskName, TaskSpec};
use pidm_core::nn::{Preset, TrainConfig};
use pidm_core::policies::{evaluate_checkpoints, train_bc, train_idm, InstancePredictor, PidmAgent};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name: TaskName = args.next().unwrap_or_else(|| "four_room".into()).parse()?;
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let preset: Preset = args.next().unwrap_or_else(|| "desk".into()).parse()?;
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let rollouts = 50;

    let task = TaskSpec::builtin(name);
    let (full, _) = collect_dataset(&task, Provenance::Surrogate, 50, 0, &PlannerConfig::default())?;
    let ds = full.subsample(n, seed)?;

    let t0 = Instant::now();
    let bc = train_bc(&ds, &TrainConfig::bc(name, preset).with_seed(seed), None)?;
    let t_bc = t0.elapsed();
    let bc_means = evaluate_checkpoints(&bc.checkpoints, |p| Ok(p.clone()), &task, rollouts, seed)?;
    println!("BC   train {:.1?}  checkpoints {:?}", t_bc, bc_means);

    let t0 = Instant::now();
    let idm = train_idm(&ds, &[1], false, &TrainConfig::idm(preset).with_seed(seed), None)?;
    let t_idm = t0.elapsed();
    let predictor = Arc::new(InstancePredictor::new(&ds, 1)?);
    let pidm_means = evaluate_checkpoints(
        &idm.checkpoints,
        |p| PidmAgent::new(predictor.clone(), p.clone(), 1),
        &task,
        rollouts,
        seed,
    )?;
    println!("PIDM train {:.1?}  checkpoints {:?}", t_idm, pidm_means);
    Ok(())
}
