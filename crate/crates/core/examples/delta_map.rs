//! Estimates the per-state gap on surrogate demonstrations with k-means,
//! compares it near goals against the global mean, and checks how strongly a
//! trained IDM reacts to its future-state input in high- versus low-gap
//! states.
//!
//! ```text
//! cargo run --release --example delta_map -- four_room 500 0
//! ```

use pidm_core::dataset::Provenance;
use pidm_core::demonstrator::{collect_dataset, PlannerConfig};
use pidm_core::experiments::{decile_ratio, future_sensitivity, vector_field_at};
use pidm_core::gridworld::{TaskName, TaskSpec};
use pidm_core::nn::{Preset, TrainConfig};
use pidm_core::policies::train_idm;
use pidm_core::theory::delta_per_state_empirical;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name: TaskName = args.next().unwrap_or_else(|| "four_room".into()).parse()?;
    let clusters: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let task = TaskSpec::builtin(name);
    let (ds, _) = collect_dataset(&task, Provenance::Surrogate, 50, 0, &PlannerConfig::default())?;
    let map = delta_per_state_empirical(&ds, clusters, 1, seed)?;

    let near: Vec<f64> = map
        .centroids
        .iter()
        .zip(&map.delta)
        .filter(|(c, _)| {
            let p = [c[0] * task.world_size, c[1] * task.world_size];
            task.goals
                .iter()
                .any(|g| (p[0] - g[0]).hypot(p[1] - g[1]) <= 2.0 * task.goal_radius)
        })
        .map(|(_, d)| *d)
        .collect();
    let near_mean = near.iter().sum::<f64>() / near.len().max(1) as f64;
    println!(
        "{} centroids, global mean gap {:.4}, {} near goals with mean {:.4} (ratio {:.2})",
        map.delta.len(),
        map.mean(),
        near.len(),
        near_mean,
        near_mean / map.mean()
    );

    let cfg = TrainConfig::idm(Preset::Desk).with_seed(seed);
    let idm = train_idm(&ds, &[1], false, &cfg, None)?.policy;
    let rows = vector_field_at(&idm, &task, &map.centroids, 1)?;
    let sens = future_sensitivity(&rows);
    println!(
        "IDM future sensitivity, top vs bottom gap decile: {:.2}x",
        decile_ratio(&map.delta, &sens)?
    );
    Ok(())
}
