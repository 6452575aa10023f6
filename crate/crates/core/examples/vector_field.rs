//! Queries a trained IDM at k-means centroids with the eight futures one step
//! away and writes the predicted actions as CSV. Centroids with a large
//! per-state gap should show actions that follow the queried direction.
//!
//! ```text
//! cargo run --release --example vector_field -- four_room 50 vector_field.csv
//! ```

use pidm_core::dataset::Provenance;
use pidm_core::demonstrator::{collect_dataset, PlannerConfig};
use pidm_core::experiments::{angular_spreads, vector_field_at, vector_field_csv};
use pidm_core::gridworld::{TaskName, TaskSpec};
use pidm_core::nn::{Preset, TrainConfig};
use pidm_core::policies::train_idm;
use pidm_core::theory::delta_per_state_empirical;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name: TaskName = args.next().unwrap_or_else(|| "four_room".into()).parse()?;
    let clusters: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(50);
    let out = args.next().unwrap_or_else(|| "vector_field.csv".into());

    let task = TaskSpec::builtin(name);
    let (ds, _) = collect_dataset(&task, Provenance::Surrogate, 50, 0, &PlannerConfig::default())?;
    let map = delta_per_state_empirical(&ds, clusters, 1, 0)?;
    let idm = train_idm(&ds, &[1], false, &TrainConfig::idm(Preset::Desk), None)?.policy;
    let rows = vector_field_at(&idm, &task, &map.centroids, 1)?;
    std::fs::write(&out, vector_field_csv(&rows))?;

    let spread = angular_spreads(&rows);
    let mut order: Vec<usize> = (0..map.delta.len()).collect();
    order.sort_by(|&a, &b| map.delta[b].total_cmp(&map.delta[a]));
    println!("{} rows written to {out}", rows.len());
    println!("{:>8} {:>8} {:>8} {:>10} {:>10}", "x", "y", "goal", "gap", "spread");
    for &c in order.iter().take(5).chain(order.iter().rev().take(5)) {
        let r = &rows[c * 8];
        println!(
            "{:>8.2} {:>8.2} {:>8} {:>10.4} {:>9.1}°",
            r.x, r.y, r.goal, map.delta[c], spread[c]
        );
    }
    Ok(())
}
