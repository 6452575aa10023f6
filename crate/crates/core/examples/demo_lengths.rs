//! Trajectory-length statistics of the A* planner and the surrogate on every
//! shipped layout.
//!
//! ```text
//! cargo run --release --example demo_lengths -- 50 [step_scale]
//! ```

use pidm_core::dataset::Provenance;
use pidm_core::demonstrator::{collect_dataset, visitation_spread, PlannerConfig};
use pidm_core::gridworld::{TaskName, TaskSpec};

fn main() -> anyhow::Result<()> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50);
    let scale: Option<f64> = std::env::args().nth(2).map(|s| s.parse()).transpose()?;
    for name in TaskName::ALL {
        let mut task = TaskSpec::builtin(name);
        if let Some(s) = scale {
            task.step_scale = s;
        }
        for prov in [Provenance::Planner, Provenance::Surrogate] {
            let (ds, rep) = match collect_dataset(&task, prov, n, 0, &PlannerConfig::default()) {
                Ok(r) => r,
                Err(e) => {
                    println!("{name:<10} {prov:<9} {e}");
                    continue;
                }
            };
            let st = ds.stats();
            println!(
                "{:<10} {:<9} steps {:>6}  len min {:>4} avg {:>7.2} max {:>4}  discarded {:>2}/{:<3} spread {:.3}",
                name,
                prov,
                st.total_steps,
                st.min_len,
                st.avg_len,
                st.max_len,
                rep.discarded,
                rep.attempts,
                visitation_spread(&ds, task.world_size)
            );
        }
    }
    Ok(())
}
