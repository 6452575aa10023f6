//! Held-out state-prediction error of the nearest-neighbour predictor as the
//! bank grows, for planner and surrogate demonstrations of the same task.
//!
//! ```text
//! cargo run --release --example prediction_error -- multiroom 50
//! ```

use pidm_core::dataset::Provenance;
use pidm_core::demonstrator::{collect_dataset, PlannerConfig};
use pidm_core::gridworld::{TaskName, TaskSpec};
use pidm_core::theory::prediction_error_curve;

const N_LIST: [usize; 7] = [1, 2, 5, 10, 20, 30, 40];

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name: TaskName = args.next().unwrap_or_else(|| "multiroom".into()).parse()?;
    let splits: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(50);

    let task = TaskSpec::builtin(name);
    let mut curves = Vec::new();
    for prov in [Provenance::Planner, Provenance::Surrogate] {
        let (ds, _) = collect_dataset(&task, prov, 50, 0, &PlannerConfig::default())?;
        curves.push(prediction_error_curve(&ds, &N_LIST, splits, 1, 0)?);
    }
    println!("{:>4} {:>12} {:>12}", "n", "planner", "surrogate");
    for (p, s) in curves[0].iter().zip(&curves[1]) {
        println!("{:>4} {:>12.6} {:>12.6}", p.n, p.mean, s.mean);
    }
    let lower = curves[0].iter().zip(&curves[1]).all(|(p, s)| p.mean < s.mean);
    println!("planner error below surrogate at every n: {lower}");
    Ok(())
}
