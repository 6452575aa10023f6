//! Spread of future observations given the current state cluster, as a
//! function of the lookahead `k`, with the median taken over clusterings.
//!
//! ```text
//! cargo run --release --example future_variance -- four_room 500 20
//! ```

use pidm_core::dataset::Provenance;
use pidm_core::demonstrator::{collect_dataset, PlannerConfig};
use pidm_core::gridworld::{TaskName, TaskSpec};
use pidm_core::theory::future_variance_vs_k;

const K_LIST: [usize; 6] = [1, 2, 5, 10, 20, 40];

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name: TaskName = args.next().unwrap_or_else(|| "four_room".into()).parse()?;
    let clusters: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);

    let task = TaskSpec::builtin(name);
    let (ds, _) = collect_dataset(&task, Provenance::Surrogate, 50, 0, &PlannerConfig::default())?;
    let runs: Vec<Vec<(usize, f64)>> = (0..seeds)
        .map(|s| future_variance_vs_k(&ds, clusters, &K_LIST, s))
        .collect::<Result<_, _>>()?;
    let medians: Vec<f64> = (0..K_LIST.len())
        .map(|i| median(runs.iter().map(|r| r[i].1).collect()))
        .collect();
    for (k, m) in K_LIST.iter().zip(&medians) {
        println!("k = {k:>2}: median E[Var(s_t+k | s_t)] = {m:.6}");
    }
    println!("non-decreasing in k: {}", medians.windows(2).all(|w| w[1] >= w[0]));
    Ok(())
}
