//! A small resumable sweep at desk scale: trains BC and PIDM over a grid of
//! demonstration counts and seeds, writes the CSV tables and the consolidated
//! report, and prints the efficiency ratios. Re-running with the same output
//! directory only executes missing cells.
//!
//! ```text
//! cargo run --release --example sweep -- sweep_out four_room 1,2,5,10 3
//! ```

use pidm_core::dataset::Provenance;
use pidm_core::experiments::{report, run_sweep, SweepConfig};
use pidm_core::gridworld::TaskName;
use pidm_core::nn::Preset;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "sweep_out".into());
    let tasks: Vec<TaskName> = args
        .next()
        .unwrap_or_else(|| "four_room".into())
        .split(',')
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    let n_grid: Vec<usize> = args
        .next()
        .unwrap_or_else(|| "1,2,5,10".into())
        .split(',')
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    let seeds: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);

    let mut cfg = SweepConfig::preset(Preset::Desk, Provenance::Surrogate, &out);
    cfg.tasks = tasks;
    cfg.n_grid = n_grid;
    cfg.seeds = seeds;
    let outcome = run_sweep(&cfg)?;
    println!(
        "{} cells, {} executed now, {} failed",
        outcome.records.len(),
        outcome.executed,
        outcome.failures()
    );
    for (task, eff) in &outcome.efficiency {
        println!("{task}: max attainable {:.3}", eff.max_attainable);
        for p in &eff.curves {
            println!("  {:<4} n={:<3} {:.3} ± {:.3}", p.algo, p.n, p.mean, p.std);
        }
        for row in &eff.rows {
            let eta = row.eta.map_or("not reached".to_string(), |e| format!("{e:.2}"));
            println!("  eta({:.0}%) = {eta}", 100.0 * row.threshold);
        }
    }
    let r = report(std::path::Path::new(&out))?;
    println!("report: {} cells, sum of best values {:.3}", r.totals.cells, r.totals.sum_best);
    Ok(())
}
