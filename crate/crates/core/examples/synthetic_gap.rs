//! Learned BC and IDM errors on a task whose actions split into two modes
//! that only the next state can tell apart, compared with the closed-form gap.
//!
//! ```text
//! cargo run --release --example synthetic_gap -- 2000 0
//! ```

use pidm_core::dataset::TwoModeTask;
use pidm_core::experiments::synthetic_gap;
use pidm_core::nn::TrainConfig;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let task = TwoModeTask::default();
    let g = synthetic_gap(&task, n, &TrainConfig::desk().with_seed(seed))?;
    println!("analytic gap        {:.4}", g.delta_analytic);
    println!("BC error            {:.4}", g.epe_bc);
    println!("IDM error           {:.4}", g.epe_idm);
    println!("learned gap         {:.4} ({:.1}% of analytic)", g.gap(), 100.0 * g.gap() / g.delta_analytic);
    Ok(())
}
