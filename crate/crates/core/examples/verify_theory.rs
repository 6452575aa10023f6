//! Runs the exact, Monte Carlo and Fisher-ratio checks and prints one line
//! per case.
//!
//! ```text
//! cargo run --release --example verify_theory -- all 1000 0
//! ```

use pidm_core::experiments::{run_theory_suite, Suite};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let suite: Suite = args.next().unwrap_or_else(|| "all".into()).parse()?;
    let trials: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1000);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let t0 = std::time::Instant::now();
    let r = run_theory_suite(suite, trials, seed)?;
    if !r.theorem1.is_empty() {
        let worst = r.theorem1.iter().map(|c| c.difference).fold(0.0, f64::max);
        let min_delta = r.theorem1.iter().map(|c| c.delta).fold(f64::INFINITY, f64::min);
        println!(
            "exact gap: {} MDPs, max route difference {worst:.2e}, min gap {min_delta:.4}",
            r.theorem1.len()
        );
    }
    if let Some(eta) = r.coin_predicted_eta {
        println!("coin MDP predicted efficiency ratio: {eta}");
    }
    for c in &r.corollary1 {
        let se = c.report.mc_std_err.map_or(0.0, |e| e.combined);
        println!(
            "{:<14} q={:.1} n={:<4} gap_hat={:+.5} delta={:.4} var={:+.5} bias={:+.5} residual={:.2e} ({:.2} se) {}",
            c.mdp,
            c.swap_probability,
            c.n,
            c.report.delta_hat,
            c.report.delta,
            c.report.var_reduction,
            c.report.bias_gap,
            c.report.residual,
            c.report.residual / se.max(f64::MIN_POSITIVE),
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    for m in &r.monotonicity {
        println!("{:<14} n={:<4} medians {:?} {}", m.mdp, m.n, m.medians, if m.passed { "ok" } else { "FAIL" });
    }
    for c in &r.lemma1 {
        println!(
            "fisher ratio {:.4} +- {:.4} (f_mu {:.4}, f_xi {:.4}) {}",
            c.estimate.ratio,
            c.estimate.ratio_se,
            c.estimate.f_mu,
            c.estimate.f_xi,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    println!("passed: {}  ({:.1?})", r.passed, t0.elapsed());
    Ok(())
}
