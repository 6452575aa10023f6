//! Command-line front end. Exit codes: 0 success, 1 usage or input error,
//! 2 sweep finished with failed cells, 3 theory check violated.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use pidm_core::dataset::{self, Dataset, Provenance};
use pidm_core::demonstrator::{collect_dataset, PlannerConfig};
use pidm_core::experiments::{build_report, eta_table_csv, report, run_sweep, run_theory_suite, Suite, SweepConfig};
use pidm_core::gridworld::{TaskName, TaskSpec};
use pidm_core::nn::{Preset, TrainConfig};
use pidm_core::policies::{
    evaluate_checkpoints, train_bc, train_idm, Algo, BcPolicy, Checkpoint, IdmPolicy, InstancePredictor, PidmAgent,
};
use pidm_core::theory::{delta_per_state_empirical, future_variance_vs_k, prediction_error_curve};

#[derive(Parser)]
#[command(name = "pidm", version, about = "BC vs predictive inverse dynamics on 2D navigation")]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collect demonstrations with the planner or the noisy surrogate.
    GenData {
        #[arg(long)]
        task: TaskName,
        #[arg(long, default_value = "planner")]
        policy: Provenance,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Task layout file overriding the built-in layout.
        #[arg(long)]
        task_config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print dataset statistics.
    InspectData { path: PathBuf },
    /// Train one policy on `n` demonstrations and write its checkpoints.
    Train {
        #[arg(long)]
        algo: Algo,
        #[arg(long)]
        task: TaskName,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "desk")]
        preset: Preset,
        /// `key = value` training overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Roll out every checkpoint written by `train`.
    Eval {
        #[arg(long)]
        ckpt_dir: PathBuf,
        #[arg(long, default_value_t = 50)]
        rollouts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run (or resume) a seeded sweep over tasks, algorithms, n and seeds.
    Sweep {
        #[arg(long, default_value = "desk")]
        preset: Preset,
        #[arg(long, default_value = "surrogate")]
        provenance: Provenance,
        /// `key = value` sweep overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Numerical checks of the gap identity, its estimator decomposition and
    /// the Fisher ratio bound.
    VerifyTheory {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Dataset and sweep analyses written as CSV.
    Analyze {
        kind: Analysis,
        /// Dataset file, or a sweep output directory for `efficiency`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        clusters: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 50)]
        splits: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Consolidate a run directory into report.json.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Analysis {
    DeltaS,
    PredError,
    FutureVar,
    Efficiency,
}

/// Written next to the checkpoints so `eval` can rebuild the agent.
#[derive(Serialize, Deserialize)]
struct TrainManifest {
    algo: Algo,
    task: TaskName,
    data: PathBuf,
    n: usize,
    seed: u64,
    k: usize,
    data_fingerprint: String,
}

const MANIFEST: &str = "manifest.json";

fn emit(csv: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match csv {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn load_checkpoints<P: for<'de> Deserialize<'de>>(dir: &Path, prefix: &str) -> anyhow::Result<Vec<Checkpoint<P>>> {
    let mut out: Vec<Checkpoint<P>> = Vec::new();
    for e in std::fs::read_dir(dir)? {
        let path = e?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if name.starts_with(&format!("{prefix}_step")) && name.ends_with(".json") {
            out.push(serde_json::from_slice(&std::fs::read(&path)?)?);
        }
    }
    out.sort_by_key(|c| c.step);
    if out.is_empty() {
        bail!("no {prefix} checkpoints in {}", dir.display());
    }
    Ok(out)
}

fn training_subset(m: &TrainManifest) -> anyhow::Result<Dataset> {
    let full = dataset::load(&m.data)?;
    if full.task != m.task {
        bail!("dataset is for {}, not {}", full.task, m.task);
    }
    Ok(full.subsample(m.n, m.seed)?)
}

fn run(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::GenData {
            task,
            policy,
            n,
            seed,
            task_config,
            out,
        } => {
            let spec = match task_config {
                Some(p) => TaskSpec::load(&p)?,
                None => TaskSpec::builtin(task),
            };
            let (ds, rep) = collect_dataset(&spec, policy, n, seed, &PlannerConfig::default())?;
            dataset::save(&ds, &out)?;
            let st = ds.stats();
            println!(
                "{} {} demonstrations of {task}: {} steps, {} discarded episodes, fingerprint {}",
                st.trajectories,
                policy,
                st.total_steps,
                rep.discarded,
                ds.fingerprint()
            );
        }
        Command::InspectData { path } => {
            let ds = dataset::load(&path)?;
            let st = ds.stats();
            println!("task          {}", ds.task);
            println!("provenance    {}", ds.provenance);
            println!("trajectories  {}", st.trajectories);
            println!("total steps   {}", st.total_steps);
            println!("length        min {} / avg {:.1} / max {}", st.min_len, st.avg_len, st.max_len);
            println!("fingerprint   {}", ds.fingerprint());
        }
        Command::Train {
            algo,
            task,
            data,
            n,
            seed,
            preset,
            config,
            k,
            out,
        } => {
            let base = match algo {
                Algo::Bc => TrainConfig::bc(task, preset),
                Algo::Pidm => TrainConfig::idm(preset),
            };
            let mut cfg = match config {
                Some(p) => TrainConfig::load_overrides(base, &p)?,
                None => base,
            };
            cfg.seed = seed;
            cfg.validate()?;
            let manifest = TrainManifest {
                algo,
                task,
                data,
                n,
                seed,
                k,
                data_fingerprint: String::new(),
            };
            let ds = training_subset(&manifest)?;
            let manifest = TrainManifest {
                data_fingerprint: ds.fingerprint(),
                ..manifest
            };
            let final_loss = match algo {
                Algo::Bc => train_bc(&ds, &cfg, Some(&out))?.log.losses.last().copied(),
                Algo::Pidm => train_idm(&ds, &[k], false, &cfg, Some(&out))?.log.losses.last().copied(),
            };
            std::fs::write(out.join(MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
            println!(
                "trained {algo} on {n} {task} demonstrations (seed {seed}); final loss {:.5}; checkpoints in {}",
                final_loss.map_or(f64::NAN, |l| l.1),
                out.display()
            );
        }
        Command::Eval {
            ckpt_dir,
            rollouts,
            seed,
            csv,
        } => {
            let m: TrainManifest = serde_json::from_slice(
                &std::fs::read(ckpt_dir.join(MANIFEST)).with_context(|| format!("no {MANIFEST} in checkpoint dir"))?,
            )?;
            let task = TaskSpec::builtin(m.task);
            let means = match m.algo {
                Algo::Bc => {
                    let ck: Vec<Checkpoint<BcPolicy>> = load_checkpoints(&ckpt_dir, "bc")?;
                    evaluate_checkpoints(&ck, |p| Ok(p.clone()), &task, rollouts, seed)?
                }
                Algo::Pidm => {
                    let ck: Vec<Checkpoint<IdmPolicy>> = load_checkpoints(&ckpt_dir, "idm")?;
                    let predictor = Arc::new(InstancePredictor::new(&training_subset(&m)?, m.k)?);
                    evaluate_checkpoints(
                        &ck,
                        |p| PidmAgent::new(predictor.clone(), p.clone(), m.k),
                        &task,
                        rollouts,
                        seed,
                    )?
                }
            };
            let mut s = String::from("step,mean_goal_fraction\n");
            for (step, v) in &means {
                writeln!(s, "{step},{v:.6}")?;
            }
            emit(csv.as_deref(), &s)?;
            let best = means.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
            eprintln!("best checkpoint mean goal fraction {best:.4}");
        }
        Command::Sweep {
            preset,
            provenance,
            config,
            out,
        } => {
            let base = SweepConfig::preset(preset, provenance, &out);
            let cfg = match config {
                Some(p) => SweepConfig::load_overrides(base, &p)?,
                None => base,
            };
            let outcome = run_sweep(&cfg)?;
            println!(
                "{} cells ({} executed, {} failed); outputs in {}",
                outcome.records.len(),
                outcome.executed,
                outcome.failures(),
                cfg.output_dir.display()
            );
            print!("{}", eta_table_csv(&outcome.efficiency));
            if outcome.failures() > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Command::VerifyTheory {
            suite,
            trials,
            seed,
            json,
        } => {
            let rep = run_theory_suite(suite, trials, seed)?;
            if let Some(p) = json {
                std::fs::write(&p, serde_json::to_vec_pretty(&rep)?)?;
            }
            let count = |v: &[bool]| (v.iter().filter(|b| **b).count(), v.len());
            let lines = [
                ("exact gap identity", rep.theorem1.iter().map(|c| c.passed).collect::<Vec<_>>()),
                ("estimator decomposition", rep.corollary1.iter().map(|c| c.passed).collect()),
                ("noise monotonicity", rep.monotonicity.iter().map(|c| c.passed).collect()),
                ("fisher ratio bound", rep.lemma1.iter().map(|c| c.passed).collect()),
            ];
            for (name, v) in lines.iter().filter(|l| !l.1.is_empty()) {
                let (ok, n) = count(v);
                println!("{name:<26} {ok}/{n} {}", if ok == n { "ok" } else { "VIOLATED" });
            }
            if let Some(eta) = rep.coin_predicted_eta {
                println!("coin predicted efficiency   {eta:.3}");
            }
            if !rep.passed {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Analyze {
            kind,
            data,
            csv,
            clusters,
            k,
            splits,
            seed,
        } => {
            let mut s = String::new();
            match kind {
                Analysis::DeltaS => {
                    let ds = dataset::load(&data)?;
                    let ws = TaskSpec::builtin(ds.task).world_size;
                    let map = delta_per_state_empirical(&ds, clusters, k, seed)?;
                    s.push_str("centroid,x,y,goal,count,delta\n");
                    for (i, c) in map.centroids.iter().enumerate() {
                        writeln!(
                            s,
                            "{i},{:.6},{:.6},{:.0},{},{:.8}",
                            c[0] * ws,
                            c[1] * ws,
                            c[2] * ws,
                            map.counts[i],
                            map.delta[i]
                        )?;
                    }
                }
                Analysis::PredError => {
                    let ds = dataset::load(&data)?;
                    let n_list: Vec<usize> = [1, 2, 5, 10, 20, 30, 40].into_iter().filter(|&n| n < ds.len()).collect();
                    s.push_str("n,mean,median\n");
                    for p in prediction_error_curve(&ds, &n_list, splits, k, seed)? {
                        writeln!(s, "{},{:.8},{:.8}", p.n, p.mean, p.median)?;
                    }
                }
                Analysis::FutureVar => {
                    let ds = dataset::load(&data)?;
                    s.push_str("k,variance\n");
                    for (kk, v) in future_variance_vs_k(&ds, clusters, &[1, 2, 5, 10, 20], seed)? {
                        writeln!(s, "{kk},{v:.8}")?;
                    }
                }
                Analysis::Efficiency => {
                    s = eta_table_csv(&build_report(&data)?.efficiency);
                }
            }
            emit(csv.as_deref(), &s)?;
        }
        Command::Report { run_dir } => {
            let r = report(&run_dir)?;
            println!(
                "{} cells, {} failures, {} datasets, {} analyses -> {}",
                r.totals.cells,
                r.totals.failures,
                r.datasets.len(),
                r.analyses.len(),
                run_dir.join(pidm_core::experiments::REPORT_FILE).display()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
