use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rng::{derived, seeded};
use crate::theory::{
    exact_gap, fisher_ratio, mc_estimator_decomposition, predicted_efficiency_ratio, FisherEstimate, GapReport,
    GaussianIdm, McConfig, PredictorNoise, TabularMdp,
};
use crate::{Error, Result};

pub const NOISE_LEVELS: [f64; 3] = [0.0, 0.2, 0.5];
pub const SAMPLE_SIZES: [usize; 2] = [50, 500];
pub const EXACT_TOLERANCE: f64 = 1e-12;
pub const N_SIGMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Theorem1,
    Corollary1,
    Lemma1,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Theorem1 => "theorem1",
            Suite::Corollary1 => "corollary1",
            Suite::Lemma1 => "lemma1",
            Suite::All => "all",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(Suite::Theorem1),
            "corollary1" => Ok(Suite::Corollary1),
            "lemma1" => Ok(Suite::Lemma1),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidArgument(format!("unknown suite `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactCase {
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
    pub delta: f64,
    pub delta_variance: f64,
    pub difference: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCase {
    pub mdp: String,
    pub swap_probability: f64,
    pub n: usize,
    pub report: GapReport,
    pub passed: bool,
}

/// Median measured gap per noise level for one `(mdp, n)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCase {
    pub mdp: String,
    pub n: usize,
    pub medians: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherCase {
    pub family: GaussianIdm,
    pub estimate: FisherEstimate,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub suite: Suite,
    pub trials: usize,
    pub seed: u64,
    pub theorem1: Vec<ExactCase>,
    pub corollary1: Vec<DecompositionCase>,
    pub monotonicity: Vec<MonotonicityCase>,
    pub lemma1: Vec<FisherCase>,
    /// Plug-in efficiency ratio of the coin MDP at a target error 0.5 above its floor.
    pub coin_predicted_eta: Option<f64>,
    pub passed: bool,
}

/// The coin MDP and two random MDPs used for the Monte Carlo checks.
pub fn decomposition_mdps(seed: u64) -> Vec<(String, TabularMdp)> {
    let mut rng = derived(seed, 0xC011);
    vec![
        ("coin".to_string(), TabularMdp::coin()),
        (
            "random_5x3_k2".to_string(),
            TabularMdp::random(5, 3, 2, &mut rng).expect("valid sizes"),
        ),
        (
            "random_8x4_k1".to_string(),
            TabularMdp::random(8, 4, 1, &mut rng).expect("valid sizes"),
        ),
    ]
}

/// `count` random MDPs with 2-12 states, 2-4 actions and horizons cycling 1, 2, 3.
pub fn theorem1_cases(count: usize, seed: u64) -> Result<Vec<ExactCase>> {
    let mut rng = seeded(seed);
    (0..count)
        .map(|i| {
            use rand::Rng as _;
            let ns = rng.gen_range(2..=12);
            let na = rng.gen_range(2..=4);
            let k = 1 + i % 3;
            let mdp = TabularMdp::random(ns, na, k, &mut rng)?;
            let g = exact_gap(&mdp)?;
            let difference = (g.delta - g.delta_variance).abs();
            Ok(ExactCase {
                n_states: ns,
                n_actions: na,
                horizon: k,
                delta: g.delta,
                delta_variance: g.delta_variance,
                difference,
                passed: difference < EXACT_TOLERANCE && g.delta >= -EXACT_TOLERANCE && g.delta_variance >= 0.0,
            })
        })
        .collect()
}

pub fn corollary1_cases(trials: usize, seed: u64) -> Result<(Vec<DecompositionCase>, Vec<MonotonicityCase>)> {
    let mut cases = Vec::new();
    let mut mono = Vec::new();
    for (mi, (name, mdp)) in decomposition_mdps(seed).into_iter().enumerate() {
        for &n in &SAMPLE_SIZES {
            let mut medians = Vec::new();
            for (qi, &q) in NOISE_LEVELS.iter().enumerate() {
                let noise = if q == 0.0 {
                    PredictorNoise::Identity
                } else {
                    PredictorNoise::StateSwap { q }
                };
                let run_seed = seed ^ ((mi as u64) << 32 | (n as u64) << 8 | qi as u64);
                let report = mc_estimator_decomposition(&mdp, &McConfig::new(n, n, noise, trials, run_seed))?;
                medians.push(report.delta_hat_median);
                cases.push(DecompositionCase {
                    mdp: name.clone(),
                    swap_probability: q,
                    n,
                    passed: report.identity_holds(N_SIGMA),
                    report,
                });
            }
            mono.push(MonotonicityCase {
                mdp: name.clone(),
                n,
                passed: medians.windows(2).all(|w| w[1] <= w[0]),
                medians,
            });
        }
    }
    Ok((cases, mono))
}

pub fn lemma1_cases(configs: usize, samples: usize, seed: u64) -> Result<Vec<FisherCase>> {
    let mut rng = derived(seed, 0xF15E);
    (0..configs)
        .map(|i| {
            let family = GaussianIdm::random(&mut rng);
            let estimate = fisher_ratio(&family, samples, seed.wrapping_add(i as u64))?;
            Ok(FisherCase {
                passed: estimate.f_mu > 0.0 && estimate.f_xi > 0.0 && estimate.satisfies_bound(N_SIGMA),
                family,
                estimate,
            })
        })
        .collect()
}

/// Runs the selected checks. `trials` sets the Monte Carlo trial count of
/// the decomposition grid; the Fisher checks use 20 configurations of 10^5
/// samples each.
pub fn run_theory_suite(suite: Suite, trials: usize, seed: u64) -> Result<TheoryReport> {
    let mut report = TheoryReport {
        suite,
        trials,
        seed,
        theorem1: Vec::new(),
        corollary1: Vec::new(),
        monotonicity: Vec::new(),
        lemma1: Vec::new(),
        coin_predicted_eta: None,
        passed: true,
    };
    if suite.includes(Suite::Theorem1) {
        report.theorem1 = theorem1_cases(100, seed)?;
        let coin = exact_gap(&TabularMdp::coin())?;
        report.coin_predicted_eta = Some(predicted_efficiency_ratio(&coin, coin.irreducible_bc + 0.5, None)?);
    }
    if suite.includes(Suite::Corollary1) {
        let (c, m) = corollary1_cases(trials, seed)?;
        report.corollary1 = c;
        report.monotonicity = m;
    }
    if suite.includes(Suite::Lemma1) {
        report.lemma1 = lemma1_cases(20, 100_000, seed)?;
    }
    report.passed = report.theorem1.iter().all(|c| c.passed)
        && report.corollary1.iter().all(|c| c.passed)
        && report.monotonicity.iter().all(|c| c.passed)
        && report.lemma1.iter().all(|c| c.passed);
    Ok(report)
}
