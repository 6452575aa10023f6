use rand::distributions::WeightedIndex;
use rand::Rng as _;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mdp::{exact_gap, GapReport, GapStdErr, Moments, TabularMdp};
use crate::rng::{derive_seed, derived};
use crate::{Error, Result};

pub const MIN_TRIALS: usize = 100;

/// Corruption applied to the true future before it is handed to the IDM
/// estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorNoise {
    Identity,
    /// With probability `q` the future is replaced by a uniformly random state.
    StateSwap { q: f64 },
}

impl PredictorNoise {
    pub fn swap_probability(self) -> f64 {
        match self {
            PredictorNoise::Identity => 0.0,
            PredictorNoise::StateSwap { q } => q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// BC dataset size.
    pub n: usize,
    /// IDM dataset size.
    pub m: usize,
    pub noise: PredictorNoise,
    pub trials: usize,
    pub bootstrap: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(n: usize, m: usize, noise: PredictorNoise, trials: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            noise,
            trials,
            bootstrap: 200,
            seed,
        }
    }
}

/// Fitted tabular estimators of one trial and their exact EPEs.
struct Trial {
    mu: Vec<f64>,
    xi: Vec<f64>,
    epe_mu: f64,
    epe_xi: f64,
}

struct Sampler<'a> {
    mdp: &'a TabularMdp,
    moments: &'a Moments,
    triples: Vec<(usize, usize, usize)>,
    dist: WeightedIndex<f64>,
}

impl Sampler<'_> {
    fn fit(&self, cfg: &McConfig, seed: u64) -> Trial {
        let ns = self.mdp.n_states;
        let av = &self.mdp.action_values;
        let q = cfg.noise.swap_probability();

        let mut rng = derived(seed, 0);
        let (mut sum, mut cnt) = (vec![0.0; ns], vec![0usize; ns]);
        let mut total = 0.0;
        for _ in 0..cfg.n {
            let (s, a, _) = self.triples[self.dist.sample(&mut rng)];
            sum[s] += av[a];
            cnt[s] += 1;
            total += av[a];
        }
        let prior = total / cfg.n as f64;
        let mu: Vec<f64> = (0..ns)
            .map(|s| if cnt[s] > 0 { sum[s] / cnt[s] as f64 } else { prior })
            .collect();

        let mut rng = derived(seed, 1);
        let (mut sum, mut cnt) = (vec![0.0; ns * ns], vec![0usize; ns * ns]);
        let mut total = 0.0;
        for _ in 0..cfg.m {
            let (s, a, mut t) = self.triples[self.dist.sample(&mut rng)];
            if q > 0.0 && rng.gen::<f64>() < q {
                t = rng.gen_range(0..ns);
            }
            sum[s * ns + t] += av[a];
            cnt[s * ns + t] += 1;
            total += av[a];
        }
        let prior = total / cfg.m as f64;
        let xi: Vec<f64> = (0..ns * ns)
            .map(|i| if cnt[i] > 0 { sum[i] / cnt[i] as f64 } else { prior })
            .collect();

        let m = self.moments;
        let epe_mu = (0..ns)
            .map(|s| m.state_mass[s] * (m.state_var[s] + (mu[s] - m.state_mean[s]).powi(2)))
            .sum();
        let epe_xi = (0..ns * ns)
            .map(|i| m.pair_mass[i] * (m.pair_var[i] + (xi[i] - m.pair_mean[i]).powi(2)))
            .sum();
        Trial { mu, xi, epe_mu, epe_xi }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_err(v: &[f64]) -> f64 {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Variance and squared-bias terms of the estimators over a set of trials.
#[derive(Debug, Clone, Copy)]
struct Terms {
    var_mu: f64,
    var_xi: f64,
    b_mu_sq: f64,
    b_xi_sq: f64,
}

/// Probability-weighted per-cell unbiased variance and bias-corrected squared
/// bias of `values[trial][cell]` around `truth[cell]`.
fn cell_terms(trials: &[&[f64]], mass: &[f64], truth: &[f64]) -> (f64, f64) {
    let t = trials.len() as f64;
    let (mut var, mut bias) = (0.0, 0.0);
    for (c, &p) in mass.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let avg = trials.iter().map(|v| v[c]).sum::<f64>() / t;
        let s2 = trials.iter().map(|v| (v[c] - avg).powi(2)).sum::<f64>() / (t - 1.0);
        var += p * s2;
        bias += p * ((avg - truth[c]).powi(2) - s2 / t);
    }
    (var, bias)
}

fn terms(trials: &[&Trial], m: &Moments) -> Terms {
    let mus: Vec<&[f64]> = trials.iter().map(|t| t.mu.as_slice()).collect();
    let xis: Vec<&[f64]> = trials.iter().map(|t| t.xi.as_slice()).collect();
    let (var_mu, b_mu_sq) = cell_terms(&mus, &m.state_mass, &m.state_mean);
    let (var_xi, b_xi_sq) = cell_terms(&xis, &m.pair_mass, &m.pair_mean);
    Terms {
        var_mu,
        var_xi,
        b_mu_sq,
        b_xi_sq,
    }
}

fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Monte Carlo check of `Delta_hat = Delta + delta + beta` for tabular
/// conditional-mean estimators.
///
/// Two independent sets of `trials` datasets are drawn. The first measures
/// `Delta_hat`, the mean gap between the exact EPEs of the fitted BC and IDM
/// estimators. The second measures the estimator variances and squared biases
/// per cell, from which `delta` and `beta` follow. IDM datasets pair each
/// `(s, a)` with its true `k`-step future, corrupted by `cfg.noise`; all EPEs
/// are taken against the uncorrupted joint distribution. Empty cells fall
/// back to the dataset's mean action.
pub fn mc_estimator_decomposition(mdp: &TabularMdp, cfg: &McConfig) -> Result<GapReport> {
    if cfg.trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_TRIALS} trials are needed, got {}",
            cfg.trials
        )));
    }
    if cfg.n == 0 || cfg.m == 0 {
        return Err(Error::InvalidArgument("dataset sizes must be positive".into()));
    }
    let q = cfg.noise.swap_probability();
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("swap probability {q} outside [0, 1]")));
    }
    if cfg.bootstrap < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least 2 resamples".into()));
    }
    let exact = exact_gap(mdp)?;
    let moments = Moments::of(mdp)?;
    let joint = mdp.joint()?;
    let ns = mdp.n_states;
    let mut triples = Vec::new();
    let mut weights = Vec::new();
    for s in 0..ns {
        for a in 0..mdp.n_actions {
            for t in 0..ns {
                if joint[s][a][t] > 0.0 {
                    triples.push((s, a, t));
                    weights.push(joint[s][a][t]);
                }
            }
        }
    }
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let sampler = Sampler {
        mdp,
        moments: &moments,
        triples,
        dist,
    };

    let all: Vec<Trial> = (0..2 * cfg.trials)
        .into_par_iter()
        .map(|i| sampler.fit(cfg, derive_seed(cfg.seed, i as u64)))
        .collect();
    let (set_a, set_b): (Vec<&Trial>, Vec<&Trial>) = all.iter().enumerate().fold(
        (Vec::new(), Vec::new()),
        |(mut a, mut b), (i, t)| {
            if i % 2 == 0 {
                a.push(t)
            } else {
                b.push(t)
            }
            (a, b)
        },
    );

    let epe_mu: Vec<f64> = set_a.iter().map(|t| t.epe_mu).collect();
    let epe_xi: Vec<f64> = set_a.iter().map(|t| t.epe_xi).collect();
    let gaps: Vec<f64> = set_a.iter().map(|t| t.epe_mu - t.epe_xi).collect();
    let delta_hat = mean(&gaps);

    let point = terms(&set_b, &moments);
    let mut rng = derived(cfg.seed, u64::MAX);
    let boots: Vec<Terms> = (0..cfg.bootstrap)
        .map(|_| {
            let pick: Vec<&Trial> = (0..set_b.len()).map(|_| set_b[rng.gen_range(0..set_b.len())]).collect();
            terms(&pick, &moments)
        })
        .collect();
    let series = |f: fn(&Terms) -> f64| -> Vec<f64> { boots.iter().map(f).collect() };
    let var_reduction = point.var_mu - point.var_xi;
    let bias_gap = point.b_mu_sq - point.b_xi_sq;
    let rhs = exact.delta + var_reduction + bias_gap;

    let se_delta_hat = std_err(&gaps);
    let se_rhs = sd(&series(|t| t.var_mu - t.var_xi + t.b_mu_sq - t.b_xi_sq));
    let std = GapStdErr {
        epe_bc: std_err(&epe_mu),
        epe_idm: std_err(&epe_xi),
        delta_hat: se_delta_hat,
        var_reduction: sd(&series(|t| t.var_mu - t.var_xi)),
        bias_gap: sd(&series(|t| t.b_mu_sq - t.b_xi_sq)),
        b_mu_sq: sd(&series(|t| t.b_mu_sq)),
        b_xi_sq: sd(&series(|t| t.b_xi_sq)),
        rhs: se_rhs,
        combined: (se_delta_hat.powi(2) + se_rhs.powi(2)).sqrt(),
    };

    Ok(GapReport {
        epe_bc: mean(&epe_mu),
        epe_idm: mean(&epe_xi),
        delta: exact.delta,
        delta_variance: exact.delta_variance,
        delta_per_state: exact.delta_per_state,
        irreducible_bc: exact.irreducible_bc,
        delta_hat,
        delta_hat_median: median(&gaps),
        var_reduction,
        bias_gap,
        b_mu_sq: point.b_mu_sq,
        b_xi_sq: point.b_xi_sq,
        residual: (delta_hat - rhs).abs(),
        trials: cfg.trials,
        mc_std_err: Some(std),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn too_few_trials_are_rejected() {
        let cfg = McConfig::new(10, 10, PredictorNoise::Identity, 99, 0);
        assert!(mc_estimator_decomposition(&TabularMdp::coin(), &cfg).is_err());
    }

    #[test]
    fn coin_identity_holds_with_exact_futures() {
        let cfg = McConfig::new(20, 20, PredictorNoise::Identity, 1000, 1);
        let r = mc_estimator_decomposition(&TabularMdp::coin(), &cfg).unwrap();
        assert!(r.identity_holds(3.0), "{r:?}");
        assert_eq!(r.delta, 1.0);
    }

    #[test]
    fn bc_bias_vanishes_for_large_samples() {
        let mdp = TabularMdp::random(4, 3, 1, &mut seeded(3)).unwrap();
        let cfg = McConfig::new(100_000, 50, PredictorNoise::Identity, 100, 2);
        let r = mc_estimator_decomposition(&mdp, &cfg).unwrap();
        let se = r.mc_std_err.unwrap().b_mu_sq;
        assert!(r.b_mu_sq.abs() < 3.0 * se + 1e-9, "{} vs {se}", r.b_mu_sq);
    }

    #[test]
    fn tabular_bc_excess_error_on_coin_is_one_over_n() {
        // a single visited state with unit action variance: E[(mu_hat - 0)^2] = 1/n
        for n in [1, 2, 4] {
            let cfg = McConfig::new(n, 5, PredictorNoise::Identity, 4000, 9);
            let r = mc_estimator_decomposition(&TabularMdp::coin(), &cfg).unwrap();
            let se = r.mc_std_err.unwrap().epe_bc;
            assert!((r.epe_bc - (1.0 + 1.0 / n as f64)).abs() <= 4.0 * se + 1e-12, "n={n}: {}", r.epe_bc);
        }
    }

    #[test]
    fn noise_lowers_the_measured_gap() {
        let mdp = TabularMdp::coin();
        let med: Vec<f64> = [0.0, 0.2, 0.5]
            .iter()
            .map(|&q| {
                let cfg = McConfig::new(50, 50, PredictorNoise::StateSwap { q }, 500, 4);
                mc_estimator_decomposition(&mdp, &cfg).unwrap().delta_hat_median
            })
            .collect();
        assert!(med[0] >= med[1] && med[1] >= med[2], "{med:?}");
    }
}
