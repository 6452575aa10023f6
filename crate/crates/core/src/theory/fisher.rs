use rand::distributions::WeightedIndex;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::{Error, Result};

/// Futures reachable from one state: `(probability, feature g(s, s'))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSupport {
    pub weight: f64,
    pub futures: Vec<(f64, f64)>,
}

/// One-parameter Gaussian IDM family `a | s, s' ~ N(theta * g(s, s'), sigma^2)`.
/// The matching BC density is the mixture over futures of each state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianIdm {
    pub theta: f64,
    pub sigma: f64,
    pub support: Vec<StateSupport>,
}

impl GaussianIdm {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidArgument("theta must be finite".into()));
        }
        if self.support.is_empty() || self.support.iter().any(|s| s.futures.is_empty()) {
            return Err(Error::InvalidArgument("every state needs at least one future".into()));
        }
        Ok(())
    }

    /// Random configuration with 1-4 states, 1-4 futures per state, features
    /// and theta uniform in [-2, 2] and sigma uniform in [0.2, 1.5].
    pub fn random(rng: &mut impl rand::Rng) -> Self {
        let n_states = rng.gen_range(1..=4);
        let support = (0..n_states)
            .map(|_| {
                let n = rng.gen_range(1..=4);
                let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                StateSupport {
                    weight: rng.gen_range(0.1..1.0),
                    futures: raw.iter().map(|p| (p / sum, rng.gen_range(-2.0..2.0))).collect(),
                }
            })
            .collect();
        Self {
            theta: rng.gen_range(-2.0..2.0),
            sigma: rng.gen_range(0.2..1.5),
            support,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherEstimate {
    pub f_mu: f64,
    pub f_xi: f64,
    pub se_mu: f64,
    pub se_xi: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    pub samples: usize,
}

impl FisherEstimate {
    /// `ratio >= 1 - n_sigma * ratio_se`.
    pub fn satisfies_bound(&self, n_sigma: f64) -> bool {
        self.ratio >= 1.0 - n_sigma * self.ratio_se
    }
}

/// Monte Carlo Fisher informations of the IDM family and its BC mixture,
/// from analytic scores evaluated on shared samples `(s, s', a)`.
pub fn fisher_ratio(family: &GaussianIdm, samples: usize, seed: u64) -> Result<FisherEstimate> {
    family.validate()?;
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let states = WeightedIndex::new(family.support.iter().map(|s| s.weight))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let futures: Vec<WeightedIndex<f64>> = family
        .support
        .iter()
        .map(|s| WeightedIndex::new(s.futures.iter().map(|f| f.0)))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let (theta, sigma) = (family.theta, family.sigma);
    let var = sigma * sigma;
    let noise = Normal::new(0.0, sigma).expect("sigma validated");
    let mut rng = seeded(seed);
    let mut log_w = Vec::new();

    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        let s = states.sample(&mut rng);
        let sup = &family.support[s].futures;
        let g = sup[futures[s].sample(&mut rng)].1;
        let a = theta * g + noise.sample(&mut rng);

        let score_xi = (a - theta * g) * g / var;

        log_w.clear();
        log_w.extend(sup.iter().map(|&(p, gj)| p.ln() - (a - theta * gj).powi(2) / (2.0 * var)));
        let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for (&(_, gj), lw) in sup.iter().zip(&log_w) {
            let w = (lw - top).exp();
            num += w * (a - theta * gj) * gj / var;
            den += w;
        }
        let score_mu = num / den;

        let (x, y) = (score_xi * score_xi, score_mu * score_mu);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let n = samples as f64;
    let (mx, my) = (sx / n, sy / n);
    let vx = (sxx / n - mx * mx) * n / (n - 1.0);
    let vy = (syy / n - my * my) * n / (n - 1.0);
    let cxy = (sxy / n - mx * my) * n / (n - 1.0);
    let ratio = mx / my;
    let ratio_var = (vx / (my * my) - 2.0 * mx * cxy / my.powi(3) + mx * mx * vy / my.powi(4)) / n;
    Ok(FisherEstimate {
        f_mu: my,
        f_xi: mx,
        se_mu: (vy / n).sqrt(),
        se_xi: (vx / n).sqrt(),
        ratio,
        ratio_se: ratio_var.max(0.0).sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(futures: Vec<(f64, f64)>, theta: f64, sigma: f64) -> GaussianIdm {
        GaussianIdm {
            theta,
            sigma,
            support: vec![StateSupport { weight: 1.0, futures }],
        }
    }

    #[test]
    fn single_future_gives_equal_information() {
        let f = fisher_ratio(&single(vec![(1.0, 1.3)], 0.5, 0.7), 50_000, 1).unwrap();
        assert!((f.f_xi - f.f_mu).abs() < 1e-12 * f.f_xi);
        // Fisher information of a Gaussian mean scaled by g: g^2 / sigma^2
        let analytic = 1.3f64.powi(2) / 0.49;
        assert!((f.f_xi - analytic).abs() < 3.0 * f.se_xi, "{} vs {analytic}", f.f_xi);
    }

    #[test]
    fn overlapping_mixture_has_large_ratio() {
        // component means +-0.1 under unit noise: the mixture barely depends on theta
        let f = fisher_ratio(&single(vec![(0.5, 1.0), (0.5, -1.0)], 0.1, 1.0), 50_000, 2).unwrap();
        assert!(f.ratio > 10.0, "{f:?}");
    }

    #[test]
    fn well_separated_mixture_recovers_the_component() {
        // means +-2 with sd 0.1: the action identifies the future almost surely
        let f = fisher_ratio(&single(vec![(0.5, 1.0), (0.5, -1.0)], 2.0, 0.1), 50_000, 2).unwrap();
        assert!((f.ratio - 1.0).abs() < 1e-6, "{f:?}");
    }

    #[test]
    fn nonpositive_sigma_is_rejected() {
        assert!(fisher_ratio(&single(vec![(1.0, 1.0)], 1.0, 0.0), 10, 0).is_err());
        assert!(fisher_ratio(&single(vec![(1.0, 1.0)], 1.0, -1.0), 10, 0).is_err());
    }

    #[test]
    fn random_configs_respect_the_bound() {
        let mut rng = seeded(11);
        for i in 0..5 {
            let fam = GaussianIdm::random(&mut rng);
            let f = fisher_ratio(&fam, 20_000, i).unwrap();
            assert!(f.f_mu > 0.0 && f.f_xi > 0.0);
            assert!(f.satisfies_bound(3.0), "{f:?}");
        }
    }
}
