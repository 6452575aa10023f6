use serde::{Deserialize, Serialize};

use super::mdp::GapReport;
use crate::policies::Algo;
use crate::{Error, Result};

pub const THRESHOLDS: [f64; 3] = [0.80, 0.90, 0.95];

/// Plug-in sample-efficiency ratio
/// `(F_xi / F_mu) * (1 + (Delta + b_mu^2 - b_xi^2) / (eps - E[Var(a|s)] - b_mu^2))`
/// with the bias-derivative factors fixed to one. The Fisher ratio defaults
/// to one, which is conservative since it is never below one.
pub fn predicted_efficiency_ratio(gap: &GapReport, epsilon: f64, fisher_ratio: Option<f64>) -> Result<f64> {
    let denom = epsilon - gap.irreducible_bc - gap.b_mu_sq;
    if !(denom > 0.0) {
        return Err(Error::Infeasible(format!(
            "target error {epsilon} is not above the BC error floor {}",
            gap.irreducible_bc + gap.b_mu_sq
        )));
    }
    let f = fisher_ratio.unwrap_or(1.0);
    if !(f > 0.0) {
        return Err(Error::InvalidArgument(format!("Fisher ratio must be positive, got {f}")));
    }
    Ok(f * (1.0 + (gap.delta + gap.b_mu_sq - gap.b_xi_sq) / denom))
}

/// Mean and spread of best-checkpoint performance at one dataset size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub algo: Algo,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub n_bc: Option<usize>,
    pub n_pidm: Option<usize>,
    /// `n_bc / n_pidm`, absent when either side never reaches the threshold.
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub max_attainable: f64,
    pub rows: Vec<ThresholdRow>,
    pub curves: Vec<CurvePoint>,
    pub predicted_eta: Option<f64>,
}

impl EfficiencyReport {
    pub fn eta(&self, threshold: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| (r.threshold - threshold).abs() < 1e-9)
            .and_then(|r| r.eta)
    }
}

/// Smallest dataset size whose mean performance reaches `target`.
fn first_reaching(curves: &[CurvePoint], algo: Algo, target: f64) -> Option<usize> {
    curves
        .iter()
        .filter(|c| c.algo == algo && c.mean >= target)
        .map(|c| c.n)
        .min()
}

/// Efficiency ratios at each threshold, relative to the best mean performance
/// of either algorithm at any dataset size.
pub fn empirical_efficiency(curves: &[CurvePoint], thresholds: &[f64]) -> EfficiencyReport {
    let max_attainable = curves.iter().map(|c| c.mean).fold(f64::NEG_INFINITY, f64::max);
    let rows = thresholds
        .iter()
        .map(|&threshold| {
            let target = threshold * max_attainable;
            let n_bc = first_reaching(curves, Algo::Bc, target);
            let n_pidm = first_reaching(curves, Algo::Pidm, target);
            let eta = match (n_bc, n_pidm) {
                (Some(b), Some(p)) => Some(b as f64 / p as f64),
                _ => None,
            };
            ThresholdRow {
                threshold,
                n_bc,
                n_pidm,
                eta,
            }
        })
        .collect();
    let mut curves = curves.to_vec();
    curves.sort_by(|a, b| a.algo.cmp(&b.algo).then(a.n.cmp(&b.n)));
    EfficiencyReport {
        max_attainable: if curves.is_empty() { 0.0 } else { max_attainable },
        rows,
        curves,
        predicted_eta: None,
    }
}

pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument("correlation needs at least three points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidArgument("correlation of a constant series".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}
