use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::policies::InstancePredictor;
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Mean squared L2 distance between predicted and recorded `s_{t+k}` over
/// every held-out step. Fails if a held-out trajectory is also in the bank,
/// unless `allow_overlap` is set.
pub fn state_prediction_error(
    predictor: &InstancePredictor,
    heldout: &Dataset,
    k: usize,
    allow_overlap: bool,
) -> Result<f64> {
    if !allow_overlap {
        if let Some(t) = heldout.trajectories.iter().find(|t| predictor.seeds().contains(&t.seed)) {
            return Err(Error::Protocol(format!(
                "held-out trajectory with seed {} is in the predictor bank",
                t.seed
            )));
        }
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for tr in &heldout.trajectories {
        let last = tr.len();
        for t in 0..last {
            let pred = predictor.predict_k(&tr.observations[t], k)?;
            let truth = &tr.observations[(t + k).min(last)];
            total += pred.iter().zip(truth).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionErrorPoint {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub per_split: Vec<f64>,
}

/// Held-out prediction error for banks of `n` trajectories: for each split a
/// random `n` trajectories form the bank and the rest are held out.
pub fn prediction_error_curve(
    ds: &Dataset,
    n_list: &[usize],
    splits: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<PredictionErrorPoint>> {
    if splits == 0 {
        return Err(Error::InvalidArgument("need at least one split".into()));
    }
    n_list
        .iter()
        .map(|&n| {
            let per_split: Vec<f64> = (0..splits)
                .into_par_iter()
                .map(|i| {
                    let (bank, held) = ds.split_by_trajectory(n, derive_seed(seed, (n * 1000 + i) as u64))?;
                    let pred = InstancePredictor::new(&bank, k)?;
                    state_prediction_error(&pred, &held, k, false)
                })
                .collect::<Result<_>>()?;
            let mut sorted = per_split.clone();
            sorted.sort_by(f64::total_cmp);
            let mid = sorted.len() / 2;
            let median = if sorted.len() % 2 == 1 {
                sorted[mid]
            } else {
                0.5 * (sorted[mid - 1] + sorted[mid])
            };
            Ok(PredictionErrorPoint {
                n,
                mean: per_split.iter().sum::<f64>() / splits as f64,
                median,
                per_split,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fixtures::dataset;

    #[test]
    fn bank_equal_to_heldout_has_zero_error() {
        let ds = dataset(5);
        let p = InstancePredictor::new(&ds, 2).unwrap();
        assert_eq!(state_prediction_error(&p, &ds, 2, true).unwrap(), 0.0);
        assert!(matches!(
            state_prediction_error(&p, &ds, 2, false),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn curve_reports_every_split() {
        let ds = dataset(8);
        let c = prediction_error_curve(&ds, &[1, 4], 3, 1, 0).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|p| p.per_split.len() == 3 && p.mean >= 0.0));
    }
}
