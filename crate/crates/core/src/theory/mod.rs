//! Exact and Monte Carlo checks of the EPE gap between BC and IDM estimators
//! on tabular MDPs, Fisher-information ratios, sample-efficiency ratios, and
//! the dataset analyses (per-state gaps, state-prediction error, future
//! variance).

mod cluster;
mod efficiency;
mod fisher;
mod mc;
mod mdp;
mod prediction;

pub use cluster::{
    delta_per_state_empirical, future_variance_vs_k, kmeans, nearest_centroid, state_features, DeltaMap, KMeans,
    MAX_ITERATIONS, SHIFT_TOLERANCE,
};
pub use efficiency::{
    empirical_efficiency, pearson_correlation, predicted_efficiency_ratio, CurvePoint, EfficiencyReport, ThresholdRow,
    THRESHOLDS,
};
pub use fisher::{fisher_ratio, FisherEstimate, GaussianIdm, StateSupport};
pub use mc::{mc_estimator_decomposition, McConfig, PredictorNoise, MIN_TRIALS};
pub use mdp::{exact_epe, exact_gap, GapReport, GapStdErr, PolicyClass, TabularMdp, MAX_ENUMERATION};
pub use prediction::{prediction_error_curve, state_prediction_error, PredictionErrorPoint};
