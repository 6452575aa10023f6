//! Seeded sweeps over `(task, algo, n, seed)`, the theory check suite,
//! vector-field export and the consolidated report.

mod config;
mod report;
mod sweep;
mod synthetic;
mod theory_suite;
mod vector_field;

pub use config::{Cell, SweepConfig, FULL_N_GRID};
pub use report::{build_report, report, Report, Totals, REPORT_FILE};
pub use sweep::{
    curves, efficiency_by_task, ensure_dataset, eta_table_csv, run_cell, run_sweep, runs_csv, sample_efficiency_csv,
    RunRecord, SweepOutcome, CSV_VERSION,
};
pub use synthetic::{synthetic_gap, SyntheticGap};
pub use theory_suite::{
    corollary1_cases, decomposition_mdps, lemma1_cases, run_theory_suite, theorem1_cases, DecompositionCase,
    ExactCase, FisherCase, MonotonicityCase, Suite, TheoryReport, EXACT_TOLERANCE, NOISE_LEVELS, N_SIGMA,
    SAMPLE_SIZES,
};
pub use vector_field::{
    angular_spread, angular_spreads, centroid_observation, decile_ratio, export_vector_field, future_sensitivity,
    vector_field_at, vector_field_csv, VectorRow, DIRECTIONS,
};
