
use super::Dataset;
use crate::nn::Matrix;

/// Stacked `(s_t, a_t, s_{t+k})` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionBatch {
    pub s_t: Matrix,
    pub a_t: Matrix,
    pub s_tk: Matrix,
    pub k: usize,
}

/// Flat index over every `(trajectory, t)` with `t < T_i`.
#[derive(Debug, Clone)]
pub struct TransitionIndex {
    /// `ends[i]` = number of transitions in trajectories `0..=i`.
    ends: Vec<usize>,
}

impl TransitionIndex {
    pub fn new(ds: &Dataset) -> Self {
        let mut acc = 0;
        let ends = ds
            .trajectories
            .iter()
            .map(|t| {
                acc += t.len();
                acc
            })
            .collect();
        Self { ends }
    }

    pub fn total(&self) -> usize {
        self.ends.last().copied().unwrap_or(0)
    }

    pub fn locate(&self, flat: usize) -> (usize, usize) {
        let traj = self.ends.partition_point(|&e| e <= flat);
        let start = if traj == 0 { 0 } else { self.ends[traj - 1] };
        (traj, flat - start)
    }
}

/// Uniform draw over all `(i, t)`; the future index is `min(t + k, T_i)`.
pub fn sample_batch(ds: &Dataset, k: usize, batch_size: usize, rng: &mut impl rand::Rng) -> TransitionBatch {
    assert!(k >= 1, "lookahead must be at least 1");
    let index = TransitionIndex::new(ds);
    sample_with_index(ds, &index, k, batch_size, rng)
}

pub(crate) fn sample_with_index(
    ds: &Dataset,
    index: &TransitionIndex,
    k: usize,
    batch_size: usize,
    rng: &mut impl rand::Rng,
) -> TransitionBatch {
    let dim = ds.obs_dim();
    let mut s_t = Matrix::zeros(batch_size, dim);
    let mut a_t = Matrix::zeros(batch_size, 2);
    let mut s_tk = Matrix::zeros(batch_size, dim);
    let total = index.total();
    for row in 0..batch_size {
        let (i, t) = index.locate(rng.gen_range(0..total));
        let traj = &ds.trajectories[i];
        let fut = (t + k).min(traj.len());
        s_t.row_mut(row).copy_from_slice(&traj.observations[t]);
        a_t.row_mut(row).copy_from_slice(&traj.actions[t]);
        s_tk.row_mut(row).copy_from_slice(&traj.observations[fut]);
    }
    TransitionBatch { s_t, a_t, s_tk, k }
}
