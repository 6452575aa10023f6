use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{sample_with_index, Dataset, TransitionIndex};
use crate::nn::{fit, Architecture, Matrix, Mlp, TrainConfig, TrainLog};
use crate::{Error, Result};

/// Behavior cloning policy: action regressed on the current observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcPolicy {
    pub arch: Architecture,
    pub net: Mlp,
}

impl BcPolicy {
    pub fn act(&self, s: &[f64]) -> Result<[f64; 2]> {
        let y = self.net.predict_one(s)?;
        Ok([y[0], y[1]])
    }

    pub fn act_batch(&self, s: &Matrix) -> Result<Matrix> {
        self.net.predict(s)
    }

    /// Mean squared action error over every transition of `ds`.
    pub fn mse(&self, ds: &Dataset) -> Result<f64> {
        let (s, a, _) = all_transitions(ds, 1);
        sq_error(&self.act_batch(&s)?, &a)
    }
}

/// Inverse dynamics policy: action regressed on `(s_t, s_{t+k})`, optionally
/// with a one-hot encoding of `k` over `trained_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdmPolicy {
    pub arch: Architecture,
    pub net: Mlp,
    pub trained_k: Vec<usize>,
    pub k_onehot: bool,
}

impl IdmPolicy {
    pub fn input_dim(obs_dim: usize, k_set: &[usize], k_onehot: bool) -> usize {
        2 * obs_dim + if k_onehot { k_set.len() } else { 0 }
    }

    fn encode_into(&self, s: &[f64], future: &[f64], k: usize, out: &mut [f64]) -> Result<()> {
        let d = s.len();
        out[..d].copy_from_slice(s);
        out[d..2 * d].copy_from_slice(future);
        if self.k_onehot {
            let pos = self
                .trained_k
                .iter()
                .position(|&t| t == k)
                .ok_or_else(|| Error::InvalidArgument(format!("k = {k} not in trained set {:?}", self.trained_k)))?;
            out[2 * d..].iter_mut().for_each(|v| *v = 0.0);
            out[2 * d + pos] = 1.0;
        }
        Ok(())
    }

    pub fn act(&self, s: &[f64], future: &[f64], k: usize) -> Result<[f64; 2]> {
        if s.len() != future.len() {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                got: future.len(),
            });
        }
        let mut x = vec![0.0; self.arch.input];
        if 2 * s.len() > x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input,
                got: 2 * s.len(),
            });
        }
        self.encode_into(s, future, k, &mut x)?;
        let y = self.net.predict_one(&x)?;
        Ok([y[0], y[1]])
    }

    pub fn act_batch(&self, s: &Matrix, future: &Matrix, k: usize) -> Result<Matrix> {
        let mut x = Matrix::zeros(s.rows, self.arch.input);
        for r in 0..s.rows {
            self.encode_into(s.row(r), future.row(r), k, x.row_mut(r))?;
        }
        self.net.predict(&x)
    }

    /// Mean squared action error over every transition of `ds`, conditioned
    /// on the recorded `s_{t+k}`.
    pub fn mse(&self, ds: &Dataset, k: usize) -> Result<f64> {
        let (s, a, f) = all_transitions(ds, k);
        sq_error(&self.act_batch(&s, &f, k)?, &a)
    }
}

/// `(s_t, a_t, s_{t+k})` of every step, futures clamped to the last observation.
fn all_transitions(ds: &Dataset, k: usize) -> (Matrix, Matrix, Matrix) {
    let d = ds.obs_dim();
    let n = ds.total_steps();
    let (mut s, mut a, mut f) = (Matrix::zeros(n, d), Matrix::zeros(n, 2), Matrix::zeros(n, d));
    let mut r = 0;
    for tr in &ds.trajectories {
        let last = tr.len();
        for t in 0..last {
            s.row_mut(r).copy_from_slice(&tr.observations[t]);
            a.row_mut(r).copy_from_slice(&tr.actions[t]);
            f.row_mut(r).copy_from_slice(&tr.observations[(t + k).min(last)]);
            r += 1;
        }
    }
    (s, a, f)
}

fn sq_error(pred: &Matrix, target: &Matrix) -> Result<f64> {
    if pred.rows == 0 {
        return Err(Error::InvalidArgument("no transitions to score".into()));
    }
    let sum: f64 = pred.data.iter().zip(&target.data).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(sum / pred.rows as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<P> {
    pub step: usize,
    pub policy: P,
}

#[derive(Debug, Clone)]
pub struct Trained<P> {
    pub policy: P,
    pub checkpoints: Vec<Checkpoint<P>>,
    pub log: TrainLog,
}

fn save_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), serde_json::to_vec(value)?)?;
    Ok(())
}

/// Shared loop: builds the network, trains it on batches from `make_batch`,
/// snapshots checkpoints and writes them to `ckpt_dir` when given. On a
/// non-finite loss the last finite policy is written as `last_finite.json`.
fn train_generic<P: Serialize + Clone>(
    arch: Architecture,
    cfg: &TrainConfig,
    mut make_batch: impl FnMut(&mut crate::rng::Rng) -> (Matrix, Matrix),
    wrap: impl Fn(Mlp) -> P,
    prefix: &str,
    ckpt_dir: Option<&Path>,
) -> Result<Trained<P>> {
    let mut net = Mlp::new(&arch, cfg.seed)?;
    let mut checkpoints = Vec::new();
    let result = fit(&mut net, cfg, &mut make_batch, |step, n| {
        let p = wrap(n.clone());
        if let Some(dir) = ckpt_dir {
            save_json(dir, &format!("{prefix}_step{step}.json"), &Checkpoint { step, policy: &p })?;
        }
        checkpoints.push(Checkpoint { step, policy: p });
        Ok(())
    });
    match result {
        Ok(log) => Ok(Trained {
            policy: wrap(net),
            checkpoints,
            log,
        }),
        Err(e @ Error::NonFinite { .. }) => {
            if let Some(dir) = ckpt_dir {
                save_json(dir, &format!("{prefix}_last_finite.json"), &wrap(net))?;
            }
            Err(e)
        }
        Err(e) => Err(e),
    }
}

/// Squared-error regression of `a_t` on `s_t` over uniformly drawn transitions.
pub fn train_bc(ds: &Dataset, cfg: &TrainConfig, ckpt_dir: Option<&Path>) -> Result<Trained<BcPolicy>> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let arch = cfg.shape.architecture(ds.obs_dim());
    let index = TransitionIndex::new(ds);
    let a2 = arch.clone();
    train_generic(
        arch,
        cfg,
        |rng| {
            let b = sample_with_index(ds, &index, 1, cfg.batch_size, rng);
            (b.s_t, b.a_t)
        },
        move |net| BcPolicy { arch: a2.clone(), net },
        "bc",
        ckpt_dir,
    )
}

/// Regression of `a_t` on `(s_t, s_{t+k})` with dataset futures; each batch
/// uses one `k` drawn uniformly from `k_set`.
pub fn train_idm(
    ds: &Dataset,
    k_set: &[usize],
    k_onehot: bool,
    cfg: &TrainConfig,
    ckpt_dir: Option<&Path>,
) -> Result<Trained<IdmPolicy>> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    if k_set.is_empty() || k_set.contains(&0) {
        return Err(Error::InvalidArgument("k_set must be non-empty with k >= 1".into()));
    }
    let d = ds.obs_dim();
    let arch = cfg.shape.architecture(IdmPolicy::input_dim(d, k_set, k_onehot));
    let index = TransitionIndex::new(ds);
    let a2 = arch.clone();
    let ks = k_set.to_vec();
    let template = IdmPolicy {
        arch: arch.clone(),
        net: Mlp::from_layers(arch.input, Vec::new())?,
        trained_k: ks.clone(),
        k_onehot,
    };
    train_generic(
        arch,
        cfg,
        |rng| {
            let k = ks[rng.gen_range(0..ks.len())];
            let b = sample_with_index(ds, &index, k, cfg.batch_size, rng);
            let mut x = Matrix::zeros(b.s_t.rows, template.arch.input);
            for r in 0..b.s_t.rows {
                template
                    .encode_into(b.s_t.row(r), b.s_tk.row(r), k, x.row_mut(r))
                    .expect("k drawn from the trained set");
            }
            (x, b.a_t)
        },
        move |net| IdmPolicy {
            arch: a2.clone(),
            net,
            trained_k: k_set.to_vec(),
            k_onehot,
        },
        "idm",
        ckpt_dir,
    )
}
