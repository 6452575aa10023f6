use super::config::TrainConfig;
use super::matrix::Matrix;
use super::mlp::Mlp;
use super::optim::{adam_step, grad_norm_clip, AdamState};
use crate::rng::{derived, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    /// `(step, minibatch loss)` recorded every `total_steps / 100` steps.
    pub losses: Vec<(usize, f64)>,
}

/// Runs `cfg.total_steps` Adam updates on minibatches drawn by `batch` and
/// calls `on_checkpoint` after each step listed in `cfg.checkpoint_steps`.
///
/// A non-finite loss stops training before the offending update, so `net`
/// holds the last finite parameters when [`Error::NonFinite`] is returned.
pub fn fit(
    net: &mut Mlp,
    cfg: &TrainConfig,
    mut batch: impl FnMut(&mut Rng) -> (Matrix, Matrix),
    mut on_checkpoint: impl FnMut(usize, &Mlp) -> Result<()>,
) -> Result<TrainLog> {
    cfg.validate()?;
    let mut rng = derived(cfg.seed, 0xBA7C);
    let mut state = AdamState::new(net);
    let mut log = TrainLog::default();
    let every = (cfg.total_steps / 100).max(1);
    for step in 1..=cfg.total_steps {
        let (x, t) = batch(&mut rng);
        let (loss, mut grads) = net.loss_and_grads(&x, &t).map_err(|e| match e {
            Error::NonFinite { .. } => Error::NonFinite { step },
            other => other,
        })?;
        if let Some(c) = cfg.grad_clip {
            grad_norm_clip(&mut grads, c);
        }
        adam_step(net, &mut state, &grads, &cfg.adam, cfg.lr_schedule.at(step), step);
        if step % every == 0 || step == 1 {
            log.losses.push((step, loss));
        }
        if cfg.checkpoint_steps.contains(&step) {
            on_checkpoint(step, net)?;
        }
    }
    Ok(log)
}
