//! Minimal feed-forward network engine: linear layers, ReLU, batch norm and a
//! tanh output, trained with squared error and Adam. Gradients are computed by
//! an explicit reverse pass over a recorded tape of layer inputs.

mod config;
mod matrix;
mod mlp;
mod optim;
mod train;

pub use config::{NetShape, Preset, TrainConfig};
pub use matrix::Matrix;
pub use mlp::{Architecture, BatchNorm, Grads, Layer, Linear, Mlp, Mode, CHECKPOINT_FORMAT};
pub use optim::{adam_step, global_norm, grad_norm_clip, AdamConfig, AdamState, LrSchedule};
pub use train::{fit, TrainLog};
