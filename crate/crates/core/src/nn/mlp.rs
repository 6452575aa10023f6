use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::{gemm, Matrix, View};
use crate::rng::seeded;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "pidm-mlp";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics; running statistics are updated by [`Mlp::forward`].
    Train,
    /// Running statistics; pure.
    Eval,
}

/// Layer widths of a policy network.
///
/// Builds `Linear(input, e1) ReLU ... Linear(., e_last) [BatchNorm] ReLU
/// Linear(., h1) ReLU ... Linear(., h_last) Tanh`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub encoder: Vec<usize>,
    pub batchnorm: bool,
    pub head: Vec<usize>,
}

impl Architecture {
    /// Encoder MLP(512, 1024, 256), batch norm, then MLP(256, 2).
    pub fn reference(input: usize) -> Self {
        Self {
            input,
            encoder: vec![512, 1024, 256],
            batchnorm: true,
            head: vec![256, 2],
        }
    }

    pub fn output(&self) -> usize {
        self.head.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `in_dim x out_dim`; `y = x W + b`.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// Uniform fan-in initialization: weights in `±sqrt(6 / fan_in)`, biases
    /// in `±1 / sqrt(fan_in)`.
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut impl rand::Rng) -> Self {
        let wb = (6.0 / in_dim as f64).sqrt();
        let bb = 1.0 / (in_dim as f64).sqrt();
        Self {
            in_dim,
            out_dim,
            weight: (0..in_dim * out_dim).map(|_| rng.gen_range(-wb..wb)).collect(),
            bias: (0..out_dim).map(|_| rng.gen_range(-bb..bb)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub dim: usize,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            momentum: 0.1,
            eps: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Linear(Linear),
    Relu,
    BatchNorm(BatchNorm),
    Tanh,
}

/// Gradients in the order of [`Mlp::params`].
pub type Grads = Vec<Vec<f64>>;

struct BnCache {
    xhat: Matrix,
    inv_std: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
}

/// Per-layer inputs recorded during a forward pass.
struct Tape {
    inputs: Vec<Matrix>,
    bn: Vec<Option<BnCache>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub input_dim: usize,
    pub layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    architecture: Option<Architecture>,
    net: Mlp,
}

impl Mlp {
    pub fn new(arch: &Architecture, seed: u64) -> Result<Self> {
        if arch.encoder.is_empty() || arch.head.is_empty() {
            return Err(Error::InvalidArgument("encoder and head need at least one layer".into()));
        }
        let mut rng = seeded(seed);
        let mut layers = Vec::new();
        let mut prev = arch.input;
        for (i, &w) in arch.encoder.iter().enumerate() {
            layers.push(Layer::Linear(Linear::init(prev, w, &mut rng)));
            if i + 1 == arch.encoder.len() && arch.batchnorm {
                layers.push(Layer::BatchNorm(BatchNorm::new(w)));
            }
            layers.push(Layer::Relu);
            prev = w;
        }
        for (i, &w) in arch.head.iter().enumerate() {
            layers.push(Layer::Linear(Linear::init(prev, w, &mut rng)));
            layers.push(if i + 1 == arch.head.len() { Layer::Tanh } else { Layer::Relu });
            prev = w;
        }
        Self::from_layers(arch.input, layers)
    }

    /// Arbitrary layer stack; validates that widths chain and that tanh, if
    /// present, is the last layer.
    pub fn from_layers(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        let mut width = input_dim;
        for (i, l) in layers.iter().enumerate() {
            match l {
                Layer::Linear(lin) => {
                    if lin.in_dim != width
                        || lin.weight.len() != lin.in_dim * lin.out_dim
                        || lin.bias.len() != lin.out_dim
                    {
                        return Err(Error::DimensionMismatch {
                            expected: width,
                            got: lin.in_dim,
                        });
                    }
                    width = lin.out_dim;
                }
                Layer::BatchNorm(bn) => {
                    if bn.dim != width {
                        return Err(Error::DimensionMismatch {
                            expected: width,
                            got: bn.dim,
                        });
                    }
                    if bn.running_var.iter().any(|v| *v <= 0.0) {
                        return Err(Error::InvalidArgument("batch norm running_var must be positive".into()));
                    }
                }
                Layer::Tanh if i + 1 != layers.len() => {
                    return Err(Error::InvalidArgument("tanh is only allowed as the final layer".into()));
                }
                _ => {}
            }
        }
        Ok(Self { input_dim, layers })
    }

    pub fn output_dim(&self) -> usize {
        self.layers
            .iter()
            .rev()
            .find_map(|l| match l {
                Layer::Linear(lin) => Some(lin.out_dim),
                _ => None,
            })
            .unwrap_or(self.input_dim)
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Linear(lin) => {
                    out.push(&lin.weight);
                    out.push(&lin.bias);
                }
                Layer::BatchNorm(bn) => {
                    out.push(&bn.gamma);
                    out.push(&bn.beta);
                }
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            match l {
                Layer::Linear(lin) => {
                    out.push(&mut lin.weight);
                    out.push(&mut lin.bias);
                }
                Layer::BatchNorm(bn) => {
                    out.push(&mut bn.gamma);
                    out.push(&mut bn.beta);
                }
                _ => {}
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.cols,
            });
        }
        Ok(())
    }

    fn run(&self, x: &Matrix, mode: Mode, mut tape: Option<&mut Tape>) -> Matrix {
        let n = x.rows;
        let mut h = x.clone();
        for layer in &self.layers {
            let mut bn_cache = None;
            let out = match layer {
                Layer::Linear(lin) => {
                    let mut y = Matrix::zeros(n, lin.out_dim);
                    for r in 0..n {
                        y.row_mut(r).copy_from_slice(&lin.bias);
                    }
                    gemm(
                        n,
                        lin.in_dim,
                        lin.out_dim,
                        View::normal(&h.data, lin.in_dim),
                        View::normal(&lin.weight, lin.out_dim),
                        &mut y.data,
                        1.0,
                    );
                    y
                }
                Layer::Relu => {
                    let mut y = h.clone();
                    y.data.iter_mut().for_each(|v| *v = v.max(0.0));
                    y
                }
                Layer::Tanh => {
                    let mut y = h.clone();
                    y.data.iter_mut().for_each(|v| *v = v.tanh());
                    y
                }
                Layer::BatchNorm(bn) => {
                    let d = bn.dim;
                    let (mean, var) = match mode {
                        Mode::Train => batch_moments(&h),
                        Mode::Eval => (bn.running_mean.clone(), bn.running_var.clone()),
                    };
                    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + bn.eps).sqrt()).collect();
                    let mut xhat = Matrix::zeros(n, d);
                    let mut y = Matrix::zeros(n, d);
                    for r in 0..n {
                        let src = h.row(r);
                        for j in 0..d {
                            let xh = (src[j] - mean[j]) * inv_std[j];
                            xhat.data[r * d + j] = xh;
                            y.data[r * d + j] = bn.gamma[j] * xh + bn.beta[j];
                        }
                    }
                    if mode == Mode::Train {
                        bn_cache = Some(BnCache {
                            xhat,
                            inv_std,
                            mean,
                            var,
                        });
                    }
                    y
                }
            };
            if let Some(t) = tape.as_deref_mut() {
                t.inputs.push(std::mem::replace(&mut h, out));
                t.bn.push(bn_cache);
            } else {
                h = out;
            }
        }
        h
    }

    fn update_running_stats(&mut self, tape: &Tape, n: usize) {
        for (layer, cache) in self.layers.iter_mut().zip(&tape.bn) {
            if let (Layer::BatchNorm(bn), Some(c)) = (layer, cache) {
                let unbias = if n > 1 { n as f64 / (n - 1) as f64 } else { 1.0 };
                for j in 0..bn.dim {
                    bn.running_mean[j] = (1.0 - bn.momentum) * bn.running_mean[j] + bn.momentum * c.mean[j];
                    bn.running_var[j] =
                        (1.0 - bn.momentum) * bn.running_var[j] + bn.momentum * c.var[j] * unbias;
                }
            }
        }
    }

    /// Forward pass. In train mode batch statistics are used and batch-norm
    /// running statistics are updated.
    pub fn forward(&mut self, x: &Matrix, mode: Mode) -> Result<Matrix> {
        self.check_input(x)?;
        match mode {
            Mode::Eval => Ok(self.run(x, mode, None)),
            Mode::Train => {
                let mut tape = Tape {
                    inputs: Vec::new(),
                    bn: Vec::new(),
                };
                let y = self.run(x, mode, Some(&mut tape));
                self.update_running_stats(&tape, x.rows);
                Ok(y)
            }
        }
    }

    /// Eval-mode forward pass.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        Ok(self.run(x, Mode::Eval, None))
    }

    pub fn predict_one(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = Matrix::from_vec(1, input.len(), input.to_vec())?;
        Ok(self.predict(&x)?.data)
    }

    /// Mean over rows of the summed squared error; does not touch running
    /// statistics.
    pub fn loss(&self, x: &Matrix, targets: &Matrix, mode: Mode) -> Result<f64> {
        self.check_input(x)?;
        let y = self.run(x, mode, None);
        check_targets(&y, targets)?;
        Ok(squared_error(&y, targets))
    }

    /// Train-mode loss and reverse-mode gradients (running statistics are
    /// updated as in [`Mlp::forward`]). A non-finite loss leaves the network
    /// untouched.
    pub fn loss_and_grads(&mut self, x: &Matrix, targets: &Matrix) -> Result<(f64, Grads)> {
        self.check_input(x)?;
        let mut tape = Tape {
            inputs: Vec::new(),
            bn: Vec::new(),
        };
        let y = self.run(x, Mode::Train, Some(&mut tape));
        check_targets(&y, targets)?;
        let loss = squared_error(&y, targets);
        if !loss.is_finite() {
            return Err(Error::NonFinite { step: 0 });
        }
        let n = x.rows as f64;
        let mut dy = Matrix::zeros(y.rows, y.cols);
        for ((d, p), t) in dy.data.iter_mut().zip(&y.data).zip(&targets.data) {
            *d = 2.0 * (p - t) / n;
        }
        let grads = self.backward(&tape, &y, dy);
        self.update_running_stats(&tape, x.rows);
        Ok((loss, grads))
    }

    fn backward(&self, tape: &Tape, output: &Matrix, mut dy: Matrix) -> Grads {
        let mut grads_rev: Vec<Vec<f64>> = Vec::new();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let input = &tape.inputs[idx];
            let n = input.rows;
            match layer {
                Layer::Tanh => {
                    // Output of the last layer is the network output.
                    debug_assert_eq!(idx + 1, self.layers.len());
                    for (d, y) in dy.data.iter_mut().zip(&output.data) {
                        *d *= 1.0 - y * y;
                    }
                }
                Layer::Relu => {
                    for (d, x) in dy.data.iter_mut().zip(&input.data) {
                        if *x <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                Layer::Linear(lin) => {
                    let mut dw = vec![0.0; lin.in_dim * lin.out_dim];
                    gemm(
                        lin.in_dim,
                        n,
                        lin.out_dim,
                        View::transposed(&input.data, lin.in_dim),
                        View::normal(&dy.data, lin.out_dim),
                        &mut dw,
                        0.0,
                    );
                    let mut db = vec![0.0; lin.out_dim];
                    for r in 0..n {
                        for (b, d) in db.iter_mut().zip(dy.row(r)) {
                            *b += d;
                        }
                    }
                    let mut dx = Matrix::zeros(n, lin.in_dim);
                    if idx > 0 {
                        gemm(
                            n,
                            lin.out_dim,
                            lin.in_dim,
                            View::normal(&dy.data, lin.out_dim),
                            View::transposed(&lin.weight, lin.out_dim),
                            &mut dx.data,
                            0.0,
                        );
                    }
                    grads_rev.push(db);
                    grads_rev.push(dw);
                    dy = dx;
                }
                Layer::BatchNorm(bn) => {
                    let c = tape.bn[idx].as_ref().expect("train-mode tape has batch-norm cache");
                    let d = bn.dim;
                    let mut dgamma = vec![0.0; d];
                    let mut dbeta = vec![0.0; d];
                    let mut sum_dxhat = vec![0.0; d];
                    let mut sum_dxhat_xhat = vec![0.0; d];
                    for r in 0..n {
                        for j in 0..d {
                            let g = dy.data[r * d + j];
                            let xh = c.xhat.data[r * d + j];
                            dgamma[j] += g * xh;
                            dbeta[j] += g;
                            let dxh = g * bn.gamma[j];
                            sum_dxhat[j] += dxh;
                            sum_dxhat_xhat[j] += dxh * xh;
                        }
                    }
                    let nf = n as f64;
                    let mut dx = Matrix::zeros(n, d);
                    for r in 0..n {
                        for j in 0..d {
                            let dxh = dy.data[r * d + j] * bn.gamma[j];
                            let xh = c.xhat.data[r * d + j];
                            dx.data[r * d + j] =
                                c.inv_std[j] / nf * (nf * dxh - sum_dxhat[j] - xh * sum_dxhat_xhat[j]);
                        }
                    }
                    grads_rev.push(dbeta);
                    grads_rev.push(dgamma);
                    dy = dx;
                }
            }
        }
        grads_rev.reverse();
        grads_rev
    }

    pub fn save_checkpoint(&self, path: &Path, arch: Option<&Architecture>) -> Result<()> {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            architecture: arch.cloned(),
            net: self.clone(),
        };
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, serde_json::to_vec(&ck)?)?;
        Ok(())
    }

    /// Loads a checkpoint and rejects it unless it was written for `expected`.
    pub fn load_checkpoint(path: &Path, expected: &Architecture) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_slice(&std::fs::read(path)?)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::ArchitectureMismatch(format!(
                "{} is not a v{CHECKPOINT_VERSION} {CHECKPOINT_FORMAT} checkpoint",
                path.display()
            )));
        }
        match &ck.architecture {
            Some(a) if a == expected => {}
            other => {
                return Err(Error::ArchitectureMismatch(format!(
                    "checkpoint has {other:?}, expected {expected:?}"
                )))
            }
        }
        let fresh = Mlp::new(expected, 0)?;
        let shapes = |m: &Mlp| m.params().iter().map(|p| p.len()).collect::<Vec<_>>();
        if shapes(&fresh) != shapes(&ck.net) || ck.net.input_dim != expected.input {
            return Err(Error::ArchitectureMismatch("parameter shapes differ from descriptor".into()));
        }
        Mlp::from_layers(ck.net.input_dim, ck.net.layers)
    }
}

fn batch_moments(h: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = h.rows.max(1) as f64;
    let mut mean = vec![0.0; h.cols];
    for r in 0..h.rows {
        for (m, v) in mean.iter_mut().zip(h.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; h.cols];
    for r in 0..h.rows {
        for ((s, v), m) in var.iter_mut().zip(h.row(r)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    (mean, var)
}

fn check_targets(y: &Matrix, t: &Matrix) -> Result<()> {
    if y.rows != t.rows || y.cols != t.cols {
        return Err(Error::DimensionMismatch {
            expected: y.rows * y.cols,
            got: t.rows * t.cols,
        });
    }
    Ok(())
}

fn squared_error(y: &Matrix, t: &Matrix) -> f64 {
    let sum: f64 = y.data.iter().zip(&t.data).map(|(a, b)| (a - b) * (a - b)).sum();
    sum / y.rows.max(1) as f64
}
