use serde::{Deserialize, Serialize};

use super::mlp::{Grads, Mlp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |b: f64| b > 0.0 && b < 1.0;
        if !ok(self.beta1) || !ok(self.beta2) || self.eps <= 0.0 {
            return Err(Error::InvalidArgument(format!("bad Adam parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LrSchedule {
    Constant { lr: f64 },
    /// Linear interpolation from `start` to `end` over `steps`, then `end`.
    LinearDecay { start: f64, end: f64, steps: usize },
}

impl LrSchedule {
    pub fn at(&self, step: usize) -> f64 {
        match *self {
            LrSchedule::Constant { lr } => lr,
            LrSchedule::LinearDecay { start, end, steps } => {
                if step >= steps {
                    return end;
                }
                let frac = step.min(steps) as f64 / steps as f64;
                start + (end - start) * frac
            }
        }
    }
}

impl std::fmt::Display for LrSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LrSchedule::Constant { lr } => write!(f, "constant {lr:e}"),
            LrSchedule::LinearDecay { start, end, steps } => {
                write!(f, "linear_decay {start:e} {end:e} {steps}")
            }
        }
    }
}

impl std::str::FromStr for LrSchedule {
    type Err = String;

    /// `constant <lr>` or `linear_decay <start> <end> <steps>`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let num = |p: &str| p.parse::<f64>().map_err(|_| format!("`{p}` is not a number"));
        match parts.as_slice() {
            ["constant", lr] => Ok(LrSchedule::Constant { lr: num(lr)? }),
            ["linear_decay", a, b, n] => Ok(LrSchedule::LinearDecay {
                start: num(a)?,
                end: num(b)?,
                steps: n.parse().map_err(|_| format!("`{n}` is not a count"))?,
            }),
            _ => Err(format!("unknown lr schedule `{s}`")),
        }
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &Mlp) -> Self {
        let zeros: Vec<Vec<f64>> = net.params().iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
        }
    }
}

pub fn global_norm(grads: &Grads) -> f64 {
    grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
}

/// Rescales all gradients jointly so their global L2 norm is at most `max_norm`.
pub fn grad_norm_clip(grads: &mut Grads, max_norm: f64) {
    let norm = global_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= scale);
    }
}

/// One Adam update at 1-based `step` with learning rate `lr`.
pub fn adam_step(net: &mut Mlp, state: &mut AdamState, grads: &Grads, cfg: &AdamConfig, lr: f64, step: usize) {
    assert!(step >= 1, "Adam steps are 1-based");
    let bc1 = 1.0 - cfg.beta1.powi(step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(step as i32);
    for (((p, g), m), v) in net
        .params_mut()
        .into_iter()
        .zip(grads)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            p[i] -= lr * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Layer, Linear};

    fn scalar_net(w: f64) -> Mlp {
        let lin = Linear {
            in_dim: 1,
            out_dim: 1,
            weight: vec![w],
            bias: vec![0.0],
        };
        Mlp::from_layers(1, vec![Layer::Linear(lin)]).unwrap()
    }

    #[test]
    fn zero_gradients_leave_parameters() {
        let mut net = scalar_net(0.7);
        let before = net.clone();
        let mut st = AdamState::new(&net);
        let grads = vec![vec![0.0], vec![0.0]];
        for step in 1..=5 {
            adam_step(&mut net, &mut st, &grads, &AdamConfig::default(), 0.1, step);
        }
        assert_eq!(net, before);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // f(w) = w^2 at w = 1 has gradient 2; the bias-corrected first step is
        // lr * g / (|g| + eps).
        let mut net = scalar_net(1.0);
        let mut st = AdamState::new(&net);
        let cfg = AdamConfig::default();
        adam_step(&mut net, &mut st, &vec![vec![2.0], vec![0.0]], &cfg, 0.1, 1);
        let w = net.params()[0][0];
        let expected = 1.0 - 0.1 * 2.0 / (2.0 + cfg.eps);
        assert!((w - expected).abs() < 1e-15);
        assert!((w - 0.9).abs() < 1e-8);
    }

    #[test]
    fn linear_decay_midpoint() {
        let s = LrSchedule::LinearDecay {
            start: 1e-4,
            end: 1e-6,
            steps: 50_000,
        };
        assert!((s.at(25_000) - 5.05e-5).abs() < 1e-18);
        assert_eq!(s.at(0), 1e-4);
        assert_eq!(s.at(80_000), 1e-6);
        assert_eq!("linear_decay 1e-4 1e-6 50000".parse::<LrSchedule>().unwrap(), s);
        assert_eq!(s.to_string().parse::<LrSchedule>().unwrap(), s);
        assert!("cosine 1".parse::<LrSchedule>().is_err());
    }

    #[test]
    fn clipping_rescales_to_max_norm() {
        let mut g = vec![vec![6.0, 0.0], vec![-8.0]];
        grad_norm_clip(&mut g, 1.0);
        assert!((global_norm(&g) - 1.0).abs() < 1e-12);
        assert!(g[0][0] > 0.0 && g[1][0] < 0.0);
        let mut small = vec![vec![0.1, 0.2]];
        let before = small.clone();
        grad_norm_clip(&mut small, 1.0);
        assert_eq!(small, before);
    }
}
