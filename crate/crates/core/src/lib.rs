//! Behavior cloning (BC) and predictive inverse dynamics models (PIDM) on
//! stochastic 2D goal-sequence navigation, together with exact and Monte Carlo
//! checks of the bias-variance quantities that explain when conditioning on a
//! predicted future state pays off.
//!
//! Layout of the crate:
//!
//! - [`gridworld`]: continuous 2D navigation tasks with noisy transitions.
//! - [`demonstrator`]: A* receding-horizon planner and a noisy surrogate used
//!   to collect demonstrations.
//! - [`dataset`]: trajectories, JSON-Lines storage, splits and minibatches.
//! - [`nn`]: a small MLP engine (linear, ReLU, batch norm, tanh) with Adam.
//! - [`policies`]: BC and IDM training, the instance-based state predictor and
//!   rollout evaluation.
//! - [`theory`]: tabular MDP enumeration, estimator decomposition, Fisher
//!   ratios, efficiency ratios and the empirical dataset analyses.
//! - [`experiments`]: seeded sweeps, vector-field export and reports.

pub mod dataset;
pub mod demonstrator;
pub mod error;
pub mod experiments;
pub mod gridworld;
pub mod kv;
pub mod nn;
pub mod policies;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
