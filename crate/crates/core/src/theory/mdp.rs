use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest `n_states * n_actions * n_states` handled by exact enumeration.
pub const MAX_ENUMERATION: usize = 10_000_000;

const ROW_TOL: f64 = 1e-12;

/// Finite MDP with a stochastic expert and real-valued actions.
///
/// `transition[s][a][s2]` is the one-step kernel and `expert[s][a]` the
/// expert's action distribution. Futures are taken `horizon` steps ahead
/// with the expert acting after the first step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub expert: Vec<Vec<f64>>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub state_dist: Vec<f64>,
    pub action_values: Vec<f64>,
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyClass {
    Bc,
    Idm,
}

fn check_row(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidArgument(format!("{what} has a negative or non-finite entry")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(Error::InvalidArgument(format!("{what} sums to {sum}")));
    }
    Ok(())
}

/// Normalized vector of unit-exponential draws (a flat Dirichlet sample).
fn dirichlet(len: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    let mut v: Vec<f64> = draws.iter().map(|d| d / sum).collect();
    // push rounding into the last entry so the row sums to one exactly enough
    let head: f64 = v[..len - 1].iter().sum();
    v[len - 1] = (1.0 - head).max(0.0);
    v
}

impl TabularMdp {
    pub fn new(
        expert: Vec<Vec<f64>>,
        transition: Vec<Vec<Vec<f64>>>,
        state_dist: Vec<f64>,
        action_values: Vec<f64>,
        horizon: usize,
    ) -> Result<Self> {
        let mdp = Self {
            n_states: state_dist.len(),
            n_actions: action_values.len(),
            expert,
            transition,
            state_dist,
            action_values,
            horizon,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn validate(&self) -> Result<()> {
        let (ns, na) = (self.n_states, self.n_actions);
        if ns == 0 || na == 0 {
            return Err(Error::InvalidArgument("MDP needs at least one state and action".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if self.expert.len() != ns || self.transition.len() != ns {
            return Err(Error::DimensionMismatch {
                expected: ns,
                got: self.expert.len().min(self.transition.len()),
            });
        }
        if self.action_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("action values must be finite".into()));
        }
        check_row(&self.state_dist, "state distribution")?;
        for s in 0..ns {
            if self.expert[s].len() != na || self.transition[s].len() != na {
                return Err(Error::DimensionMismatch {
                    expected: na,
                    got: self.expert[s].len(),
                });
            }
            check_row(&self.expert[s], &format!("expert row {s}"))?;
            for a in 0..na {
                if self.transition[s][a].len() != ns {
                    return Err(Error::DimensionMismatch {
                        expected: ns,
                        got: self.transition[s][a].len(),
                    });
                }
                check_row(&self.transition[s][a], &format!("transition ({s}, {a})"))?;
            }
        }
        Ok(())
    }

    /// Two states; from state 0 a fair coin picks action -1 or +1, which moves
    /// to state 0 or 1 respectively. All mass starts in state 0.
    pub fn coin() -> Self {
        let stay = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        Self::new(
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![stay.clone(), stay],
            vec![1.0, 0.0],
            vec![-1.0, 1.0],
            1,
        )
        .expect("coin MDP is valid")
    }

    /// Random MDP: flat-Dirichlet expert rows and state distribution, action
    /// values uniform in [-1, 1], and transitions supported on at most three
    /// successor states so that futures carry information about the action.
    pub fn random(n_states: usize, n_actions: usize, horizon: usize, rng: &mut impl rand::Rng) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidArgument("MDP needs at least one state and action".into()));
        }
        let expert = (0..n_states).map(|_| dirichlet(n_actions, rng)).collect();
        let transition = (0..n_states)
            .map(|_| {
                (0..n_actions)
                    .map(|_| {
                        let support = rng.gen_range(1..=n_states.min(3));
                        let targets = rand::seq::index::sample(rng, n_states, support);
                        let w = dirichlet(support, rng);
                        let mut row = vec![0.0; n_states];
                        for (t, p) in targets.iter().zip(w) {
                            row[t] = p;
                        }
                        row
                    })
                    .collect()
            })
            .collect();
        let state_dist = dirichlet(n_states, rng);
        let action_values = (0..n_actions).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Self::new(expert, transition, state_dist, action_values, horizon)
    }

    pub fn check_feasible(&self) -> Result<()> {
        let size = self
            .n_states
            .checked_mul(self.n_actions)
            .and_then(|v| v.checked_mul(self.n_states));
        match size {
            Some(v) if v <= MAX_ENUMERATION => Ok(()),
            _ => Err(Error::Infeasible(format!(
                "{} states x {} actions exceeds the enumeration budget",
                self.n_states, self.n_actions
            ))),
        }
    }

    /// State-to-state kernel under the expert.
    fn expert_chain(&self) -> Vec<Vec<f64>> {
        let ns = self.n_states;
        let mut m = vec![vec![0.0; ns]; ns];
        for (s, row) in m.iter_mut().enumerate() {
            for a in 0..self.n_actions {
                let p = self.expert[s][a];
                for (t, v) in row.iter_mut().enumerate() {
                    *v += p * self.transition[s][a][t];
                }
            }
        }
        m
    }

    /// `future[s][a][s2]`: probability of being in `s2` after `horizon` steps
    /// when `a` is taken in `s` and the expert acts afterwards.
    pub fn future_kernel(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        self.check_feasible()?;
        let ns = self.n_states;
        let chain = self.expert_chain();
        let mut future = self.transition.clone();
        for _ in 1..self.horizon {
            for row in future.iter_mut().flatten() {
                let mut next = vec![0.0; ns];
                for (u, &p) in row.iter().enumerate() {
                    if p != 0.0 {
                        for (t, v) in next.iter_mut().enumerate() {
                            *v += p * chain[u][t];
                        }
                    }
                }
                *row = next;
            }
        }
        Ok(future)
    }

    /// Joint probability `P(s, a, s_{t+k})`, indexed `[s][a][s2]`.
    pub fn joint(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        let mut j = self.future_kernel()?;
        for (s, per_a) in j.iter_mut().enumerate() {
            for (a, row) in per_a.iter_mut().enumerate() {
                let w = self.state_dist[s] * self.expert[s][a];
                row.iter_mut().for_each(|v| *v *= w);
            }
        }
        Ok(j)
    }
}

/// Conditional moments of the action given a state or a (state, future) pair.
#[derive(Debug, Clone)]
pub(crate) struct Moments {
    /// `P(s)`, `E[a|s]`, `Var(a|s)` per state.
    pub state_mass: Vec<f64>,
    pub state_mean: Vec<f64>,
    pub state_var: Vec<f64>,
    /// `P(s, s2)`, `E[a|s,s2]`, `Var(a|s,s2)` indexed `s * n_states + s2`.
    pub pair_mass: Vec<f64>,
    pub pair_mean: Vec<f64>,
    pub pair_var: Vec<f64>,
}

impl Moments {
    pub fn of(mdp: &TabularMdp) -> Result<Self> {
        let joint = mdp.joint()?;
        let (ns, na) = (mdp.n_states, mdp.n_actions);
        let av = &mdp.action_values;
        let mut m = Moments {
            state_mass: vec![0.0; ns],
            state_mean: vec![0.0; ns],
            state_var: vec![0.0; ns],
            pair_mass: vec![0.0; ns * ns],
            pair_mean: vec![0.0; ns * ns],
            pair_var: vec![0.0; ns * ns],
        };
        for s in 0..ns {
            let (mut p, mut e1, mut e2) = (0.0, 0.0, 0.0);
            for a in 0..na {
                let w = mdp.state_dist[s] * mdp.expert[s][a];
                p += w;
                e1 += w * av[a];
                e2 += w * av[a] * av[a];
            }
            if p > 0.0 {
                m.state_mass[s] = p;
                m.state_mean[s] = e1 / p;
                m.state_var[s] = (e2 / p - (e1 / p).powi(2)).max(0.0);
            }
            for t in 0..ns {
                let (mut p, mut e1, mut e2) = (0.0, 0.0, 0.0);
                for a in 0..na {
                    let w = joint[s][a][t];
                    p += w;
                    e1 += w * av[a];
                    e2 += w * av[a] * av[a];
                }
                if p > 0.0 {
                    let i = s * ns + t;
                    m.pair_mass[i] = p;
                    m.pair_mean[i] = e1 / p;
                    m.pair_var[i] = (e2 / p - (e1 / p).powi(2)).max(0.0);
                }
            }
        }
        Ok(m)
    }
}

/// Expected prediction error of the optimal BC or IDM estimator.
pub fn exact_epe(mdp: &TabularMdp, class: PolicyClass) -> Result<f64> {
    let m = Moments::of(mdp)?;
    Ok(match class {
        PolicyClass::Bc => m.state_mass.iter().zip(&m.state_var).map(|(p, v)| p * v).sum(),
        PolicyClass::Idm => m.pair_mass.iter().zip(&m.pair_var).map(|(p, v)| p * v).sum(),
    })
}

/// Monte Carlo standard errors of the [`GapReport`] fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapStdErr {
    pub epe_bc: f64,
    pub epe_idm: f64,
    pub delta_hat: f64,
    pub var_reduction: f64,
    pub bias_gap: f64,
    pub b_mu_sq: f64,
    pub b_xi_sq: f64,
    /// Standard error of `delta + var_reduction + bias_gap`.
    pub rhs: f64,
    /// `sqrt(delta_hat^2 + rhs^2)`, the scale of the identity residual.
    pub combined: f64,
}

/// EPE gap quantities. In exact mode the estimator terms are zero and
/// `delta_hat == delta`; in Monte Carlo mode `epe_bc`/`epe_idm` are averages
/// over fitted estimators and `delta_hat` is their measured gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub epe_bc: f64,
    pub epe_idm: f64,
    /// `EPE(BC) - EPE(IDM)` of the optimal estimators.
    pub delta: f64,
    /// `E_s[Var_{s'|s}(E[a|s,s'])]`, the same quantity by the variance route.
    pub delta_variance: f64,
    pub delta_per_state: Vec<f64>,
    /// `E_s[Var(a|s)]`, the irreducible BC error.
    pub irreducible_bc: f64,
    pub delta_hat: f64,
    pub delta_hat_median: f64,
    pub var_reduction: f64,
    pub bias_gap: f64,
    pub b_mu_sq: f64,
    pub b_xi_sq: f64,
    /// `|delta_hat - (delta + var_reduction + bias_gap)|`.
    pub residual: f64,
    pub trials: usize,
    pub mc_std_err: Option<GapStdErr>,
}

impl GapReport {
    /// Whether the residual is within `n_sigma` combined standard errors.
    pub fn identity_holds(&self, n_sigma: f64) -> bool {
        let scale = self.mc_std_err.map_or(0.0, |e| e.combined);
        self.residual <= n_sigma * scale + 1e-12
    }
}

/// Exact gap of the optimal estimators, by both routes.
pub fn exact_gap(mdp: &TabularMdp) -> Result<GapReport> {
    let m = Moments::of(mdp)?;
    let ns = mdp.n_states;
    let epe_bc: f64 = m.state_mass.iter().zip(&m.state_var).map(|(p, v)| p * v).sum();
    let epe_idm: f64 = m.pair_mass.iter().zip(&m.pair_var).map(|(p, v)| p * v).sum();
    let delta_per_state: Vec<f64> = (0..ns)
        .map(|s| {
            let p = m.state_mass[s];
            if p == 0.0 {
                return 0.0;
            }
            (0..ns)
                .map(|t| {
                    let i = s * ns + t;
                    m.pair_mass[i] / p * (m.pair_mean[i] - m.state_mean[s]).powi(2)
                })
                .sum()
        })
        .collect();
    let delta_variance = m.state_mass.iter().zip(&delta_per_state).map(|(p, d)| p * d).sum();
    let delta = epe_bc - epe_idm;
    Ok(GapReport {
        epe_bc,
        epe_idm,
        delta,
        delta_variance,
        delta_per_state,
        irreducible_bc: epe_bc,
        delta_hat: delta,
        delta_hat_median: delta,
        var_reduction: 0.0,
        bias_gap: 0.0,
        b_mu_sq: 0.0,
        b_xi_sq: 0.0,
        residual: (delta - delta_variance).abs(),
        trials: 0,
        mc_std_err: None,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::seeded;

    /// Joint table by walking every action/state path explicitly.
    fn brute_joint(mdp: &TabularMdp) -> Vec<Vec<Vec<f64>>> {
        fn walk(mdp: &TabularMdp, s: usize, steps: usize, w: f64, out: &mut [f64]) {
            if steps == 0 {
                out[s] += w;
                return;
            }
            for a in 0..mdp.n_actions {
                for t in 0..mdp.n_states {
                    let p = w * mdp.expert[s][a] * mdp.transition[s][a][t];
                    if p > 0.0 {
                        walk(mdp, t, steps - 1, p, out);
                    }
                }
            }
        }
        let ns = mdp.n_states;
        (0..ns)
            .map(|s| {
                (0..mdp.n_actions)
                    .map(|a| {
                        let mut out = vec![0.0; ns];
                        let w = mdp.state_dist[s] * mdp.expert[s][a];
                        for t in 0..ns {
                            let p = w * mdp.transition[s][a][t];
                            if p > 0.0 {
                                walk(mdp, t, mdp.horizon - 1, p, &mut out);
                            }
                        }
                        out
                    })
                    .collect()
            })
            .collect()
    }

    /// EPEs as direct squared-error sums over all (s, a, s2) triples.
    pub(crate) fn brute_epes(mdp: &TabularMdp) -> (f64, f64) {
        let j = brute_joint(mdp);
        let (ns, na) = (mdp.n_states, mdp.n_actions);
        let av = &mdp.action_values;
        let mut bc = 0.0;
        let mut idm = 0.0;
        for s in 0..ns {
            let ps: f64 = j[s].iter().flatten().sum();
            if ps == 0.0 {
                continue;
            }
            let mean_s: f64 = (0..na).map(|a| av[a] * j[s][a].iter().sum::<f64>()).sum::<f64>() / ps;
            for t in 0..ns {
                let pst: f64 = (0..na).map(|a| j[s][a][t]).sum();
                if pst == 0.0 {
                    continue;
                }
                let mean_st: f64 = (0..na).map(|a| av[a] * j[s][a][t]).sum::<f64>() / pst;
                for a in 0..na {
                    bc += j[s][a][t] * (av[a] - mean_s).powi(2);
                    idm += j[s][a][t] * (av[a] - mean_st).powi(2);
                }
            }
        }
        (bc, idm)
    }

    #[test]
    fn coin_by_hand() {
        let mdp = TabularMdp::coin();
        assert_eq!(exact_epe(&mdp, PolicyClass::Bc).unwrap(), 1.0);
        assert_eq!(exact_epe(&mdp, PolicyClass::Idm).unwrap(), 0.0);
        let g = exact_gap(&mdp).unwrap();
        assert_eq!((g.delta, g.delta_variance), (1.0, 1.0));
        assert_eq!(g.delta_per_state, vec![1.0, 0.0]);
    }

    #[test]
    fn deterministic_mdp_has_no_gap() {
        let t = vec![vec![vec![0.0, 1.0, 0.0]], vec![vec![0.0, 0.0, 1.0]], vec![vec![1.0, 0.0, 0.0]]];
        let mdp = TabularMdp::new(vec![vec![1.0]; 3], t, vec![0.2, 0.3, 0.5], vec![0.7], 2).unwrap();
        let g = exact_gap(&mdp).unwrap();
        assert!(g.epe_bc.abs() < 1e-15 && g.epe_idm.abs() < 1e-15 && g.delta.abs() < 1e-15, "{g:?}");
        assert!(g.delta_per_state.iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn formula_matches_brute_force_on_random_mdps() {
        let mut rng = seeded(5);
        for k in 1..=3 {
            for _ in 0..10 {
                let mdp = TabularMdp::random(10, 3, k, &mut rng).unwrap();
                let (bc, idm) = brute_epes(&mdp);
                assert!((exact_epe(&mdp, PolicyClass::Bc).unwrap() - bc).abs() < 1e-12);
                assert!((exact_epe(&mdp, PolicyClass::Idm).unwrap() - idm).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn infeasible_size_is_rejected() {
        let mdp = TabularMdp {
            n_states: 2000,
            n_actions: 3,
            expert: vec![],
            transition: vec![],
            state_dist: vec![],
            action_values: vec![],
            horizon: 1,
        };
        assert!(matches!(mdp.check_feasible(), Err(Error::Infeasible(_))));
    }

    #[test]
    fn rows_must_sum_to_one() {
        let t = vec![vec![vec![1.0]]];
        assert!(TabularMdp::new(vec![vec![0.9]], t, vec![1.0], vec![0.0], 1).is_err());
    }
}
