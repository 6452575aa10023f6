use rand::distributions::WeightedIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::gridworld::{current_goal_of_observation, TaskSpec};
use crate::rng::seeded;
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;
pub const SHIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    /// Sum of squared distances after each assignment step.
    pub objective: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Index of the nearest centroid (lowest index on ties) and its squared distance.
pub fn nearest_centroid(centroids: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(c, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut impl rand::Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            Err(_) => rng.gen_range(0..points.len()),
        };
        let c = points[next].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm from a k-means++ start. Stops after
/// [`MAX_ITERATIONS`] or once the total squared centroid movement falls below
/// [`SHIFT_TOLERANCE`] relative to the total squared centroid norm. Empty
/// clusters keep their previous centroid.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeans> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot form {k} clusters from {} points",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidArgument("points have mixed dimensions".into()));
    }
    let mut rng = seeded(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignment = vec![0; points.len()];
    let mut objective = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let mut total = 0.0;
        for (a, p) in assignment.iter_mut().zip(points) {
            let (i, d) = nearest_centroid(&centroids, p);
            *a = i;
            total += d;
        }
        objective.push(total);

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignment.iter().zip(points) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        let (mut shift, mut norm) = (0.0, 0.0);
        for ((c, s), &n) in centroids.iter_mut().zip(&sums).zip(&counts) {
            if n > 0 {
                let next: Vec<f64> = s.iter().map(|v| v / n as f64).collect();
                shift += dist2(c, &next);
                *c = next;
            }
            norm += c.iter().map(|v| v * v).sum::<f64>();
        }
        if shift <= SHIFT_TOLERANCE * norm.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    for (a, p) in assignment.iter_mut().zip(points) {
        *a = nearest_centroid(&centroids, p).0;
    }
    Ok(KMeans {
        centroids,
        assignment,
        objective,
    })
}

/// Clustering features of an observation: normalized agent position and the
/// current-goal index divided by the world size, so that one goal step weighs
/// as much as one world unit of distance.
pub fn state_features(obs: &[f64], world_size: f64) -> Vec<f64> {
    vec![obs[0], obs[1], current_goal_of_observation(obs) as f64 / world_size]
}

fn world_size(ds: &Dataset) -> f64 {
    TaskSpec::builtin(ds.task).world_size
}

/// Every `(s_t, a_t, s_{t+k})` of a dataset, with the future clamped to the
/// final observation.
fn transitions(ds: &Dataset, k: usize) -> impl Iterator<Item = (&[f64], [f64; 2], &[f64])> {
    ds.trajectories.iter().flat_map(move |tr| {
        let last = tr.len();
        (0..last).map(move |t| {
            (
                tr.observations[t].as_slice(),
                tr.actions[t],
                tr.observations[(t + k).min(last)].as_slice(),
            )
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaMap {
    /// Centroids in feature space: normalized x, y and goal index over world size.
    pub centroids: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
    pub counts: Vec<usize>,
}

impl DeltaMap {
    pub fn mean(&self) -> f64 {
        self.delta.iter().sum::<f64>() / self.delta.len() as f64
    }
}

/// Per-centroid gap estimate: transitions are grouped by the centroid of
/// `s_t` and then by the centroid of `s_{t+k}`; the gap at a centroid is the
/// count-weighted variance of the per-group mean actions, summed over both
/// action dimensions.
pub fn delta_per_state_empirical(ds: &Dataset, k_clusters: usize, k: usize, seed: u64) -> Result<DeltaMap> {
    if k == 0 {
        return Err(Error::InvalidArgument("lookahead must be at least 1".into()));
    }
    let ws = world_size(ds);
    let items: Vec<_> = transitions(ds, k).collect();
    let points: Vec<Vec<f64>> = items.iter().map(|(s, _, _)| state_features(s, ws)).collect();
    let km = kmeans(&points, k_clusters, seed)?;

    let mut groups: Vec<std::collections::BTreeMap<usize, (usize, [f64; 2])>> = vec![Default::default(); k_clusters];
    for (&c, (_, a, fut)) in km.assignment.iter().zip(&items) {
        let f = nearest_centroid(&km.centroids, &state_features(fut, ws)).0;
        let e = groups[c].entry(f).or_insert((0, [0.0; 2]));
        e.0 += 1;
        e.1[0] += a[0];
        e.1[1] += a[1];
    }
    let mut delta = Vec::with_capacity(k_clusters);
    let mut counts = Vec::with_capacity(k_clusters);
    for g in &groups {
        let n: usize = g.values().map(|e| e.0).sum();
        counts.push(n);
        if n == 0 {
            delta.push(0.0);
            continue;
        }
        let mean = [0, 1].map(|d| g.values().map(|e| e.1[d]).sum::<f64>() / n as f64);
        let var: f64 = g
            .values()
            .map(|(cnt, sum)| {
                let m = [sum[0] / *cnt as f64, sum[1] / *cnt as f64];
                *cnt as f64 * ((m[0] - mean[0]).powi(2) + (m[1] - mean[1]).powi(2))
            })
            .sum::<f64>()
            / n as f64;
        delta.push(var);
    }
    Ok(DeltaMap {
        centroids: km.centroids,
        delta,
        counts,
    })
}

/// `E[Var(s_{t+k} | cluster(s_t))]` over full observations for each `k`,
/// with clusters fitted once on the current states.
pub fn future_variance_vs_k(ds: &Dataset, k_clusters: usize, k_list: &[usize], seed: u64) -> Result<Vec<(usize, f64)>> {
    if k_list.contains(&0) {
        return Err(Error::InvalidArgument("horizons must be at least 1".into()));
    }
    let currents: Vec<&[f64]> = transitions(ds, 1).map(|(s, _, _)| s).collect();
    let ws = world_size(ds);
    let points: Vec<Vec<f64>> = currents.iter().map(|s| state_features(s, ws)).collect();
    let km = kmeans(&points, k_clusters, seed)?;
    let dim = ds.obs_dim();
    k_list
        .iter()
        .map(|&k| {
            let mut sum = vec![vec![0.0; dim]; k_clusters];
            let mut sq = vec![vec![0.0; dim]; k_clusters];
            let mut cnt = vec![0usize; k_clusters];
            for (&c, (_, _, fut)) in km.assignment.iter().zip(transitions(ds, k)) {
                cnt[c] += 1;
                for d in 0..dim {
                    sum[c][d] += fut[d];
                    sq[c][d] += fut[d] * fut[d];
                }
            }
            let total: usize = cnt.iter().sum();
            let within: f64 = (0..k_clusters)
                .filter(|&c| cnt[c] > 0)
                .map(|c| {
                    let n = cnt[c] as f64;
                    (0..dim)
                        .map(|d| (sq[c][d] - sum[c][d] * sum[c][d] / n).max(0.0))
                        .sum::<f64>()
                })
                .sum();
            Ok((k, within / total as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Provenance, Trajectory};
    use crate::gridworld::TaskName;
    use rand::Rng as _;

    fn obs(x: f64, y: f64) -> Vec<f64> {
        let mut o = vec![0.0; TaskName::FourRoom.obs_dim()];
        o[0] = x;
        o[1] = y;
        o
    }

    fn traj(seed: u64, points: &[(f64, f64)], actions: &[[f64; 2]]) -> Trajectory {
        Trajectory {
            task: TaskName::FourRoom,
            seed,
            observations: points.iter().map(|&(x, y)| obs(x, y)).collect(),
            actions: actions.to_vec(),
        }
    }

    fn ds(trajs: Vec<Trajectory>) -> Dataset {
        Dataset::new(TaskName::FourRoom, Provenance::Surrogate, trajs).unwrap()
    }

    fn blobs() -> Vec<Vec<f64>> {
        let mut rng = seeded(0);
        let mut pts = Vec::new();
        for c in [[0.0, 0.0], [5.0, 5.0], [0.0, 5.0]] {
            for _ in 0..50 {
                pts.push(vec![c[0] + rng.gen_range(-0.5..0.5), c[1] + rng.gen_range(-0.5..0.5)]);
            }
        }
        pts
    }

    #[test]
    fn kmeans_objective_never_increases() {
        let pts: Vec<Vec<f64>> = {
            let mut rng = seeded(1);
            (0..400).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()]).collect()
        };
        let km = kmeans(&pts, 20, 3).unwrap();
        assert!(km.objective.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{:?}", km.objective);
        assert_eq!(km, kmeans(&pts, 20, 3).unwrap());
    }

    #[test]
    fn kmeans_separates_blobs() {
        let km = kmeans(&blobs(), 3, 7).unwrap();
        for b in 0..3 {
            let labels = &km.assignment[b * 50..(b + 1) * 50];
            assert!(labels.iter().all(|l| *l == labels[0]));
        }
        assert!(kmeans(&blobs(), 151, 0).is_err());
    }

    #[test]
    fn state_determined_actions_have_no_gap() {
        let pts = [(0.1, 0.1), (0.5, 0.5), (0.9, 0.1), (0.5, 0.5)];
        let act = |p: (f64, f64)| [p.0 - 0.5, p.1 - 0.5];
        let t1 = traj(0, &pts, &[act(pts[0]), act(pts[1]), act(pts[2])]);
        let back = [(0.9, 0.1), (0.5, 0.5), (0.1, 0.1)];
        let t2 = traj(1, &back, &[act(back[0]), act(back[1])]);
        let map = delta_per_state_empirical(&ds(vec![t1, t2]), 3, 1, 0).unwrap();
        assert!(map.delta.iter().all(|d| d.abs() < 1e-15), "{:?}", map.delta);
    }

    #[test]
    fn junction_gap_is_squared_half_distance() {
        let left = traj(0, &[(0.5, 0.5), (0.3, 0.5), (0.1, 0.5)], &[[-1.0, 0.0], [-1.0, 0.0]]);
        let right = traj(1, &[(0.5, 0.5), (0.7, 0.5), (0.9, 0.5)], &[[1.0, 0.2], [1.0, 0.0]]);
        let map = delta_per_state_empirical(&ds(vec![left, right]), 3, 1, 0).unwrap();
        let junction = (0..3)
            .find(|&c| (map.centroids[c][0] - 0.5).abs() < 1e-12)
            .expect("junction has its own centroid");
        // means [-1, 0] and [1, 0.2]: half-difference [1, 0.1]
        assert!((map.delta[junction] - 1.01).abs() < 1e-12, "{:?}", map);
        let others: f64 = (0..3).filter(|&c| c != junction).map(|c| map.delta[c]).sum();
        assert!(others < map.delta[junction]);
    }

    #[test]
    fn single_trajectory_has_no_future_variance() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (0.1 * i as f64, 0.2)).collect();
        let t = traj(0, &pts, &[[1.0, 0.0]; 5]);
        let v = future_variance_vs_k(&ds(vec![t]), 5, &[1, 2, 3], 0).unwrap();
        assert!(v.iter().all(|(_, x)| x.abs() < 1e-15), "{v:?}");
    }

    #[test]
    fn identical_clamped_futures_have_no_variance() {
        let pts = [(0.2, 0.2), (0.4, 0.2), (0.6, 0.2)];
        let t1 = traj(0, &pts, &[[1.0, 0.0]; 2]);
        let t2 = traj(1, &pts, &[[1.0, 0.0]; 2]);
        let v = future_variance_vs_k(&ds(vec![t1, t2]), 1, &[2, 5], 0).unwrap();
        assert!(v.iter().all(|(_, x)| x.abs() < 1e-15), "{v:?}");
    }
}
