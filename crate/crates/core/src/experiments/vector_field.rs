use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::gridworld::{Observation, TaskSpec};
use crate::policies::IdmPolicy;
use crate::theory::{kmeans, state_features};
use crate::{Error, Result};

/// Unit directions E, NE, N, NW, W, SW, S, SE.
pub const DIRECTIONS: [[f64; 2]; 8] = {
    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;
    [[1.0, 0.0], [H, H], [0.0, 1.0], [-H, H], [-1.0, 0.0], [-H, -H], [0.0, -1.0], [H, -H]]
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorRow {
    pub centroid: usize,
    /// World coordinates of the centroid.
    pub x: f64,
    pub y: f64,
    pub goal: usize,
    pub direction: usize,
    pub dx: f64,
    pub dy: f64,
}

/// Observation for a clustering centroid: agent at the centroid position and
/// the goals before the centroid's current-goal index marked reached.
pub fn centroid_observation(task: &TaskSpec, centroid: &[f64]) -> (Observation, usize) {
    let n_goals = task.goals.len();
    let goal = ((centroid[2] * task.world_size).round().max(0.0) as usize).min(n_goals);
    let mut obs = Vec::with_capacity(task.obs_dim());
    obs.push(centroid[0]);
    obs.push(centroid[1]);
    for (i, g) in task.goals.iter().enumerate() {
        obs.push(g[0] / task.world_size);
        obs.push(g[1] / task.world_size);
        obs.push(if i < goal { 1.0 } else { 0.0 });
    }
    (obs, goal)
}

/// IDM actions for the eight futures one `step_scale` away from each centroid.
pub fn vector_field_at(idm: &IdmPolicy, task: &TaskSpec, centroids: &[Vec<f64>], k: usize) -> Result<Vec<VectorRow>> {
    let d = task.step_scale / task.world_size;
    let mut rows = Vec::with_capacity(centroids.len() * 8);
    for (c, cen) in centroids.iter().enumerate() {
        if cen.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: cen.len() });
        }
        let (obs, goal) = centroid_observation(task, cen);
        for (j, dir) in DIRECTIONS.iter().enumerate() {
            let mut fut = obs.clone();
            fut[0] += d * dir[0];
            fut[1] += d * dir[1];
            let a = idm.act(&obs, &fut, k)?;
            rows.push(VectorRow {
                centroid: c,
                x: cen[0] * task.world_size,
                y: cen[1] * task.world_size,
                goal,
                direction: j,
                dx: a[0],
                dy: a[1],
            });
        }
    }
    Ok(rows)
}

/// Clusters the dataset's states into `k_clusters` centroids and queries the
/// IDM at each with the eight displaced futures.
pub fn export_vector_field(
    idm: &IdmPolicy,
    ds: &Dataset,
    task: &TaskSpec,
    k_clusters: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<VectorRow>> {
    let points: Vec<Vec<f64>> = ds
        .trajectories
        .iter()
        .flat_map(|t| t.observations[..t.len()].iter().map(|o| state_features(o, task.world_size)))
        .collect();
    let km = kmeans(&points, k_clusters, seed)?;
    vector_field_at(idm, task, &km.centroids, k)
}

pub fn vector_field_csv(rows: &[VectorRow]) -> String {
    let mut s = String::from("centroid,x,y,goal,direction,dx,dy\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:.6},{:.6},{},{},{:.6},{:.6}",
            r.centroid, r.x, r.y, r.goal, r.direction, r.dx, r.dy
        );
    }
    s
}

/// Rows grouped per centroid, in direction order.
fn per_centroid(rows: &[VectorRow]) -> Vec<Vec<[f64; 2]>> {
    let n = rows.iter().map(|r| r.centroid + 1).max().unwrap_or(0);
    let mut out = vec![Vec::new(); n];
    for r in rows {
        out[r.centroid].push([r.dx, r.dy]);
    }
    out
}

/// Mean squared deviation of the eight actions from their mean, per centroid.
pub fn future_sensitivity(rows: &[VectorRow]) -> Vec<f64> {
    per_centroid(rows)
        .iter()
        .map(|acts| {
            let n = acts.len() as f64;
            let m = [0, 1].map(|d| acts.iter().map(|a| a[d]).sum::<f64>() / n);
            acts.iter().map(|a| (a[0] - m[0]).powi(2) + (a[1] - m[1]).powi(2)).sum::<f64>() / n
        })
        .collect()
}

/// Largest angle in degrees between any two action vectors.
pub fn angular_spread(actions: &[[f64; 2]]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, a) in actions.iter().enumerate() {
        for b in &actions[i + 1..] {
            let (na, nb) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
            if na == 0.0 || nb == 0.0 {
                continue;
            }
            let cos = ((a[0] * b[0] + a[1] * b[1]) / (na * nb)).clamp(-1.0, 1.0);
            best = best.max(cos.acos().to_degrees());
        }
    }
    best
}

pub fn angular_spreads(rows: &[VectorRow]) -> Vec<f64> {
    per_centroid(rows).iter().map(|a| angular_spread(a)).collect()
}

/// Ratio of the mean `score` over the top decile of `key` to the mean over
/// the bottom decile.
pub fn decile_ratio(key: &[f64], score: &[f64]) -> Result<f64> {
    if key.len() != score.len() || key.len() < 10 {
        return Err(Error::InvalidArgument("need at least ten paired values".into()));
    }
    let mut idx: Vec<usize> = (0..key.len()).collect();
    idx.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));
    let m = key.len() / 10;
    let mean = |ids: &[usize]| ids.iter().map(|&i| score[i]).sum::<f64>() / ids.len() as f64;
    Ok(mean(&idx[idx.len() - m..]) / mean(&idx[..m]))
}
