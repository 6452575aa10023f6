use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::gridworld::TaskSpec;

pub type Cell = (usize, usize);

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Occupancy grid over the world. A cell is blocked when its center lies
/// within half a unit of a wall segment.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub cell: f64,
    blocked: Vec<bool>,
}

/// Clearance from wall segments below which a cell center counts as blocked.
pub const WALL_CLEARANCE: f64 = 0.5;

impl Grid {
    pub fn new(task: &TaskSpec, cell: f64) -> Self {
        let n = (task.world_size / cell).round().max(1.0) as usize;
        let mut g = Self {
            nx: n,
            ny: n,
            cell,
            blocked: vec![false; n * n],
        };
        for j in 0..n {
            for i in 0..n {
                let c = g.center((i, j));
                g.blocked[j * n + i] = task.wall_clearance(c) < WALL_CLEARANCE;
            }
        }
        g
    }

    /// Fully open grid, used to check the search against closed forms.
    pub fn open(nx: usize, ny: usize, cell: f64) -> Self {
        Self {
            nx,
            ny,
            cell,
            blocked: vec![false; nx * ny],
        }
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        self.blocked[c.1 * self.nx + c.0] = blocked;
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.blocked[c.1 * self.nx + c.0]
    }

    pub fn cell_of(&self, p: [f64; 2]) -> Cell {
        let f = |v: f64, n: usize| ((v / self.cell).floor().max(0.0) as usize).min(n - 1);
        (f(p[0], self.nx), f(p[1], self.ny))
    }

    pub fn center(&self, c: Cell) -> [f64; 2] {
        [(c.0 as f64 + 0.5) * self.cell, (c.1 as f64 + 0.5) * self.cell]
    }

    fn index(&self, c: Cell) -> usize {
        c.1 * self.nx + c.0
    }

    /// 8-connected moves with cost 1 (axis) or sqrt 2 (diagonal). Diagonal
    /// moves need both orthogonal neighbours free. `start` and `goal` are
    /// traversable even when blocked.
    pub fn neighbours(&self, c: Cell, start: Cell, goal: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        let free = move |d: Cell| d == start || d == goal || self.is_free(d);
        let (x, y) = (c.0 as i64, c.1 as i64);
        let mut out = Vec::with_capacity(8);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= self.nx as i64 || ny >= self.ny as i64 {
                    continue;
                }
                let d = (nx as usize, ny as usize);
                if !free(d) {
                    continue;
                }
                if dx != 0 && dy != 0 {
                    if !free((nx as usize, c.1)) || !free((c.0, ny as usize)) {
                        continue;
                    }
                    out.push((d, SQRT2));
                } else {
                    out.push((d, 1.0));
                }
            }
        }
        out.into_iter()
    }
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = (a.0 as f64 - b.0 as f64).abs();
    let dy = (a.1 as f64 - b.1 as f64).abs();
    dx.max(dy) + (SQRT2 - 1.0) * dx.min(dy)
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on f, ties toward larger g (deeper nodes), then index.
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path in grid units. Returns the cells after `start` up to and
/// including `goal`, with the path cost, or `None` if unreachable.
pub fn astar(grid: &Grid, start: Cell, goal: Cell) -> Option<(Vec<Cell>, f64)> {
    if start == goal {
        return Some((Vec::new(), 0.0));
    }
    let n = grid.nx * grid.ny;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let h = |c: Cell| octile(c, goal);
    let si = grid.index(start);
    g[si] = 0.0;
    let mut open = BinaryHeap::new();
    open.push(Open {
        f: h(start),
        g: 0.0,
        idx: si,
    });
    let gi = grid.index(goal);
    while let Some(Open { idx, g: gc, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        if idx == gi {
            break;
        }
        let c = (idx % grid.nx, idx / grid.nx);
        for (d, w) in grid.neighbours(c, start, goal) {
            let di = grid.index(d);
            let cand = gc + w;
            if cand < g[di] - 1e-12 {
                g[di] = cand;
                parent[di] = idx;
                open.push(Open {
                    f: cand + h(d),
                    g: cand,
                    idx: di,
                });
            }
        }
    }
    if !g[gi].is_finite() {
        return None;
    }
    let mut path = Vec::new();
    let mut cur = gi;
    while cur != si {
        path.push((cur % grid.nx, cur / grid.nx));
        cur = parent[cur];
    }
    path.reverse();
    Some((path, g[gi]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::TaskName;
    use crate::rng::seeded;
    use rand::Rng;

    /// Plain Dijkstra over an explicit adjacency list, sharing nothing with
    /// the search above except the move rules.
    fn dijkstra(grid: &Grid, start: Cell, goal: Cell) -> Option<f64> {
        let n = grid.nx * grid.ny;
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        dist[grid.index(start)] = 0.0;
        loop {
            let mut best = None;
            for i in 0..n {
                if !done[i] && dist[i].is_finite() && best.is_none_or(|b: usize| dist[i] < dist[b]) {
                    best = Some(i);
                }
            }
            let Some(u) = best else { break };
            done[u] = true;
            let c = (u % grid.nx, u / grid.nx);
            for (d, w) in grid.neighbours(c, start, goal) {
                let di = grid.index(d);
                dist[di] = dist[di].min(dist[u] + w);
            }
        }
        let d = dist[grid.index(goal)];
        d.is_finite().then_some(d)
    }

    #[test]
    fn open_grid_diagonal_is_nine_moves() {
        let grid = Grid::open(10, 10, 1.0);
        let (path, cost) = astar(&grid, (0, 0), (9, 9)).unwrap();
        assert_eq!(path.len(), 9);
        assert!((cost - 9.0 * SQRT2).abs() < 1e-12);
        assert!((dijkstra(&grid, (0, 0), (9, 9)).unwrap() - cost).abs() < 1e-12);
    }

    #[test]
    fn no_corner_cutting() {
        let mut grid = Grid::open(3, 3, 1.0);
        grid.set_blocked((1, 0), true);
        let (path, cost) = astar(&grid, (0, 0), (2, 1)).unwrap();
        assert_ne!(path[0], (1, 1), "cut the blocked corner: {path:?}");
        // up, right, right: the diagonal out of (0, 0) would clip the blocked cell
        assert!((cost - 3.0).abs() < 1e-12);
    }

    #[test]
    fn walled_off_goal_is_unreachable() {
        let mut grid = Grid::open(5, 5, 1.0);
        for j in 0..5 {
            grid.set_blocked((2, j), true);
        }
        assert!(astar(&grid, (0, 0), (4, 4)).is_none());
    }

    #[test]
    fn cost_matches_dijkstra_on_every_layout() {
        for name in TaskName::ALL {
            let task = TaskSpec::builtin(name);
            let grid = Grid::new(&task, 0.5);
            let mut rng = seeded(name as u64);
            let mut checked = 0;
            while checked < 100 {
                let a = (rng.gen_range(0..grid.nx), rng.gen_range(0..grid.ny));
                let b = (rng.gen_range(0..grid.nx), rng.gen_range(0..grid.ny));
                if !grid.is_free(a) || !grid.is_free(b) {
                    continue;
                }
                let expected = dijkstra(&grid, a, b);
                let got = astar(&grid, a, b);
                match (expected, got) {
                    (Some(e), Some((path, c))) => {
                        assert!((e - c).abs() < 1e-9, "{name}: {a:?}->{b:?} {c} vs {e}");
                        assert_eq!(path.last(), Some(&b));
                    }
                    (None, None) => {}
                    other => panic!("{name}: reachability disagrees {other:?}"),
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn cells_next_to_walls_are_blocked() {
        let task = TaskSpec::builtin(TaskName::FourRoom);
        let grid = Grid::new(&task, 0.5);
        assert!(!grid.is_free(grid.cell_of([9.8, 2.0])));
        assert!(grid.is_free(grid.cell_of([9.3, 2.0])));
        assert!(grid.is_free(grid.cell_of([10.2, 5.0])));
    }
}
