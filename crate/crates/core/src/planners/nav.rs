//! Traversability grid and shortest paths for disc-shaped robots.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use crate::world::{CellGrid, Point, Scenario};

const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Cells whose centers a robot of the given clearance can occupy, with
/// 8-connected moves that neither cut corners nor graze obstacles.
#[derive(Debug, Clone)]
pub struct NavGrid {
    grid: Arc<CellGrid>,
    clearance: f64,
    ok: Vec<bool>,
    /// Bit `d` set when the move along `DIRS[d]` is allowed.
    edges: Vec<u8>,
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    key: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on key, then on index
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl NavGrid {
    pub fn new(scenario: &Scenario, grid: Arc<CellGrid>, clearance: f64) -> Self {
        let n = grid.len();
        let ok: Vec<bool> = (0..n)
            .map(|i| grid.is_free(i) && !scenario.disc_blocked(grid.center(i), clearance))
            .collect();
        let mut edges = vec![0u8; n];
        for i in 0..n {
            if !ok[i] {
                continue;
            }
            let (x, y) = grid.coords(i);
            for (d, &(dx, dy)) in DIRS.iter().enumerate() {
                let Some(j) = Self::offset(&grid, x, y, dx, dy) else {
                    continue;
                };
                if !ok[j] {
                    continue;
                }
                if dx != 0 && dy != 0 {
                    let (Some(a), Some(b)) = (
                        Self::offset(&grid, x, y, dx, 0),
                        Self::offset(&grid, x, y, 0, dy),
                    ) else {
                        continue;
                    };
                    if !ok[a] || !ok[b] {
                        continue;
                    }
                }
                if scenario.segment_clear(grid.center(i), grid.center(j), clearance) {
                    edges[i] |= 1 << d;
                }
            }
        }
        Self {
            grid,
            clearance,
            ok,
            edges,
        }
    }

    fn offset(grid: &CellGrid, x: usize, y: usize, dx: i64, dy: i64) -> Option<usize> {
        let nx = x as i64 + dx;
        let ny = y as i64 + dy;
        if nx < 0 || ny < 0 || nx >= grid.width() as i64 || ny >= grid.height() as i64 {
            return None;
        }
        Some(grid.index(nx as usize, ny as usize))
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn is_nav(&self, idx: usize) -> bool {
        self.ok[idx]
    }

    pub fn nav_count(&self) -> usize {
        self.ok.iter().filter(|&&b| b).count()
    }

    pub fn center(&self, idx: usize) -> Point {
        self.grid.center(idx)
    }

    /// Allowed moves out of `idx` with their lengths.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (x, y) = self.grid.coords(idx);
        let res = self.grid.resolution();
        let mask = self.edges[idx];
        DIRS.iter().enumerate().filter_map(move |(d, &(dx, dy))| {
            if mask & (1 << d) == 0 {
                return None;
            }
            let j = Self::offset(&self.grid, x, y, dx, dy)?;
            let len = if dx != 0 && dy != 0 {
                res * std::f64::consts::SQRT_2
            } else {
                res
            };
            Some((j, len))
        })
    }

    /// Shortest path lengths from the nearest of `sources` to every cell
    /// (infinity where unreachable).
    pub fn distance_field(&self, sources: &[usize]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.grid.len()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            if self.ok[s] {
                dist[s] = 0.0;
                heap.push(Entry { key: 0.0, idx: s });
            }
        }
        while let Some(Entry { key, idx }) = heap.pop() {
            if key > dist[idx] {
                continue;
            }
            for (j, len) in self.neighbors(idx) {
                let nd = key + len;
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Entry { key: nd, idx: j });
                }
            }
        }
        dist
    }

    fn octile(&self, a: usize, b: usize) -> f64 {
        let (ax, ay) = self.grid.coords(a);
        let (bx, by) = self.grid.coords(b);
        let dx = ax.abs_diff(bx) as f64;
        let dy = ay.abs_diff(by) as f64;
        let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
        (hi + (std::f64::consts::SQRT_2 - 1.0) * lo) * self.grid.resolution()
    }

    /// A* path of cells from `from` to `to`, avoiding cells rejected by `blocked`.
    pub fn astar(
        &self,
        from: usize,
        to: usize,
        blocked: impl Fn(usize) -> bool,
    ) -> Option<Vec<usize>> {
        if !self.ok[from] || !self.ok[to] {
            return None;
        }
        if from == to {
            return Some(vec![from]);
        }
        let n = self.grid.len();
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        g[from] = 0.0;
        heap.push(Entry {
            key: self.octile(from, to),
            idx: from,
        });
        while let Some(Entry { key, idx }) = heap.pop() {
            if idx == to {
                let mut path = vec![to];
                let mut c = to;
                while c != from {
                    c = parent[c];
                    path.push(c);
                }
                path.reverse();
                return Some(path);
            }
            if key > g[idx] + self.octile(idx, to) + 1e-9 {
                continue;
            }
            for (j, len) in self.neighbors(idx) {
                if j != to && blocked(j) {
                    continue;
                }
                let ng = g[idx] + len;
                if ng < g[j] {
                    g[j] = ng;
                    parent[j] = idx;
                    heap.push(Entry {
                        key: ng + self.octile(j, to),
                        idx: j,
                    });
                }
            }
        }
        None
    }

    /// Traversable cell whose center is nearest to `p` (lowest index on ties).
    pub fn nearest_nav(&self, p: Point) -> Option<usize> {
        self.nearest_where(p, f64::INFINITY, |_| true)
    }

    /// Nearest traversable cell accepted by `accept` within `max_dist` of `p`.
    pub fn nearest_where(
        &self,
        p: Point,
        max_dist: f64,
        accept: impl Fn(usize) -> bool,
    ) -> Option<usize> {
        let g = &self.grid;
        let res = g.resolution();
        let o = g.origin();
        let w = g.width() as i64;
        let h = g.height() as i64;
        let cx = (((p.x - o.x) / res).floor() as i64).clamp(0, w - 1);
        let cy = (((p.y - o.y) / res).floor() as i64).clamp(0, h - 1);
        let mut best: Option<(f64, usize)> = None;
        let max_ring = w.max(h);
        for k in 0..=max_ring {
            // every center in ring k is at least (k - 1/2)·res away in Chebyshev distance
            let ring_min = (k as f64 - 0.5).max(0.0) * res;
            if let Some((bd, _)) = best {
                if ring_min > bd {
                    break;
                }
            }
            if ring_min > max_dist {
                break;
            }
            let mut visit = |x: i64, y: i64| {
                if x < 0 || y < 0 || x >= w || y >= h {
                    return;
                }
                let idx = g.index(x as usize, y as usize);
                if !self.ok[idx] || !accept(idx) {
                    return;
                }
                let d = g.center(idx).distance(p);
                if d > max_dist {
                    return;
                }
                match best {
                    Some((bd, bi)) if d > bd || (d == bd && idx > bi) => {}
                    _ => best = Some((d, idx)),
                }
            };
            if k == 0 {
                visit(cx, cy);
                continue;
            }
            for x in (cx - k)..=(cx + k) {
                visit(x, cy - k);
                visit(x, cy + k);
            }
            for y in (cy - k + 1)..(cy + k) {
                visit(cx - k, y);
                visit(cx + k, y);
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Route for a disc robot from `from` to `to`: straight when the segment is
/// clear, otherwise an A* path over `nav` shortened by line-of-sight
/// pruning. The last point is `to`, or the nearest traversable center when
/// `to` itself is not reachable. `None` when no path exists.
pub fn route(
    scenario: &Scenario,
    nav: &NavGrid,
    from: Point,
    to: Point,
    blocked: impl Fn(usize) -> bool,
    avoid: &[(Point, f64)],
) -> Option<Vec<Point>> {
    let c = nav.clearance();
    let seg_ok = |a: Point, b: Point| {
        scenario.segment_clear(a, b, c)
            && avoid
                .iter()
                .all(|&(q, r)| crate::world::geometry::point_segment_distance(q, a, b) >= r)
    };
    let to_ok = !scenario.disc_blocked(to, c) && avoid.iter().all(|&(q, r)| q.distance(to) >= r);
    if to_ok && seg_ok(from, to) {
        return Some(vec![to]);
    }
    let goal_cell = nav.nearest_where(to, f64::INFINITY, |i| !blocked(i))?;
    let goal = if to_ok && seg_ok(nav.center(goal_cell), to) {
        to
    } else {
        nav.center(goal_cell)
    };
    let start_cell = nav.nearest_where(from, f64::INFINITY, |i| !blocked(i))?;
    let cells = nav.astar(start_cell, goal_cell, &blocked)?;
    let mut pts: Vec<Point> = cells.iter().map(|&i| nav.center(i)).collect();
    if *pts.last()? != goal {
        pts.push(goal);
    }
    // line-of-sight pruning with a bounded lookahead
    let mut out = Vec::with_capacity(pts.len());
    let mut anchor = from;
    let mut i = 0;
    while i < pts.len() {
        let mut j = i;
        let end = (i + 24).min(pts.len() - 1);
        for k in (i..=end).rev() {
            if seg_ok(anchor, pts[k]) {
                j = k;
                break;
            }
        }
        out.push(pts[j]);
        anchor = pts[j];
        i = j + 1;
    }
    Some(out)
}
