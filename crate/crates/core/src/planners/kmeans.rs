//! Lloyd k-means over free cell centers and a depth-first tour of the
//! resulting regions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::world::{CellGrid, Point};

const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    /// Region of every grid cell; `None` for cells outside the partitioned set.
    pub labels: Vec<Option<usize>>,
    pub centroids: Vec<Point>,
    /// Member cells of each region, ascending.
    pub members: Vec<Vec<usize>>,
}

impl RegionPartition {
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
}

fn nearest(centroids: &[Point], p: Point) -> usize {
    // strict comparison keeps the lowest index on ties
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = c.distance_sq(p);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Independent seeded restarts; the cheapest result wins.
const RESTARTS: usize = 10;

/// k-means++ seeding: each further center is drawn with probability
/// proportional to the squared distance to the nearest chosen center.
fn seed_centers(pts: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut centroids = vec![pts[rng.random_range(0..pts.len())]];
    let mut d2: Vec<f64> = pts.iter().map(|p| p.distance_sq(centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut x = rng.random_range(0.0..total);
            d2.iter()
                .position(|&d| {
                    x -= d;
                    x < 0.0
                })
                .unwrap_or(pts.len() - 1)
        } else {
            rng.random_range(0..pts.len())
        };
        let c = pts[pick];
        centroids.push(c);
        for (d, p) in d2.iter_mut().zip(pts) {
            *d = d.min(p.distance_sq(c));
        }
    }
    centroids
}

/// Lloyd iterations from `centroids`; returns assignment and cost.
fn lloyd(pts: &[Point], centroids: &mut [Point]) -> (Vec<usize>, f64) {
    let k = centroids.len();
    let mut assign = vec![usize::MAX; pts.len()];
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        for (i, &p) in pts.iter().enumerate() {
            let j = nearest(centroids, p);
            if assign[i] != j {
                assign[i] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (i, &p) in pts.iter().enumerate() {
            let s = &mut sums[assign[i]];
            s.0 += p.x;
            s.1 += p.y;
            s.2 += 1;
        }
        for (c, &(sx, sy, n)) in centroids.iter_mut().zip(&sums) {
            if n > 0 {
                *c = Point::new(sx / n as f64, sy / n as f64);
            }
        }
    }
    let cost = pts
        .iter()
        .zip(&assign)
        .map(|(p, &j)| p.distance_sq(centroids[j]))
        .sum();
    (assign, cost)
}

/// Partitions `cells` into at most `k` regions with Lloyd's algorithm from
/// several seeded k-means++ starts, keeping the lowest within-region sum of
/// squares (earliest start on ties). Regions that empty out keep their
/// previous centroid.
pub fn kmeans_partition(grid: &CellGrid, cells: &[usize], k: usize, seed: u64) -> RegionPartition {
    let mut labels = vec![None; grid.len()];
    if cells.is_empty() || k == 0 {
        return RegionPartition {
            labels,
            centroids: vec![],
            members: vec![],
        };
    }
    let k = k.min(cells.len());
    let pts: Vec<Point> = cells.iter().map(|&c| grid.center(c)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>, Vec<Point>)> = None;
    for _ in 0..RESTARTS {
        let mut centroids = seed_centers(&pts, k, &mut rng);
        let (assign, cost) = lloyd(&pts, &mut centroids);
        if best.as_ref().is_none_or(|b| cost < b.0) {
            best = Some((cost, assign, centroids));
        }
    }
    let (_, assign, centroids) = best.expect("at least one restart");
    let mut members = vec![Vec::new(); k];
    for (i, &cell) in cells.iter().enumerate() {
        labels[cell] = Some(assign[i]);
        members[assign[i]].push(cell);
    }
    for m in &mut members {
        m.sort_unstable();
    }
    RegionPartition {
        labels,
        centroids,
        members,
    }
}

/// Regions sharing a 4-neighbour cell boundary, ascending per region.
pub fn region_adjacency(grid: &CellGrid, part: &RegionPartition) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); part.len()];
    for (cell, label) in part.labels.iter().enumerate() {
        let Some(a) = *label else { continue };
        for n in grid.neighbors4(cell) {
            if let Some(b) = part.labels[n] {
                if a != b {
                    adj[a].push(b);
                }
            }
        }
    }
    for v in &mut adj {
        v.sort_unstable();
        v.dedup();
    }
    adj
}

fn dfs_from(
    part: &RegionPartition,
    adj: &[Vec<usize>],
    start: usize,
    seen: &mut [bool],
    order: &mut Vec<usize>,
) {
    let mut stack = vec![start];
    while let Some(r) = stack.pop() {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        order.push(r);
        let mut next: Vec<usize> = adj[r].iter().copied().filter(|&n| !seen[n]).collect();
        // nearest neighbour explored first, so it goes on the stack last
        next.sort_by(|&a, &b| {
            let da = part.centroids[a].distance(part.centroids[r]);
            let db = part.centroids[b].distance(part.centroids[r]);
            db.total_cmp(&da).then(b.cmp(&a))
        });
        stack.extend(next);
    }
}

/// Depth-first preorder over non-empty regions from `start`. Fails when some
/// non-empty region is unreachable through shared boundaries.
pub fn dfs_region_tour(
    part: &RegionPartition,
    adj: &[Vec<usize>],
    start: usize,
) -> Result<Vec<usize>> {
    let mut seen: Vec<bool> = part.members.iter().map(Vec::is_empty).collect();
    let mut order = Vec::new();
    if start < part.len() {
        dfs_from(part, adj, start, &mut seen, &mut order);
    }
    let missing = seen.iter().filter(|&&s| !s).count();
    if missing > 0 {
        return Err(Error::Disconnected(format!(
            "{missing} regions unreachable"
        )));
    }
    Ok(order)
}

/// Like [`dfs_region_tour`] but restarts at the unvisited region whose
/// centroid is nearest the last visited one whenever the search runs dry.
pub fn region_tour(part: &RegionPartition, adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut seen: Vec<bool> = part.members.iter().map(Vec::is_empty).collect();
    let mut order = Vec::new();
    let mut next = (start < part.len()).then_some(start);
    while let Some(s) = next {
        dfs_from(part, adj, s, &mut seen, &mut order);
        let here = order
            .last()
            .map(|&r| part.centroids[r])
            .unwrap_or(part.centroids[s]);
        next = (0..part.len()).filter(|&r| !seen[r]).min_by(|&a, &b| {
            part.centroids[a]
                .distance(here)
                .total_cmp(&part.centroids[b].distance(here))
                .then(a.cmp(&b))
        });
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: usize, h: usize, free: impl Fn(usize, usize) -> bool) -> CellGrid {
        CellGrid::from_fn(w, h, Point::ORIGIN, 1.0, free)
    }

    #[test]
    fn two_blobs_split_cleanly() {
        let g = grid(20, 4, |x, _| !(8..12).contains(&x));
        let cells: Vec<usize> = g.free_indices().collect();
        let part = kmeans_partition(&g, &cells, 2, 7);
        let left = part.labels[g.index(0, 0)].unwrap();
        for &c in &cells {
            let (x, _) = g.coords(c);
            assert_eq!(part.labels[c] == Some(left), x < 8);
        }
        assert_eq!(
            part.members.iter().map(Vec::len).sum::<usize>(),
            cells.len()
        );
    }

    #[test]
    fn assignment_is_nearest_centroid_at_convergence() {
        let g = grid(15, 15, |x, y| !(x > 5 && x < 9 && y > 3));
        let cells: Vec<usize> = g.free_indices().collect();
        let part = kmeans_partition(&g, &cells, 5, 1);
        for &c in &cells {
            let p = g.center(c);
            let mine = part.centroids[part.labels[c].unwrap()].distance(p);
            let best = part
                .centroids
                .iter()
                .map(|q| q.distance(p))
                .fold(f64::INFINITY, f64::min);
            assert!(mine <= best + 1e-12);
        }
    }

    #[test]
    fn partition_is_seed_deterministic() {
        let g = grid(12, 9, |_, _| true);
        let cells: Vec<usize> = g.free_indices().collect();
        assert_eq!(
            kmeans_partition(&g, &cells, 4, 3),
            kmeans_partition(&g, &cells, 4, 3)
        );
    }

    #[test]
    fn k_is_capped_by_cell_count() {
        let g = grid(3, 1, |_, _| true);
        let cells: Vec<usize> = g.free_indices().collect();
        assert_eq!(kmeans_partition(&g, &cells, 10, 0).len(), 3);
    }

    #[test]
    fn tour_visits_every_region_once() {
        let g = grid(30, 30, |_, _| true);
        let cells: Vec<usize> = g.free_indices().collect();
        let part = kmeans_partition(&g, &cells, 9, 2);
        let adj = region_adjacency(&g, &part);
        let mut tour = dfs_region_tour(&part, &adj, 0).unwrap();
        assert_eq!(tour[0], 0);
        tour.sort_unstable();
        assert_eq!(tour, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn disconnected_regions_fail_strict_tour() {
        let g = grid(20, 4, |x, _| !(8..12).contains(&x));
        let cells: Vec<usize> = g.free_indices().collect();
        let part = kmeans_partition(&g, &cells, 2, 7);
        let adj = region_adjacency(&g, &part);
        assert!(matches!(
            dfs_region_tour(&part, &adj, 0),
            Err(Error::Disconnected(_))
        ));
        assert_eq!(region_tour(&part, &adj, 1).len(), 2);
    }
}
