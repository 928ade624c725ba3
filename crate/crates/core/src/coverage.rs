//! Synchronized covered-cell set shared by all workers.
//!
//! The covered area is the union of every worker's disc sweeps, tracked on
//! the rasterized grid. Each cell is credited to the first worker that swept
//! it, so per-worker counts partition the union.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::world::{CellGrid, Point};

const UNCREDITED: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct CoverageGrid {
    base: Arc<CellGrid>,
    covered: Vec<bool>,
    credit: Vec<u32>,
    per_worker: Vec<usize>,
    covered_count: usize,
}

impl CoverageGrid {
    pub fn new(base: Arc<CellGrid>, num_workers: usize) -> Self {
        let n = base.len();
        Self {
            base,
            covered: vec![false; n],
            credit: vec![UNCREDITED; n],
            per_worker: vec![0; num_workers],
            covered_count: 0,
        }
    }

    pub fn grid(&self) -> &CellGrid {
        &self.base
    }

    pub fn grid_arc(&self) -> &Arc<CellGrid> {
        &self.base
    }

    /// Covers every free cell whose center lies in the closed disc and returns
    /// how many of them were not covered before.
    pub fn sweep(&mut self, worker: usize, center: Point, radius: f64) -> usize {
        let Some(((x0, x1), (y0, y1))) = self.base.coord_range(center, radius) else {
            return 0;
        };
        let r_sq = radius * radius;
        let mut fresh = 0;
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                let idx = self.base.index(ix, iy);
                if self.covered[idx] || !self.base.is_free(idx) {
                    continue;
                }
                if self.base.center(idx).distance_sq(center) <= r_sq {
                    self.covered[idx] = true;
                    self.credit[idx] = worker as u32;
                    fresh += 1;
                }
            }
        }
        self.per_worker[worker] += fresh;
        self.covered_count += fresh;
        fresh
    }

    pub fn is_covered(&self, idx: usize) -> bool {
        self.covered[idx]
    }

    /// Worker credited with covering `idx`, if covered.
    pub fn credit(&self, idx: usize) -> Option<usize> {
        let c = self.credit[idx];
        (c != UNCREDITED).then_some(c as usize)
    }

    pub fn covered_count(&self) -> usize {
        self.covered_count
    }

    pub fn per_worker_counts(&self) -> &[usize] {
        &self.per_worker
    }

    pub fn free_count(&self) -> usize {
        self.base.free_count()
    }

    pub fn is_finished(&self) -> bool {
        self.covered_count == self.base.free_count()
    }

    pub fn coverage_ratio(&self) -> f64 {
        let free = self.base.free_count();
        if free == 0 {
            return 1.0;
        }
        self.covered_count as f64 / free as f64
    }

    pub fn uncovered(&self) -> impl Iterator<Item = usize> + '_ {
        self.base.free_indices().filter(|&i| !self.covered[i])
    }

    /// Run-length encoding of every grid row (bottom row first).
    pub fn snapshot(&self) -> CoverageSnapshot {
        let g = &self.base;
        let rows = (0..g.height())
            .map(|iy| {
                let mut runs: Vec<(i64, usize)> = Vec::new();
                for ix in 0..g.width() {
                    let idx = g.index(ix, iy);
                    let code = if !g.is_free(idx) {
                        CELL_BLOCKED
                    } else {
                        self.credit(idx).map_or(CELL_UNCOVERED, |w| w as i64)
                    };
                    match runs.last_mut() {
                        Some((c, n)) if *c == code => *n += 1,
                        _ => runs.push((code, 1)),
                    }
                }
                runs
            })
            .collect();
        CoverageSnapshot {
            width: g.width(),
            height: g.height(),
            rows,
        }
    }
}

/// Status code of a blocked cell in a [`CoverageSnapshot`].
pub const CELL_BLOCKED: i64 = -2;
/// Status code of a free, not yet covered cell in a [`CoverageSnapshot`].
pub const CELL_UNCOVERED: i64 = -1;

/// Row-wise run-length encoded cell status. Each run is `(code, length)` where
/// code is [`CELL_BLOCKED`], [`CELL_UNCOVERED`] or the crediting worker index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageSnapshot {
    pub width: usize,
    pub height: usize,
    pub rows: Vec<Vec<(i64, usize)>>,
}

impl CoverageSnapshot {
    /// Expands the runs into one code per cell, row-major from the bottom row.
    pub fn decode(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.width * self.height);
        for row in &self.rows {
            for &(code, n) in row {
                out.extend(std::iter::repeat_n(code, n));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn open_grid(w: usize, h: usize) -> Arc<CellGrid> {
        Arc::new(CellGrid::from_fn(w, h, Point::ORIGIN, 1.0, |_, _| true))
    }

    fn brute_force_disc(grid: &CellGrid, c: Point, r: f64) -> Vec<usize> {
        (0..grid.len())
            .filter(|&i| {
                let p = grid.center(i);
                grid.is_free(i) && ((p.x - c.x).powi(2) + (p.y - c.y).powi(2)).sqrt() <= r
            })
            .collect()
    }

    #[test]
    fn huge_radius_covers_everything() {
        let mut cov = CoverageGrid::new(open_grid(6, 4), 1);
        assert_eq!(cov.sweep(0, Point::new(3.0, 2.0), 100.0), 24);
        assert!(cov.is_finished());
        assert_eq!(cov.coverage_ratio(), 1.0);
    }

    #[test]
    fn repeated_sweep_is_idempotent() {
        let mut cov = CoverageGrid::new(open_grid(10, 10), 2);
        let first = cov.sweep(1, Point::new(4.0, 4.0), 2.5);
        assert!(first > 0);
        assert_eq!(cov.sweep(1, Point::new(4.0, 4.0), 2.5), 0);
        assert_eq!(cov.per_worker_counts(), &[0, first]);
    }

    #[test]
    fn disc_sweep_matches_distance_oracle() {
        let grid = open_grid(10, 10);
        let mut cov = CoverageGrid::new(grid.clone(), 1);
        let expected = brute_force_disc(&grid, Point::new(5.0, 5.0), 2.0);
        // centers at half-integers: offsets ±0.5, ±1.5 in both axes
        assert_eq!(expected.len(), 12);
        assert_eq!(cov.sweep(0, Point::new(5.0, 5.0), 2.0), 12);
    }

    #[test]
    fn finish_and_ratio_examples() {
        let grid = Arc::new(CellGrid::from_fn(8, 6, Point::ORIGIN, 1.0, |_, _| true));
        let mut cov = CoverageGrid::new(grid.clone(), 1);
        assert!(!cov.is_finished());
        assert_eq!(cov.coverage_ratio(), 0.0);
        for idx in 0..12 {
            cov.sweep(0, grid.center(idx), 0.1);
        }
        assert_eq!(cov.coverage_ratio(), 0.25);
        for idx in 12..47 {
            cov.sweep(0, grid.center(idx), 0.1);
        }
        assert!(!cov.is_finished(), "one cell still missing");
        cov.sweep(0, grid.center(47), 0.1);
        assert!(cov.is_finished());
    }

    #[test]
    fn lowest_worker_index_wins_shared_cells() {
        let mut cov = CoverageGrid::new(open_grid(10, 10), 2);
        // same-step sweeps run in ascending worker order
        let a = cov.sweep(0, Point::new(4.0, 5.0), 2.0);
        let b = cov.sweep(1, Point::new(6.0, 5.0), 2.0);
        let shared = grid_cell_at(&cov, Point::new(5.5, 5.5));
        assert_eq!(cov.credit(shared), Some(0));
        assert_eq!(a + b, cov.covered_count());
    }

    fn grid_cell_at(cov: &CoverageGrid, p: Point) -> usize {
        cov.grid().cell_at(p).unwrap()
    }

    #[test]
    fn snapshot_round_trips_codes() {
        let grid = Arc::new(CellGrid::from_fn(5, 3, Point::ORIGIN, 1.0, |x, y| {
            !(x == 2 && y == 1)
        }));
        let mut cov = CoverageGrid::new(grid.clone(), 2);
        cov.sweep(1, Point::new(0.5, 0.5), 0.6);
        let snap = cov.snapshot();
        let codes = snap.decode();
        assert_eq!(codes.len(), 15);
        assert_eq!(codes[grid.index(2, 1)], CELL_BLOCKED);
        assert_eq!(codes[grid.index(0, 0)], 1);
        assert_eq!(codes[grid.index(4, 2)], CELL_UNCOVERED);
    }

    proptest! {
        #[test]
        fn sweeps_match_oracle_and_conserve_credit(
            w in 1usize..50, h in 1usize..50,
            sweeps in proptest::collection::vec((0usize..3, 0.0f64..50.0, 0.0f64..50.0, 0.1f64..6.0), 1..20),
            holes in proptest::collection::vec((0usize..50, 0usize..50), 0..30),
        ) {
            let grid = Arc::new(CellGrid::from_fn(w, h, Point::ORIGIN, 1.0, |x, y| !holes.contains(&(x, y))));
            prop_assume!(grid.free_count() > 0);
            let mut cov = CoverageGrid::new(grid.clone(), 3);
            let mut oracle = vec![false; grid.len()];
            let mut prev_ratio = 0.0;
            for &(wk, x, y, r) in &sweeps {
                let c = Point::new(x, y);
                let expect_new = brute_force_disc(&grid, c, r).into_iter().filter(|&i| !oracle[i]).collect::<Vec<_>>();
                for &i in &expect_new { oracle[i] = true; }
                prop_assert_eq!(cov.sweep(wk, c, r), expect_new.len());
                prop_assert_eq!(cov.per_worker_counts().iter().sum::<usize>(), cov.covered_count());
                prop_assert!(cov.coverage_ratio() >= prev_ratio);
                prev_ratio = cov.coverage_ratio();
            }
            for (i, &o) in oracle.iter().enumerate() {
                prop_assert_eq!(cov.is_covered(i), o);
                prop_assert!(!cov.is_covered(i) || grid.is_free(i));
            }
        }

        #[test]
        fn union_is_order_insensitive(
            sweeps in proptest::collection::vec((0usize..3, 0.0f64..20.0, 0.0f64..20.0, 0.1f64..4.0), 1..12),
        ) {
            let grid = open_grid(20, 20);
            let mut fwd = CoverageGrid::new(grid.clone(), 3);
            let mut rev = CoverageGrid::new(grid.clone(), 3);
            for &(wk, x, y, r) in &sweeps { fwd.sweep(wk, Point::new(x, y), r); }
            for &(wk, x, y, r) in sweeps.iter().rev() { rev.sweep(wk, Point::new(x, y), r); }
            for i in 0..grid.len() {
                prop_assert_eq!(fwd.is_covered(i), rev.is_covered(i));
            }
        }
    }
}
