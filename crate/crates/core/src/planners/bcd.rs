//! Boustrophedon cellular decomposition and serpentine lane generation.

use serde::{Deserialize, Serialize};

use crate::world::{CellGrid, Point};

/// An x-monotone region: one contiguous free interval per column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BcdCell {
    pub id: usize,
    pub col_start: usize,
    /// Inclusive `(y_lo, y_hi)` interval for each column from `col_start`.
    pub intervals: Vec<(usize, usize)>,
    pub neighbors: Vec<usize>,
}

impl BcdCell {
    pub fn col_end(&self) -> usize {
        self.col_start + self.intervals.len() - 1
    }

    pub fn interval(&self, col: usize) -> Option<(usize, usize)> {
        col.checked_sub(self.col_start)
            .and_then(|k| self.intervals.get(k))
            .copied()
    }

    pub fn cell_count(&self) -> usize {
        self.intervals.iter().map(|&(a, b)| b - a + 1).sum()
    }
}

/// Maximal runs of free cells in column `x`, bottom to top.
pub fn column_intervals(grid: &CellGrid, x: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for y in 0..grid.height() {
        match (grid.is_free_at(x, y), start) {
            (true, None) => start = Some(y),
            (false, Some(s)) => {
                out.push((s, y - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, grid.height() - 1));
    }
    out
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Sweeps columns left to right. A column interval continues the cell of
/// the previous column's interval iff the two overlap only each other;
/// every split, merge, birth or death opens new cells.
pub fn bcd_decompose(grid: &CellGrid) -> Vec<BcdCell> {
    let mut cells: Vec<BcdCell> = Vec::new();
    let mut prev: Vec<((usize, usize), usize)> = Vec::new();
    for x in 0..grid.width() {
        let cur = column_intervals(grid, x);
        let mut cur_ids = Vec::with_capacity(cur.len());
        for &iv in &cur {
            let touching: Vec<usize> = (0..prev.len())
                .filter(|&k| overlaps(prev[k].0, iv))
                .collect();
            let continues = touching.len() == 1 && {
                let p = prev[touching[0]].0;
                cur.iter().filter(|&&c| overlaps(p, c)).count() == 1
            };
            let id = if continues {
                let id = prev[touching[0]].1;
                cells[id].intervals.push(iv);
                id
            } else {
                let id = cells.len();
                cells.push(BcdCell {
                    id,
                    col_start: x,
                    intervals: vec![iv],
                    neighbors: vec![],
                });
                for &k in &touching {
                    let other = prev[k].1;
                    cells[id].neighbors.push(other);
                    cells[other].neighbors.push(id);
                }
                id
            };
            cur_ids.push(id);
        }
        prev = cur.into_iter().zip(cur_ids).collect();
    }
    for c in &mut cells {
        c.neighbors.sort_unstable();
        c.neighbors.dedup();
    }
    cells
}

/// Odd lane width in cells such that every cell within half a lane of the
/// lane's center column lies inside the cover disc.
pub fn lane_width_cells(cover_radius: f64, resolution: f64) -> usize {
    let w = (2.0 * cover_radius / resolution).floor() as usize;
    let w = w.saturating_sub(1).max(1);
    if w % 2 == 0 {
        w - 1
    } else {
        w
    }
}

/// One vertical pass: from `(col, y_lo)` to `(col, y_hi)` in cell centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lane {
    pub start: Point,
    pub end: Point,
}

impl Lane {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn reversed(self) -> Lane {
        Lane {
            start: self.end,
            end: self.start,
        }
    }
}

/// Vertical lanes spaced `lane_width` columns apart over one cell. Each lane
/// spans the union of the cell's intervals within its strip.
pub fn cell_lanes(grid: &CellGrid, cell: &BcdCell, lane_width: usize) -> Vec<Lane> {
    let width = cell.intervals.len();
    let w = lane_width.max(1);
    let half = (w - 1) / 2;
    let n = width.div_ceil(w);
    let mut lanes = Vec::with_capacity(n);
    for k in 0..n {
        let strip_lo = k * w;
        let strip_hi = ((k + 1) * w).min(width) - 1;
        let center = if width <= w {
            (width - 1) / 2
        } else {
            (strip_lo + half).min(strip_hi)
        };
        let (lo, hi) = cell.intervals[strip_lo..=strip_hi]
            .iter()
            .fold((usize::MAX, 0), |(lo, hi), &(a, b)| (lo.min(a), hi.max(b)));
        let x = cell.col_start + center;
        lanes.push(Lane {
            start: grid.center_of(x, lo),
            end: grid.center_of(x, hi),
        });
    }
    lanes
}

/// Serpentine waypoint list over one cell, alternating lane directions.
pub fn boustrophedon_path(grid: &CellGrid, cell: &BcdCell, lane_width: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for (k, lane) in cell_lanes(grid, cell, lane_width).into_iter().enumerate() {
        let lane = if k % 2 == 1 { lane.reversed() } else { lane };
        out.push(lane.start);
        if lane.end != lane.start {
            out.push(lane.end);
        }
    }
    out
}

/// Longest-processing-time assignment: jobs sorted by decreasing length
/// (index on ties) go to the currently least loaded worker (lowest index on
/// ties). Returns job indices per worker.
pub fn allocate_lanes(lengths: &[f64], m: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&a, &b| lengths[b].total_cmp(&lengths[a]).then(a.cmp(&b)));
    let mut load = vec![0.0f64; m];
    let mut out = vec![Vec::new(); m];
    for j in order {
        let w = (0..m)
            .min_by(|&a, &b| load[a].total_cmp(&load[b]).then(a.cmp(&b)))
            .unwrap_or(0);
        load[w] += lengths[j];
        out[w].push(j);
    }
    out
}
