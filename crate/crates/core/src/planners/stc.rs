//! Spanning-tree coverage over a coarse mega-cell grid.
//!
//! Fine grid cells are grouped into square sub-cells of roughly the cover
//! radius, and 2×2 sub-cells form a mega-cell. A spanning tree over the
//! mega-cells is circumnavigated, which visits every sub-cell of every tree
//! mega-cell exactly once and closes into a cycle.

use crate::error::{Error, Result};
use crate::world::{CellGrid, Point};

/// Sub-cell side in fine cells for a given cover radius.
pub fn sub_cell_size(cover_radius: f64, resolution: f64) -> usize {
    ((cover_radius / resolution).round() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StcLayout {
    /// Sub-cell side in fine cells.
    pub s: usize,
    pub mega_w: usize,
    pub mega_h: usize,
    /// A sub-cell is free iff any fine cell inside it is free.
    pub sub_free: Vec<bool>,
    /// A mega-cell takes part iff any of its sub-cells is free.
    pub mega_on: Vec<bool>,
    origin: Point,
    resolution: f64,
}

impl StcLayout {
    pub fn new(grid: &CellGrid, s: usize) -> Self {
        let mega_w = grid.width().div_ceil(2 * s);
        let mega_h = grid.height().div_ceil(2 * s);
        let sub_w = 2 * mega_w;
        let sub_h = 2 * mega_h;
        let mut sub_free = vec![false; sub_w * sub_h];
        for idx in grid.free_indices() {
            let (x, y) = grid.coords(idx);
            sub_free[(y / s) * sub_w + x / s] = true;
        }
        let mut mega_on = vec![false; mega_w * mega_h];
        for (m, on) in mega_on.iter_mut().enumerate() {
            *on = Self::quad(m, mega_w).iter().any(|&q| sub_free[q]);
        }
        Self {
            s,
            mega_w,
            mega_h,
            sub_free,
            mega_on,
            origin: grid.origin(),
            resolution: grid.resolution(),
        }
    }

    pub fn sub_w(&self) -> usize {
        2 * self.mega_w
    }

    /// Sub-cells of mega-cell `m` as `[BL, BR, TR, TL]`.
    fn quad(m: usize, mega_w: usize) -> [usize; 4] {
        let sub_w = 2 * mega_w;
        let (mx, my) = (m % mega_w, m / mega_w);
        let bl = (2 * my) * sub_w + 2 * mx;
        [bl, bl + 1, bl + sub_w + 1, bl + sub_w]
    }

    /// World coordinates of the center of sub-cell `q`.
    pub fn sub_center(&self, q: usize) -> Point {
        let sub_w = self.sub_w();
        let (x, y) = (q % sub_w, q / sub_w);
        let side = self.s as f64 * self.resolution;
        Point::new(
            self.origin.x + (x as f64 + 0.5) * side,
            self.origin.y + (y as f64 + 0.5) * side,
        )
    }

    fn mega_neighbors(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        let (mx, my) = (m % self.mega_w, m / self.mega_w);
        [
            (mx + 1 < self.mega_w).then(|| m + 1),
            (my + 1 < self.mega_h).then(|| m + self.mega_w),
        ]
        .into_iter()
        .flatten()
        .filter(|&n| self.mega_on[n])
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Kruskal spanning forest over active mega-cells with unit weights; edges
/// are considered in increasing `(lower, higher)` index order.
pub fn spanning_forest(layout: &StcLayout) -> Vec<(usize, usize)> {
    let n = layout.mega_on.len();
    let mut edges = Vec::new();
    for m in 0..n {
        if layout.mega_on[m] {
            edges.extend(layout.mega_neighbors(m).map(|k| (m, k)));
        }
    }
    edges.sort_unstable();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut tree = Vec::new();
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            tree.push((a, b));
        }
    }
    tree
}

/// Connected groups of active mega-cells under the forest, each sorted,
/// ordered by their smallest member.
fn components(layout: &StcLayout, tree: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let n = layout.mega_on.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b) in tree {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for m in 0..n {
        if !layout.mega_on[m] {
            continue;
        }
        let r = find(&mut parent, m);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(m);
    }
    groups
}

/// Sub-cell cycle around the tree spanning `megas`, starting at the
/// bottom-left sub-cell of the first mega-cell.
fn circumnavigate(layout: &StcLayout, megas: &[usize], tree: &[(usize, usize)]) -> Vec<usize> {
    use std::collections::HashMap;
    let mw = layout.mega_w;
    let mut links: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut link = |a: usize, b: usize, add: bool| {
        if add {
            links.entry(a).or_default().push(b);
            links.entry(b).or_default().push(a);
        } else {
            links.entry(a).or_default().retain(|&x| x != b);
            links.entry(b).or_default().retain(|&x| x != a);
        }
    };
    for &m in megas {
        let [bl, br, tr, tl] = StcLayout::quad(m, mw);
        link(bl, br, true);
        link(br, tr, true);
        link(tr, tl, true);
        link(tl, bl, true);
    }
    for &(a, b) in tree {
        let [_, abr, atr, atl] = StcLayout::quad(a, mw);
        let [bbl, bbr, _, btl] = StcLayout::quad(b, mw);
        if b == a + 1 {
            link(abr, atr, false);
            link(bbl, btl, false);
            link(abr, bbl, true);
            link(atr, btl, true);
        } else {
            link(atr, atl, false);
            link(bbl, bbr, false);
            link(atl, bbl, true);
            link(atr, bbr, true);
        }
    }
    let start = StcLayout::quad(megas[0], mw)[0];
    let mut cycle = vec![start];
    let mut prev = usize::MAX;
    let mut cur = start;
    loop {
        let next = links[&cur].iter().copied().find(|&x| x != prev);
        let Some(next) = next else { break };
        if next == start {
            break;
        }
        cycle.push(next);
        prev = cur;
        cur = next;
    }
    cycle
}

/// Full sub-cell cycles, one per connected mega-cell component.
pub fn stc_cycles(layout: &StcLayout) -> Vec<Vec<usize>> {
    let tree = spanning_forest(layout);
    components(layout, &tree)
        .into_iter()
        .map(|megas| {
            let set: std::collections::HashSet<usize> = megas.iter().copied().collect();
            let sub_tree: Vec<(usize, usize)> = tree
                .iter()
                .copied()
                .filter(|(a, _)| set.contains(a))
                .collect();
            circumnavigate(layout, &megas, &sub_tree)
        })
        .collect()
}

fn rotate_to_nearest(layout: &StcLayout, cycle: &[usize], start: Point) -> Vec<Point> {
    let free: Vec<usize> = cycle
        .iter()
        .copied()
        .filter(|&q| layout.sub_free[q])
        .collect();
    let first = (0..free.len())
        .min_by(|&a, &b| {
            let da = layout.sub_center(free[a]).distance(start);
            let db = layout.sub_center(free[b]).distance(start);
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .unwrap_or(0);
    free[first..]
        .iter()
        .chain(&free[..first])
        .map(|&q| layout.sub_center(q))
        .collect()
}

/// Coverage cycle over the free grid as sub-cell centers, starting at the
/// free sub-cell nearest `start`. Sub-cells without free fine cells are
/// skipped. Fails when the mega-cells are not 4-connected.
pub fn stc_plan(grid: &CellGrid, cover_radius: f64, start: Point) -> Result<Vec<Point>> {
    let layout = StcLayout::new(grid, sub_cell_size(cover_radius, grid.resolution()));
    let cycles = stc_cycles(&layout);
    match cycles.len() {
        0 => Err(Error::Disconnected("no free cells to cover".into())),
        1 => Ok(rotate_to_nearest(&layout, &cycles[0], start)),
        k => Err(Error::Disconnected(format!(
            "{k} separate mega-cell components"
        ))),
    }
}

/// Like [`stc_plan`] but plans each component separately and chains them,
/// always continuing with the component nearest the previous end point.
pub fn stc_plan_components(grid: &CellGrid, cover_radius: f64, start: Point) -> Vec<Point> {
    let layout = StcLayout::new(grid, sub_cell_size(cover_radius, grid.resolution()));
    let mut cycles = stc_cycles(&layout);
    let mut out = Vec::new();
    let mut here = start;
    while !cycles.is_empty() {
        let dist = |c: &Vec<usize>| {
            c.iter()
                .filter(|&&q| layout.sub_free[q])
                .map(|&q| layout.sub_center(q).distance(here))
                .fold(f64::INFINITY, f64::min)
        };
        let k = (0..cycles.len())
            .min_by(|&a, &b| {
                dist(&cycles[a])
                    .total_cmp(&dist(&cycles[b]))
                    .then(a.cmp(&b))
            })
            .unwrap_or(0);
        let c = cycles.remove(k);
        let pts = rotate_to_nearest(&layout, &c, here);
        if let Some(&last) = pts.last() {
            here = last;
        }
        out.extend(pts);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(w: usize, h: usize) -> CellGrid {
        CellGrid::from_fn(w, h, Point::ORIGIN, 1.0, |_, _| true)
    }

    fn visit_counts(layout: &StcLayout, cycle: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; layout.sub_free.len()];
        for &q in cycle {
            counts[q] += 1;
        }
        counts
    }

    fn assert_adjacent_steps(layout: &StcLayout, cycle: &[usize]) {
        let sw = layout.sub_w();
        for k in 0..cycle.len() {
            let (a, b) = (cycle[k], cycle[(k + 1) % cycle.len()]);
            let (ax, ay) = ((a % sw) as i64, (a / sw) as i64);
            let (bx, by) = ((b % sw) as i64, (b / sw) as i64);
            assert_eq!((ax - bx).abs() + (ay - by).abs(), 1, "{a} -> {b}");
        }
    }

    #[test]
    fn single_mega_cell_is_a_four_loop() {
        let layout = StcLayout::new(&open(4, 4), 2);
        let cycles = stc_cycles(&layout);
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].len(), 4);
        assert_adjacent_steps(&layout, &cycles[0]);
    }

    #[test]
    fn two_by_two_megas_visit_sixteen_once() {
        let layout = StcLayout::new(&open(8, 8), 2);
        let cycle = &stc_cycles(&layout)[0];
        assert_eq!(cycle.len(), 16);
        assert!(visit_counts(&layout, cycle).iter().all(|&c| c == 1));
        assert_adjacent_steps(&layout, cycle);
    }

    #[test]
    fn l_shape_covers_twelve_sub_cells() {
        // megas of 2x2 fine cells: (0,0), (1,0), (0,1)
        let g = CellGrid::from_fn(4, 4, Point::ORIGIN, 1.0, |x, y| !(x >= 2 && y >= 2));
        let layout = StcLayout::new(&g, 1);
        let cycle = &stc_cycles(&layout)[0];
        assert_eq!(cycle.len(), 12);
        let counts = visit_counts(&layout, cycle);
        assert_eq!(counts.iter().filter(|&&c| c == 1).count(), 12);
        assert_adjacent_steps(&layout, cycle);
    }

    #[test]
    fn disconnected_area_is_reported() {
        let g = CellGrid::from_fn(12, 4, Point::ORIGIN, 1.0, |x, _| !(4..8).contains(&x));
        assert!(matches!(
            stc_plan(&g, 1.0, Point::ORIGIN),
            Err(Error::Disconnected(_))
        ));
        let pts = stc_plan_components(&g, 1.0, Point::ORIGIN);
        assert_eq!(pts.len(), 32);
    }

    #[test]
    fn plan_starts_near_start() {
        let g = open(16, 16);
        let pts = stc_plan(&g, 2.0, Point::new(15.0, 15.0)).unwrap();
        assert_eq!(pts.len(), 64);
        assert_eq!(pts[0], Point::new(15.0, 15.0));
    }
}
