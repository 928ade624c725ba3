//! Offline coverage plans for the three baselines.

use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bcd::{allocate_lanes, bcd_decompose, cell_lanes, lane_width_cells, Lane};
use super::kmeans::{kmeans_partition, region_adjacency, region_tour};
use super::nav::NavGrid;
use super::stc::stc_plan_components;
use crate::error::{Error, Result};
use crate::world::{rasterize, CellGrid, Point, Scenario};

/// Steps kept in hand on top of the estimated trip home.
pub const RESERVE_STEPS: f64 = 10.0;
/// Safety factor applied to the estimated trip home.
pub const RETURN_MARGIN: f64 = 1.25;
/// Steps charged for turning on a trip home.
const TURN_STEPS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanItem {
    /// Drive to this point (covering on the way).
    Visit(Point),
    /// The offline energy estimate expects a recharge here. Advisory: the
    /// executor decides returns online.
    Recharge,
    /// The worker has finished its share of station leg `k`.
    RegionDone(usize),
}

/// One parking stop of a mobile station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationLeg {
    pub region: usize,
    pub park: Point,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoveragePlan {
    pub workers: Vec<Vec<PlanItem>>,
    /// Parking schedule per station; empty for stations that do not follow
    /// a schedule.
    pub stations: Vec<Vec<StationLeg>>,
    /// Station each worker belongs to; `None` means the nearest one.
    pub home: Vec<Option<usize>>,
}

impl CoveragePlan {
    pub fn visits(&self, worker: usize) -> impl Iterator<Item = Point> + '_ {
        self.workers[worker].iter().filter_map(|it| match it {
            PlanItem::Visit(p) => Some(*p),
            _ => None,
        })
    }

    pub fn recharge_count(&self, worker: usize) -> usize {
        self.workers[worker]
            .iter()
            .filter(|it| matches!(it, PlanItem::Recharge))
            .count()
    }

    /// Path length of a worker's visits starting from `start`.
    pub fn path_length(&self, worker: usize, start: Point) -> f64 {
        let mut here = start;
        let mut len = 0.0;
        for p in self.visits(worker) {
            len += here.distance(p);
            here = p;
        }
        len
    }

    /// Plain-text export: a `worker i` or `station j` header, then one item
    /// per line (`x y`, `recharge`, `region k`, or `park region x y`).
    pub fn write_text(&self, out: &mut impl Write) -> io::Result<()> {
        for (i, items) in self.workers.iter().enumerate() {
            writeln!(out, "worker {i}")?;
            for it in items {
                match it {
                    PlanItem::Visit(p) => writeln!(out, "{} {}", p.x, p.y)?,
                    PlanItem::Recharge => writeln!(out, "recharge")?,
                    PlanItem::RegionDone(k) => writeln!(out, "region {k}")?,
                }
            }
        }
        for (j, legs) in self.stations.iter().enumerate() {
            writeln!(out, "station {j}")?;
            for leg in legs {
                writeln!(out, "park {} {} {}", leg.region, leg.park.x, leg.park.y)?;
            }
        }
        Ok(())
    }
}

/// Clearance used by workers when routing.
pub fn worker_clearance(s: &Scenario) -> f64 {
    s.worker_limits().body_radius + 0.05
}

/// Clearance used by stations when routing: wide enough that workers docked
/// anywhere inside the rendezvous radius stay clear of obstacles.
pub fn station_clearance(s: &Scenario) -> f64 {
    (s.energy.rendezvous_radius + s.worker_limits().body_radius + 0.1)
        .max(s.station_limits().body_radius + 0.05)
}

/// Raster and traversability grids shared by planning and execution.
#[derive(Debug, Clone)]
pub struct NavContext {
    pub grid: Arc<CellGrid>,
    pub worker: NavGrid,
    pub station: NavGrid,
}

impl NavContext {
    pub fn new(s: &Scenario) -> Result<Self> {
        let grid = Arc::new(rasterize(s)?);
        Ok(Self {
            worker: NavGrid::new(s, grid.clone(), worker_clearance(s)),
            station: NavGrid::new(s, grid.clone(), station_clearance(s)),
            grid,
        })
    }
}

/// Value of a distance field at an arbitrary point: field at the containing
/// traversable cell (or the nearest one) plus the offset to its center.
pub fn field_at(nav: &NavGrid, field: &[f64], p: Point) -> f64 {
    let cell = nav
        .grid()
        .cell_at(p)
        .filter(|&c| nav.is_nav(c) && field[c].is_finite())
        .or_else(|| nav.nearest_where(p, f64::INFINITY, |c| field[c].is_finite()));
    match cell {
        Some(c) => field[c] + nav.center(c).distance(p),
        None => f64::INFINITY,
    }
}

/// Estimated steps for a trip of `dist` meters at full worker speed.
pub fn trip_steps(s: &Scenario, dist: f64) -> f64 {
    dist / (s.worker_limits().v_max * s.dt) + TURN_STEPS
}

/// Working steps available above the exhaustion threshold with `energy` left.
pub fn budget_steps(s: &Scenario, energy: f64) -> f64 {
    let ep = &s.energy;
    (energy - ep.exhausted_threshold * ep.capacity) / ep.e_discharge
}

/// Splits a waypoint sequence into `m` contiguous pieces of roughly equal
/// path length.
pub fn split_balanced(points: &[Point], m: usize) -> Vec<Vec<Point>> {
    let mut out = vec![Vec::new(); m];
    if points.is_empty() || m == 0 {
        return out;
    }
    let mut cum = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    for (k, p) in points.iter().enumerate() {
        if k > 0 {
            acc += points[k - 1].distance(*p);
        }
        cum.push(acc);
    }
    let total = acc;
    for (k, &p) in points.iter().enumerate() {
        let w = if total > 0.0 {
            ((cum[k] / total * m as f64).floor() as usize).min(m - 1)
        } else {
            k * m / points.len()
        };
        out[w].push(p);
    }
    out
}

/// Visits interleaved with advisory recharge markers from a travel-time
/// energy simulation. `home(p)` is the trip length from `p` back to a
/// station. Fails when a visit cannot be reached and left again on one
/// full charge.
fn with_recharges(
    s: &Scenario,
    start: Point,
    points: &[Point],
    home: impl Fn(Point) -> f64,
) -> Result<Vec<PlanItem>> {
    let full = budget_steps(s, s.energy.capacity);
    let mut items = Vec::with_capacity(points.len());
    let mut budget = full;
    let mut here = start;
    for &q in points {
        let back = trip_steps(s, home(q));
        if !back.is_finite() || back + RETURN_MARGIN * back + RESERVE_STEPS > full {
            return Err(Error::Infeasible(format!(
                "point ({:.2}, {:.2}) is out of reach on one charge",
                q.x, q.y
            )));
        }
        let leg = trip_steps(s, here.distance(q));
        if budget - leg < RETURN_MARGIN * back + RESERVE_STEPS {
            items.push(PlanItem::Recharge);
            budget = full - back;
        } else {
            budget -= leg;
        }
        items.push(PlanItem::Visit(q));
        here = q;
    }
    Ok(items)
}

fn station_sources(s: &Scenario, nav: &NavGrid) -> Vec<usize> {
    s.robots
        .stations
        .poses
        .iter()
        .filter_map(|p| nav.nearest_nav(p.position()))
        .collect()
}

/// Static stations: one spanning-tree cycle over the whole area, split into
/// contiguous balanced pieces, with recharge markers wherever the trip home
/// would not fit into the remaining charge.
pub fn static_mstc_star(s: &Scenario, ctx: &NavContext) -> Result<CoveragePlan> {
    let m = s.num_workers();
    let start = s.robots.stations.poses[0].position();
    let cycle = stc_plan_components(&ctx.grid, s.cover_radius(), start);
    let field = ctx.worker.distance_field(&station_sources(s, &ctx.worker));
    let home = |p: Point| field_at(&ctx.worker, &field, p);
    let pieces = split_balanced(&cycle, m);
    let mut workers = Vec::with_capacity(m);
    for (i, piece) in pieces.iter().enumerate() {
        let from = s.robots.workers.poses[i].position();
        workers.push(with_recharges(s, from, piece, home)?);
    }
    Ok(CoveragePlan {
        workers,
        stations: vec![Vec::new(); s.num_stations()],
        home: vec![None; m],
    })
}

/// Points along a lane no more than `spacing` apart, ends included.
pub fn lane_points(lane: Lane, spacing: f64) -> Vec<Point> {
    let len = lane.length();
    let n = (len / spacing).ceil().max(1.0) as usize;
    if len == 0.0 {
        return vec![lane.start];
    }
    (0..=n)
        .map(|k| lane.start + (lane.end - lane.start) * (k as f64 / n as f64))
        .collect()
}

/// Orders lanes greedily: always continue with the lane whose nearer end is
/// closest to the current position, entering from that end.
pub fn chain_lanes(start: Point, mut lanes: Vec<Lane>) -> Vec<Lane> {
    let mut out = Vec::with_capacity(lanes.len());
    let mut here = start;
    while !lanes.is_empty() {
        let mut best = (f64::INFINITY, 0, false);
        for (k, l) in lanes.iter().enumerate() {
            let ds = l.start.distance(here);
            let de = l.end.distance(here);
            if ds < best.0 {
                best = (ds, k, false);
            }
            if de < best.0 {
                best = (de, k, true);
            }
        }
        let lane = lanes.remove(best.1);
        let lane = if best.2 { lane.reversed() } else { lane };
        here = lane.end;
        out.push(lane);
    }
    out
}

/// Serpentine lanes over every decomposition cell of `grid`.
pub fn bcd_lanes(grid: &CellGrid, cover_radius: f64) -> Vec<Lane> {
    let w = lane_width_cells(cover_radius, grid.resolution());
    bcd_decompose(grid)
        .iter()
        .flat_map(|c| cell_lanes(grid, c, w))
        .collect()
}

/// Visit items along chained lanes.
pub fn lane_visits(start: Point, lanes: Vec<Lane>, spacing: f64) -> Vec<PlanItem> {
    chain_lanes(start, lanes)
        .into_iter()
        .flat_map(|l| lane_points(l, spacing))
        .map(PlanItem::Visit)
        .collect()
}

/// Mobile stations chasing exhausted workers: lanes over the whole
/// decomposition, balanced by length across workers.
pub fn mobile_bcd_plan(s: &Scenario, ctx: &NavContext) -> CoveragePlan {
    let m = s.num_workers();
    let r = s.cover_radius();
    let lanes = bcd_lanes(&ctx.grid, r);
    let lengths: Vec<f64> = lanes.iter().map(Lane::length).collect();
    let workers = allocate_lanes(&lengths, m)
        .into_iter()
        .enumerate()
        .map(|(i, idx)| {
            let mine = idx.iter().map(|&k| lanes[k]).collect();
            lane_visits(s.robots.workers.poses[i].position(), mine, r)
        })
        .collect();
    CoveragePlan {
        workers,
        stations: vec![Vec::new(); s.num_stations()],
        home: vec![None; m],
    }
}

/// Number of regions so that each holds about one full charge of work.
pub fn region_count(s: &Scenario, free_cells: usize) -> usize {
    let res = s.bounds.resolution;
    let steps_per_cell = res * res / (2.0 * s.cover_radius() * s.worker_limits().v_max * s.dt);
    let k = (free_cells as f64 * steps_per_cell / s.energy.charge_steps()).ceil();
    (k as usize).clamp(1, free_cells.max(1))
}

/// Mobile stations parking region by region: the area is split among the
/// stations, each station's area into capacity-sized regions toured
/// depth-first, and each region covered by that station's workers.
pub fn mobile_mstc_star(s: &Scenario, ctx: &NavContext, seed: u64) -> Result<CoveragePlan> {
    let m = s.num_workers();
    let n = s.num_stations();
    let grid = &ctx.grid;
    let r = s.cover_radius();
    let cells: Vec<usize> = grid.free_indices().collect();
    let areas = kmeans_partition(grid, &cells, n, seed);

    // stations claim areas in index order, nearest centroid first
    let mut area_of = vec![usize::MAX; n];
    let mut taken = vec![false; areas.len()];
    for (j, slot) in area_of.iter_mut().enumerate() {
        let here = s.robots.stations.poses[j].position();
        let pick = (0..areas.len()).filter(|&a| !taken[a]).min_by(|&a, &b| {
            areas.centroids[a]
                .distance(here)
                .total_cmp(&areas.centroids[b].distance(here))
                .then(a.cmp(&b))
        });
        if let Some(a) = pick {
            taken[a] = true;
            *slot = a;
        }
    }

    let home: Vec<Option<usize>> = (0..m).map(|i| Some(i * n / m)).collect();
    let mut workers = vec![Vec::new(); m];
    let mut stations = vec![Vec::new(); n];
    for j in 0..n {
        let team: Vec<usize> = (0..m).filter(|&i| home[i] == Some(j)).collect();
        let Some(area_cells) = areas.members.get(area_of[j]) else {
            continue;
        };
        let start = s.robots.stations.poses[j].position();
        let reach = ctx.station.distance_field(
            &ctx.station
                .nearest_nav(start)
                .into_iter()
                .collect::<Vec<_>>(),
        );
        let k = region_count(s, area_cells.len());
        let regions = kmeans_partition(grid, area_cells, k, seed.wrapping_add(1 + j as u64));
        let adj = region_adjacency(grid, &regions);
        let first = (0..regions.len())
            .filter(|&q| !regions.members[q].is_empty())
            .min_by(|&a, &b| {
                regions.centroids[a]
                    .distance(start)
                    .total_cmp(&regions.centroids[b].distance(start))
                    .then(a.cmp(&b))
            })
            .unwrap_or(0);
        for (leg, q) in region_tour(&regions, &adj, first).into_iter().enumerate() {
            let centroid = regions.centroids[q];
            let park = ctx
                .station
                .nearest_where(centroid, f64::INFINITY, |c| reach[c].is_finite())
                .map(|c| ctx.station.center(c))
                .ok_or_else(|| Error::Infeasible(format!("station {j} cannot reach region {q}")))?;
            let sub = grid.restricted(|c| regions.labels[c] == Some(q));
            let cycle = stc_plan_components(&sub, r, park);
            for (piece, &i) in split_balanced(&cycle, team.len()).into_iter().zip(&team) {
                workers[i].extend(piece.into_iter().map(PlanItem::Visit));
                workers[i].push(PlanItem::RegionDone(leg));
            }
            stations[j].push(StationLeg { region: q, park });
        }
    }
    Ok(CoveragePlan {
        workers,
        stations,
        home,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::builtin::builtin;
    use crate::world::Pose;

    fn covered_by_visits(grid: &CellGrid, r: f64, pts: &[Point]) -> usize {
        (0..grid.len())
            .filter(|&i| grid.is_free(i) && pts.iter().any(|p| p.distance(grid.center(i)) <= r))
            .count()
    }

    #[test]
    fn balanced_split_is_contiguous_and_complete() {
        let pts: Vec<Point> = (0..10).map(|k| Point::new(k as f64, 0.0)).collect();
        let parts = split_balanced(&pts, 3);
        assert_eq!(parts.iter().map(Vec::len).sum::<usize>(), 10);
        let joined: Vec<Point> = parts.concat();
        assert_eq!(joined, pts);
        assert!(parts.iter().all(|p| !p.is_empty()));
    }

    #[test]
    fn generous_capacity_needs_no_recharge() {
        let mut s = Scenario::minimal(20.0, 20.0);
        s.energy.e_discharge /= 100.0;
        let ctx = NavContext::new(&s).unwrap();
        let plan = static_mstc_star(&s, &ctx).unwrap();
        let pts: Vec<Point> = (0..s.num_workers())
            .inspect(|&i| assert_eq!(plan.recharge_count(i), 0))
            .flat_map(|i| plan.visits(i).collect::<Vec<_>>())
            .collect();
        assert_eq!(
            covered_by_visits(&ctx.grid, s.cover_radius(), &pts),
            ctx.grid.free_count()
        );
    }

    #[test]
    fn half_cycle_capacity_schedules_recharges() {
        let mut s = Scenario::minimal(20.0, 20.0);
        let ctx = NavContext::new(&s).unwrap();
        let len = static_mstc_star(&s, &ctx)
            .unwrap()
            .path_length(0, s.robots.workers.poses[0].position());
        // a full charge lasts half the cycle
        s.energy.e_discharge = s.energy.capacity / (len / 2.0);
        let plan = static_mstc_star(&s, &ctx).unwrap();
        assert!(plan.recharge_count(0) >= 1);
        // energy-simulation oracle: between recharges the walked distance
        // never exceeds one charge
        let mut walked = 0.0;
        let station = s.robots.stations.poses[0].position();
        let mut here = s.robots.workers.poses[0].position();
        for it in &plan.workers[0] {
            match *it {
                PlanItem::Recharge => {
                    walked = 0.0;
                    here = station;
                }
                PlanItem::Visit(p) => {
                    walked += here.distance(p);
                    here = p;
                    assert!(walked <= s.energy.charge_steps());
                }
                PlanItem::RegionDone(_) => {}
            }
        }
    }

    #[test]
    fn tiny_capacity_is_infeasible() {
        let mut s = Scenario::minimal(40.0, 20.0);
        s.robots.stations.poses[0] = Pose::new(2.0, 2.0, 0.0);
        s.robots.workers.poses[0] = Pose::new(4.0, 2.0, 0.0);
        s.energy.e_discharge = s.energy.capacity / 30.0;
        let ctx = NavContext::new(&s).unwrap();
        assert!(matches!(
            static_mstc_star(&s, &ctx),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn bcd_plan_covers_star() {
        let s = builtin("star").unwrap();
        let ctx = NavContext::new(&s).unwrap();
        let plan = mobile_bcd_plan(&s, &ctx);
        let pts: Vec<Point> = (0..s.num_workers())
            .flat_map(|i| plan.visits(i).collect::<Vec<_>>())
            .collect();
        assert_eq!(
            covered_by_visits(&ctx.grid, s.cover_radius(), &pts),
            ctx.grid.free_count()
        );
    }

    #[test]
    fn lane_points_respect_spacing() {
        let lane = Lane {
            start: Point::new(0.5, 0.5),
            end: Point::new(0.5, 10.5),
        };
        let pts = lane_points(lane, 4.0);
        assert_eq!(pts.first(), Some(&lane.start));
        assert_eq!(pts.last(), Some(&lane.end));
        assert!(pts.windows(2).all(|w| w[0].distance(w[1]) <= 4.0 + 1e-12));
    }

    #[test]
    fn mobile_mstc_splits_two_stations() {
        let s = builtin("cuhksz-2").unwrap();
        let ctx = NavContext::new(&s).unwrap();
        let plan = mobile_mstc_star(&s, &ctx, 0).unwrap();
        assert_eq!(plan.stations.len(), 2);
        assert!(plan.stations.iter().all(|legs| !legs.is_empty()));
        let regions: Vec<Vec<usize>> = plan
            .stations
            .iter()
            .map(|l| l.iter().map(|x| x.region).collect())
            .collect();
        // every worker ends with the marker of its station's last leg
        for (i, items) in plan.workers.iter().enumerate() {
            let j = plan.home[i].unwrap();
            assert_eq!(
                items.last(),
                Some(&PlanItem::RegionDone(regions[j].len() - 1))
            );
        }
        let pts: Vec<Point> = (0..s.num_workers())
            .flat_map(|i| plan.visits(i).collect::<Vec<_>>())
            .collect();
        assert_eq!(
            covered_by_visits(&ctx.grid, s.cover_radius(), &pts),
            ctx.grid.free_count()
        );
    }

    #[test]
    fn single_region_single_station_degenerates_to_one_cycle() {
        let s = builtin("star").unwrap();
        let ctx = NavContext::new(&s).unwrap();
        assert_eq!(region_count(&s, ctx.grid.free_count()), 1);
        let plan = mobile_mstc_star(&s, &ctx, 3).unwrap();
        assert_eq!(plan.stations[0].len(), 1);
    }

    #[test]
    fn text_export_lists_every_item() {
        let s = Scenario::minimal(10.0, 10.0);
        let ctx = NavContext::new(&s).unwrap();
        let plan = static_mstc_star(&s, &ctx).unwrap();
        let mut buf = Vec::new();
        plan.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + plan.workers[0].len() + 1);
    }
}
