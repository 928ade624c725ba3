//! Online execution of an offline coverage plan.
//!
//! Each worker walks its plan queue, skipping points whose cover disc is
//! already fully covered, and falls back to the nearest uncovered cell once
//! the queue is empty. An energy guard sends it home in time; stations
//! either stay put, follow a parking schedule, or chase exhausted workers.
//! Robot-robot conflicts are resolved by priority (stations, then workers
//! by index) and every motion passes through the wait-and-move guard.

use std::collections::{BTreeMap, VecDeque};

use super::bcd::{bcd_decompose, cell_lanes, lane_width_cells};
use super::control::{pursue, wait_and_move, Corridor, Tracker};
use super::nav::{route, NavGrid};
use super::plan::{
    budget_steps, field_at, lane_visits, trip_steps, CoveragePlan, NavContext, PlanItem,
    RESERVE_STEPS, RETURN_MARGIN,
};
use super::{Controller, PlannerKind, Snapshot};
use crate::dynamics::{integrate_unicycle, scale_action, Action};
use crate::error::Result;
use crate::world::{Point, Pose, Scenario};

/// Workers stop and wait for docking this far inside the rendezvous radius.
const HOLD_MARGIN: f64 = 0.15;
/// Distance of the docking slots from the station center.
const SLOT_RADIUS: f64 = 1.0;
const SLOTS: usize = 8;
/// Consecutive blocked steps before routing around the blocking robots.
const DETOUR_AFTER: u32 = 3;
/// Consecutive blocked steps before giving up on the current goal.
const GIVE_UP_AFTER: u32 = 20;
/// Extra gap kept between robot bodies.
const SEPARATION: f64 = 0.1;
/// A station counts as parked within this distance of its parking point.
const PARK_TOL: f64 = 0.3;
/// A chasing station stops this far from its target worker.
const STATION_STOP: f64 = 1.0;
/// Robots closer than this are treated as obstacles when detouring.
const DETOUR_SCAN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Work,
    Return,
    Hold,
    Docked,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Goal {
    Visit(Point),
    /// Mop-up of a single uncovered cell.
    Cell(usize),
}

#[derive(Debug, Clone)]
struct Mover {
    tracker: Tracker,
    /// Goal of the current route.
    routed_to: Option<Point>,
    blocked: u32,
    detour: bool,
    last_pos: Point,
    moved_cmd: bool,
}

impl Mover {
    fn new(p: Point) -> Self {
        Self {
            tracker: Tracker::default(),
            routed_to: None,
            blocked: 0,
            detour: false,
            last_pos: p,
            moved_cmd: false,
        }
    }

    fn reset_route(&mut self) {
        self.tracker.clear();
        self.routed_to = None;
    }

    /// Updates the blocked counter from the observed motion of last step.
    fn observe(&mut self, pos: Point) {
        if pos.distance(self.last_pos) > 1e-9 {
            self.blocked = 0;
        } else if self.moved_cmd {
            self.blocked += 1;
            self.flag_detour();
        }
        self.last_pos = pos;
    }

    fn flag_detour(&mut self) {
        if self.blocked >= DETOUR_AFTER && self.blocked % DETOUR_AFTER == 0 {
            self.detour = true;
        }
    }
}

#[derive(Debug, Clone)]
struct WorkerExec {
    queue: VecDeque<PlanItem>,
    mode: Mode,
    goal: Option<Goal>,
    mv: Mover,
    legs_done: usize,
    slot: usize,
    /// Fine cells of the decomposition cell taken by the last replan.
    claim: Vec<usize>,
}

#[derive(Debug, Clone)]
struct StationExec {
    leg: usize,
    mv: Mover,
}

/// Per-step controller executing one of the baseline plans.
#[derive(Debug, Clone)]
pub struct TeamController {
    kind: PlannerKind,
    ctx: NavContext,
    plan: CoveragePlan,
    workers: Vec<WorkerExec>,
    stations: Vec<StationExec>,
    /// Worker-grid distance fields keyed by source cell.
    fields: BTreeMap<usize, Vec<f64>>,
    abandoned: Vec<bool>,
    waiting: Vec<bool>,
    worker_corridor: Corridor,
    station_corridor: Corridor,
}

struct Body {
    cur: Point,
    next: Point,
    radius: f64,
}

impl TeamController {
    pub fn new(kind: PlannerKind, s: &Scenario, ctx: NavContext, plan: CoveragePlan) -> Self {
        let workers = plan
            .workers
            .iter()
            .enumerate()
            .map(|(i, items)| WorkerExec {
                queue: items.iter().copied().collect(),
                mode: Mode::Work,
                goal: None,
                mv: Mover::new(s.robots.workers.poses[i].position()),
                legs_done: 0,
                slot: i % SLOTS,
                claim: Vec::new(),
            })
            .collect();
        let stations = s
            .robots
            .stations
            .poses
            .iter()
            .map(|p| StationExec {
                leg: 0,
                mv: Mover::new(p.position()),
            })
            .collect();
        let ir = s.interferer.radius;
        Self {
            kind,
            abandoned: vec![false; ctx.grid.len()],
            ctx,
            plan,
            workers,
            stations,
            fields: BTreeMap::new(),
            waiting: Vec::new(),
            worker_corridor: Corridor::new(s.worker_limits(), ir, s.dt),
            station_corridor: Corridor::new(s.station_limits(), ir, s.dt),
        }
    }

    pub fn kind(&self) -> PlannerKind {
        self.kind
    }

    pub fn plan(&self) -> &CoveragePlan {
        &self.plan
    }

    pub fn mode(&self, worker: usize) -> Mode {
        self.workers[worker].mode
    }

    /// Current parking leg of each station.
    pub fn station_legs(&self) -> Vec<usize> {
        self.stations.iter().map(|s| s.leg).collect()
    }

    /// Path length from `pos` to `source` over the worker grid, with the
    /// field of each source cell computed once.
    fn path_length(&mut self, source: Point, pos: Point) -> f64 {
        let Some(cell) = self.ctx.worker.nearest_nav(source) else {
            return f64::INFINITY;
        };
        let nav = &self.ctx.worker;
        let field = self
            .fields
            .entry(cell)
            .or_insert_with(|| nav.distance_field(&[cell]));
        field_at(nav, field, pos)
    }

    /// Where station `j` will be when a worker gets home.
    fn station_anchor(&self, snap: &Snapshot<'_>, j: usize) -> Point {
        match self.plan.stations[j].get(self.stations[j].leg) {
            Some(leg) if self.kind == PlannerKind::MobileMstc => leg.park,
            _ => snap.state.stations[j].pose.position(),
        }
    }

    /// Nearest home station of worker `i` and the path length to it.
    fn home_distance(&mut self, snap: &Snapshot<'_>, i: usize) -> (usize, f64) {
        let pos = snap.state.workers[i].pose.position();
        let candidates: Vec<usize> = match self.plan.home[i] {
            Some(j) => vec![j],
            None => (0..self.stations.len()).collect(),
        };
        let mut best = (candidates[0], f64::INFINITY);
        for j in candidates {
            let anchor = self.station_anchor(snap, j);
            let d = self.path_length(anchor, pos);
            let d = if d.is_finite() {
                d
            } else {
                1.3 * pos.distance(anchor)
            };
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }

    fn should_return(&mut self, snap: &Snapshot<'_>, i: usize) -> bool {
        let s = snap.scenario;
        let e = snap.state.workers[i].energy;
        if self.kind == PlannerKind::MobileBcd {
            return s.energy.is_exhausted(e);
        }
        let (_, d) = self.home_distance(snap, i);
        budget_steps(s, e) <= RETURN_MARGIN * trip_steps(s, d) + RESERVE_STEPS
    }

    /// Station a returning worker heads for.
    fn return_station(&mut self, snap: &Snapshot<'_>, i: usize) -> usize {
        let pos = snap.state.workers[i].pose.position();
        match (self.kind, self.plan.home[i]) {
            (_, Some(j)) => j,
            (PlannerKind::MobileBcd, None) => (0..self.stations.len())
                .min_by(|&a, &b| {
                    let da = snap.state.stations[a].pose.position().distance(pos);
                    let db = snap.state.stations[b].pose.position().distance(pos);
                    da.total_cmp(&db).then(a.cmp(&b))
                })
                .unwrap_or(0),
            _ => self.home_distance(snap, i).0,
        }
    }

    fn disc_has_uncovered(&self, snap: &Snapshot<'_>, p: Point) -> bool {
        let grid = &self.ctx.grid;
        let r = snap.scenario.cover_radius();
        let Some(((x0, x1), (y0, y1))) = grid.coord_range(p, r) else {
            return false;
        };
        let r_sq = r * r;
        (y0..=y1).any(|y| {
            (x0..=x1).any(|x| {
                let c = grid.index(x, y);
                grid.is_free(c)
                    && !snap.coverage.is_covered(c)
                    && !self.abandoned[c]
                    && grid.center(c).distance_sq(p) <= r_sq
            })
        })
    }

    fn goal_point(&self, g: Goal) -> Point {
        match g {
            Goal::Visit(p) => p,
            Goal::Cell(c) => self.ctx.grid.center(c),
        }
    }

    fn goal_alive(&self, snap: &Snapshot<'_>, g: Goal) -> bool {
        match g {
            Goal::Visit(p) => self.disc_has_uncovered(snap, p),
            Goal::Cell(c) => !snap.coverage.is_covered(c) && !self.abandoned[c],
        }
    }

    /// Pops the queue up to the next useful visit, replanning or falling
    /// back to mop-up when it runs dry.
    fn next_goal(&mut self, snap: &Snapshot<'_>, i: usize) -> Option<Goal> {
        let mut replanned = false;
        loop {
            while let Some(item) = self.workers[i].queue.pop_front() {
                match item {
                    PlanItem::Visit(p) => {
                        if self.disc_has_uncovered(snap, p) {
                            return Some(Goal::Visit(p));
                        }
                    }
                    PlanItem::RegionDone(k) => self.workers[i].legs_done = k + 1,
                    PlanItem::Recharge => {}
                }
            }
            if self.kind == PlannerKind::MobileBcd && !replanned {
                replanned = true;
                if self.replan_lanes(snap, i) {
                    continue;
                }
            }
            return self.mop_up(snap, i).map(Goal::Cell);
        }
    }

    /// Lanes over the not yet covered area: takes the decomposition cell
    /// nearest to the worker that no other worker has claimed.
    fn replan_lanes(&mut self, snap: &Snapshot<'_>, i: usize) -> bool {
        let grid = &self.ctx.grid;
        let rest = grid.restricted(|c| !snap.coverage.is_covered(c) && !self.abandoned[c]);
        if rest.free_count() == 0 {
            return false;
        }
        let mut claimed = vec![false; grid.len()];
        for (k, w) in self.workers.iter().enumerate() {
            if k != i {
                for &c in &w.claim {
                    claimed[c] = true;
                }
            }
        }
        let pos = snap.state.workers[i].pose.position();
        let r = snap.scenario.cover_radius();
        let width = lane_width_cells(r, grid.resolution());
        let cells = bcd_decompose(&rest);
        let members = |cell: &super::bcd::BcdCell| -> Vec<usize> {
            let mut out = Vec::with_capacity(cell.cell_count());
            for (k, &(lo, hi)) in cell.intervals.iter().enumerate() {
                out.extend((lo..=hi).map(|y| rest.index(cell.col_start + k, y)));
            }
            out
        };
        let mut best: Option<(bool, f64, usize)> = None;
        for (k, cell) in cells.iter().enumerate() {
            let own = members(cell);
            let taken = own.iter().filter(|&&c| claimed[c]).count() * 2 > own.len();
            let d = cell_lanes(&rest, cell, width)
                .iter()
                .flat_map(|l| [l.start, l.end])
                .map(|p| p.distance(pos))
                .fold(f64::INFINITY, f64::min);
            let key = (taken, d, k);
            if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                best = Some(key);
            }
        }
        let Some((_, _, k)) = best else {
            return false;
        };
        let lanes = cell_lanes(&rest, &cells[k], width);
        let w = &mut self.workers[i];
        w.claim = members(&cells[k]);
        w.queue = lane_visits(pos, lanes, r).into_iter().collect();
        true
    }

    /// Nearest uncovered cell, preferring cells away from other workers'
    /// mop-up targets.
    fn mop_up(&self, snap: &Snapshot<'_>, i: usize) -> Option<usize> {
        let pos = snap.state.workers[i].pose.position();
        let r = snap.scenario.cover_radius();
        let grid = &self.ctx.grid;
        let others: Vec<Point> = self
            .workers
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .filter_map(|(_, w)| match w.goal {
                Some(Goal::Cell(c)) => Some(grid.center(c)),
                _ => None,
            })
            .collect();
        let mut best: Option<(bool, f64, usize)> = None;
        for c in snap.coverage.uncovered() {
            if self.abandoned[c] {
                continue;
            }
            let p = grid.center(c);
            let near_other = others.iter().any(|q| q.distance(p) <= r);
            let key = (near_other, p.distance(pos), c);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        best.map(|b| b.2)
    }

    /// Positions of every robot other than the given one within the detour
    /// scan radius.
    fn nearby_robots(snap: &Snapshot<'_>, me: Point) -> Vec<Point> {
        let st = snap.state;
        st.workers
            .iter()
            .map(|w| w.pose.position())
            .chain(st.stations.iter().map(|s| s.pose.position()))
            .filter(|p| p.distance(me) > 1e-9 && p.distance(me) <= DETOUR_SCAN)
            .collect()
    }

    fn plan_route(
        s: &Scenario,
        nav: &NavGrid,
        mv: &mut Mover,
        from: Point,
        to: Point,
        avoid: &[(Point, f64)],
    ) -> bool {
        let grid = nav.grid();
        let blocked = |c: usize| avoid.iter().any(|&(q, r)| grid.center(c).distance(q) < r);
        let path = if avoid.is_empty() {
            route(s, nav, from, to, |_| false, &[])
        } else {
            route(s, nav, from, to, blocked, avoid)
                .or_else(|| route(s, nav, from, to, |_| false, &[]))
        };
        mv.routed_to = Some(to);
        match path {
            Some(p) => {
                mv.tracker = Tracker::new(p);
                true
            }
            None => {
                mv.tracker.clear();
                false
            }
        }
    }

    fn avoid_list(snap: &Snapshot<'_>, me: Point, my_radius: f64) -> Vec<(Point, f64)> {
        let r = snap
            .scenario
            .worker_limits()
            .body_radius
            .max(snap.scenario.station_limits().body_radius);
        Self::nearby_robots(snap, me)
            .into_iter()
            .map(|q| (q, my_radius + r + SEPARATION))
            .collect()
    }

    fn worker_action(&mut self, snap: &Snapshot<'_>, i: usize) -> Action {
        let s = snap.scenario;
        let w = snap.state.workers[i];
        let pos = w.pose.position();
        if self.workers[i].mode == Mode::Docked {
            return Action::ZERO;
        }
        if self.workers[i].mode == Mode::Work && self.should_return(snap, i) {
            let we = &mut self.workers[i];
            we.mode = Mode::Return;
            we.mv.reset_route();
            we.mv.blocked = 0;
        }
        if matches!(self.workers[i].mode, Mode::Return | Mode::Hold) {
            return self.return_action(snap, i);
        }

        if self.workers[i].mv.blocked >= GIVE_UP_AFTER {
            let we = &mut self.workers[i];
            we.goal = None;
            we.mv.reset_route();
            we.mv.blocked = 0;
        }
        // bounded: each pass either settles on a goal or discards one
        for _ in 0..self.ctx.grid.len() + 16 {
            let goal = match self.workers[i].goal {
                Some(g) if self.goal_alive(snap, g) => g,
                Some(_) => {
                    self.workers[i].goal = None;
                    continue;
                }
                None => match self.next_goal(snap, i) {
                    Some(g) => {
                        let we = &mut self.workers[i];
                        we.goal = Some(g);
                        we.mv.reset_route();
                        g
                    }
                    None => {
                        self.workers[i].goal = None;
                        return Action::ZERO;
                    }
                },
            };
            let target = self.goal_point(goal);
            let we = &mut self.workers[i];
            we.mv.tracker.prune(pos);
            if we.mv.routed_to.is_some() && we.mv.tracker.is_done() && !we.mv.detour {
                // arrived: whatever is still uncovered here is out of reach
                if let Goal::Cell(c) = goal {
                    self.abandoned[c] = true;
                }
                self.workers[i].goal = None;
                self.workers[i].mv.reset_route();
                continue;
            }
            if we.mv.routed_to.is_none() || we.mv.detour {
                let avoid = if we.mv.detour {
                    Self::avoid_list(snap, pos, s.worker_limits().body_radius)
                } else {
                    Vec::new()
                };
                we.mv.detour = false;
                if !Self::plan_route(s, &self.ctx.worker, &mut we.mv, pos, target, &avoid) {
                    if let Goal::Cell(c) = goal {
                        self.abandoned[c] = true;
                    }
                    self.workers[i].goal = None;
                    self.workers[i].mv.reset_route();
                    continue;
                }
            }
            break;
        }
        self.workers[i]
            .mv
            .tracker
            .act(w.pose, s.worker_limits(), s.dt)
    }

    /// Free docking slot around station `j` nearest to worker `i`, as
    /// `(slot, point)`; slots taken by other returning workers come last.
    fn slot_point(&self, snap: &Snapshot<'_>, i: usize, j: usize) -> (usize, Point) {
        let s = snap.scenario;
        let sp = snap.state.stations[j].pose.position();
        let pos = snap.state.workers[i].pose.position();
        let clear = s.worker_limits().body_radius + 0.05;
        let taken: Vec<usize> = self
            .workers
            .iter()
            .enumerate()
            .filter(|&(k, w)| k != i && matches!(w.mode, Mode::Return | Mode::Hold))
            .map(|(_, w)| w.slot)
            .collect();
        let at = |k: usize| {
            let a = k as f64 * std::f64::consts::TAU / SLOTS as f64;
            sp + Point::new(a.cos(), a.sin()) * SLOT_RADIUS
        };
        let start = self.workers[i].slot;
        let pick = (0..SLOTS)
            .map(|o| (start + o) % SLOTS)
            .filter(|&k| !s.disc_blocked(at(k), clear))
            .min_by(|&a, &b| {
                let ka = (taken.contains(&a), at(a).distance(pos));
                let kb = (taken.contains(&b), at(b).distance(pos));
                ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
            });
        match pick {
            Some(k) => (k, at(k)),
            None => (start, sp),
        }
    }

    fn return_action(&mut self, snap: &Snapshot<'_>, i: usize) -> Action {
        let s = snap.scenario;
        let w = snap.state.workers[i];
        let pos = w.pose.position();
        let j = self.return_station(snap, i);
        let sp = snap.state.stations[j].pose.position();
        let d = pos.distance(sp);
        let eps = s.energy.rendezvous_radius;
        let hold =
            d <= eps - HOLD_MARGIN || (self.workers[i].mode == Mode::Hold && d <= eps - 0.05);
        if hold {
            let we = &mut self.workers[i];
            we.mode = Mode::Hold;
            we.mv.reset_route();
            return Action::ZERO;
        }
        self.workers[i].mode = Mode::Return;
        if self.workers[i].mv.blocked >= GIVE_UP_AFTER {
            let we = &mut self.workers[i];
            we.slot = (we.slot + 1) % SLOTS;
            we.mv.blocked = 0;
            we.mv.reset_route();
        }
        let (k, target) = self.slot_point(snap, i, j);
        let we = &mut self.workers[i];
        we.slot = k;
        we.mv.tracker.prune(pos);
        let stale =
            we.mv.routed_to.is_none_or(|g| g.distance(target) > 0.5) || we.mv.tracker.is_done();
        if stale || we.mv.detour {
            let avoid = if we.mv.detour {
                Self::avoid_list(snap, pos, s.worker_limits().body_radius)
            } else {
                Vec::new()
            };
            we.mv.detour = false;
            Self::plan_route(s, &self.ctx.worker, &mut we.mv, pos, target, &avoid);
        }
        we.mv.tracker.act(w.pose, s.worker_limits(), s.dt)
    }

    fn drive_station(&mut self, snap: &Snapshot<'_>, j: usize, target: Point) -> Action {
        let s = snap.scenario;
        let pose = snap.state.stations[j].pose;
        let pos = pose.position();
        let mv = &mut self.stations[j].mv;
        mv.tracker.prune(pos);
        let stale = mv.routed_to.is_none_or(|g| g.distance(target) > 0.5) || mv.tracker.is_done();
        if stale || mv.detour {
            let avoid = if mv.detour {
                Self::avoid_list(snap, pos, s.station_limits().body_radius)
            } else {
                Vec::new()
            };
            mv.detour = false;
            Self::plan_route(s, &self.ctx.station, mv, pos, target, &avoid);
        }
        mv.tracker.act(pose, s.station_limits(), s.dt)
    }

    fn station_action(&mut self, snap: &Snapshot<'_>, j: usize) -> Action {
        let s = snap.scenario;
        let st = snap.state;
        let pose = st.stations[j].pose;
        let pos = pose.position();
        match self.kind {
            PlannerKind::StaticMstc => Action::ZERO,
            PlannerKind::MobileBcd => {
                let target = (0..st.workers.len())
                    .filter(|&i| {
                        st.workers[i].docked_to.is_none()
                            && s.energy.is_exhausted(st.workers[i].energy)
                    })
                    .min_by(|&a, &b| {
                        let da = st.workers[a].pose.position().distance(pos);
                        let db = st.workers[b].pose.position().distance(pos);
                        da.total_cmp(&db).then(a.cmp(&b))
                    });
                let Some(i) = target else {
                    self.stations[j].mv.reset_route();
                    return Action::ZERO;
                };
                let wp = st.workers[i].pose.position();
                let d = wp.distance(pos);
                if d <= STATION_STOP {
                    return Action::ZERO;
                }
                let limits = s.station_limits();
                if d <= STATION_STOP + limits.v_max * s.dt
                    && s.segment_clear(pos, wp, self.ctx.station.clearance())
                {
                    return pursue(&pose, wp, STATION_STOP, limits, s.dt);
                }
                self.drive_station(snap, j, wp)
            }
            PlannerKind::MobileMstc => {
                let legs = &self.plan.stations[j];
                if legs.is_empty() {
                    return Action::ZERO;
                }
                let team: Vec<usize> = (0..self.workers.len())
                    .filter(|&i| self.plan.home[i] == Some(j))
                    .collect();
                let leg = self.stations[j].leg;
                let parked = pos.distance(legs[leg].park) <= PARK_TOL;
                let team_done = team.iter().all(|&i| {
                    self.workers[i].legs_done > leg && self.workers[i].mode == Mode::Work
                });
                if parked && leg + 1 < legs.len() && team_done {
                    self.stations[j].leg += 1;
                    self.stations[j].mv.reset_route();
                }
                let waiting_for_dock = team.iter().any(|&i| {
                    let w = &self.workers[i];
                    w.mode == Mode::Hold
                        || (w.mode == Mode::Return
                            && st.workers[i].pose.position().distance(pos) < DETOUR_SCAN)
                });
                if waiting_for_dock {
                    return Action::ZERO;
                }
                let park = legs[self.stations[j].leg].park;
                if pos.distance(park) <= PARK_TOL {
                    self.stations[j].mv.reset_route();
                    return Action::ZERO;
                }
                self.drive_station(snap, j, park)
            }
        }
    }

    /// Zeroes the linear part of lower-priority motions that would bring two
    /// robot bodies closer than their radii plus a margin.
    fn resolve_conflicts(&mut self, snap: &Snapshot<'_>, actions: &mut [Action]) -> Vec<bool> {
        let s = snap.scenario;
        let st = snap.state;
        let m = st.workers.len();
        let n = st.stations.len();
        let wr = s.worker_limits().body_radius;
        let sr = s.station_limits().body_radius;
        // agent k < n is station k, otherwise undocked worker k - n
        let agent_bodies = |k: usize, act: Action| -> Vec<Body> {
            if k < n {
                let pose = st.stations[k].pose;
                let (v, om) = scale_action(act, s.station_limits());
                let next = integrate_unicycle(pose, v, om, s.dt).position();
                let delta = next - pose.position();
                let mut out = vec![Body {
                    cur: pose.position(),
                    next,
                    radius: sr,
                }];
                out.extend(
                    st.workers
                        .iter()
                        .filter(|w| w.docked_to == Some(k))
                        .map(|w| Body {
                            cur: w.pose.position(),
                            next: w.pose.position() + delta,
                            radius: wr,
                        }),
                );
                out
            } else {
                let w = &st.workers[k - n];
                if w.docked_to.is_some() {
                    return Vec::new();
                }
                let (v, om) = scale_action(act, s.worker_limits());
                vec![Body {
                    cur: w.pose.position(),
                    next: integrate_unicycle(w.pose, v, om, s.dt).position(),
                    radius: wr,
                }]
            }
        };
        let action_of = |k: usize, acts: &[Action]| if k < n { acts[m + k] } else { acts[k - n] };
        let total = n + m;
        let mut predicted: Vec<Vec<Point>> = (0..total)
            .map(|k| {
                agent_bodies(k, Action::ZERO)
                    .iter()
                    .map(|b| b.cur)
                    .collect()
            })
            .collect();
        let radii: Vec<Vec<f64>> = (0..total)
            .map(|k| {
                agent_bodies(k, Action::ZERO)
                    .iter()
                    .map(|b| b.radius)
                    .collect()
            })
            .collect();
        let mut conflicted = vec![false; total];
        for k in 0..total {
            let act = action_of(k, actions);
            if act.u_v == 0.0 {
                continue;
            }
            let bodies = agent_bodies(k, act);
            let clash = (0..total).filter(|&o| o != k).any(|o| {
                bodies.iter().any(|b| {
                    predicted[o].iter().zip(&radii[o]).any(|(&q, &r)| {
                        let dn = b.next.distance(q);
                        dn < b.radius + r + SEPARATION && dn < b.cur.distance(q) - 1e-12
                    })
                })
            });
            if clash {
                conflicted[k] = true;
                let slot = if k < n { m + k } else { k - n };
                actions[slot] = Action::new(0.0, actions[slot].u_omega);
            } else {
                predicted[k] = bodies.iter().map(|b| b.next).collect();
            }
        }
        // back to action order: workers then stations
        let mut out = vec![false; total];
        for (k, &c) in conflicted.iter().enumerate() {
            let slot = if k < n { m + k } else { k - n };
            out[slot] = c;
        }
        out
    }

    fn guard(&self, snap: &Snapshot<'_>, actions: &mut [Action]) -> Vec<bool> {
        let s = snap.scenario;
        let st = snap.state;
        let m = st.workers.len();
        let mut waited = vec![false; actions.len()];
        let near = |p: Point, range: f64| -> Vec<Point> {
            st.interferers
                .iter()
                .map(|q| q.pose.position())
                .filter(|q| q.distance(p) <= range)
                .collect()
        };
        for (a, act) in actions.iter_mut().enumerate() {
            if act.u_v == 0.0 {
                continue;
            }
            let guarded = if a < m {
                let pose = st.workers[a].pose;
                let seen = near(pose.position(), s.worker_limits().perception_range);
                wait_and_move(*act, &pose, &seen, &self.worker_corridor)
            } else {
                let j = a - m;
                let pose = st.stations[j].pose;
                let seen = near(pose.position(), s.station_limits().perception_range);
                let mut out = wait_and_move(*act, &pose, &seen, &self.station_corridor);
                for w in st.workers.iter().filter(|w| w.docked_to == Some(j)) {
                    let p = w.pose.position();
                    let carried = Pose::new(p.x, p.y, pose.heading);
                    out = wait_and_move(out, &carried, &seen, &self.worker_corridor);
                }
                out
            };
            if guarded != *act {
                waited[a] = true;
                *act = guarded;
            }
        }
        waited
    }
}

impl Controller for TeamController {
    fn actions(&mut self, snap: &Snapshot<'_>) -> Result<Vec<Action>> {
        let st = snap.state;
        let m = st.workers.len();
        for (i, w) in st.workers.iter().enumerate() {
            let we = &mut self.workers[i];
            we.mv.observe(w.pose.position());
            if w.docked_to.is_some() {
                we.mode = Mode::Docked;
                we.mv.reset_route();
            } else if we.mode == Mode::Docked {
                we.mode = Mode::Work;
                we.goal = None;
                we.mv.reset_route();
                we.mv.blocked = 0;
            }
        }
        for (j, s) in st.stations.iter().enumerate() {
            self.stations[j].mv.observe(s.pose.position());
        }
        let mut actions = Vec::with_capacity(st.num_agents());
        for i in 0..m {
            actions.push(self.worker_action(snap, i));
        }
        for j in 0..st.stations.len() {
            actions.push(self.station_action(snap, j));
        }
        let conflicted = self.resolve_conflicts(snap, &mut actions);
        let waited = self.guard(snap, &mut actions);
        for (a, act) in actions.iter().enumerate() {
            let mv = if a < m {
                &mut self.workers[a].mv
            } else {
                &mut self.stations[a - m].mv
            };
            mv.moved_cmd = act.u_v != 0.0;
            if conflicted[a] {
                mv.blocked += 1;
                mv.flag_detour();
            }
        }
        self.waiting = waited;
        Ok(actions)
    }

    fn waiting(&self) -> Vec<bool> {
        self.waiting.clone()
    }
}
