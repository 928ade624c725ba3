//! Per-episode metrics, computed from the trace alone.

use serde::{Deserialize, Serialize};

use super::trace::{EpisodeTrace, Frame};
use crate::dynamics::{Action, Entity};
use crate::planners::control::Corridor;
use crate::rewards::discounted_return;
use crate::world::{Point, Pose, Scenario};

/// Summed reward components over an episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardTotals {
    pub covering: f64,
    pub energy_penalty: f64,
    pub collision: f64,
    pub time: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    /// Step at which every free cell was covered; `None` is the unfinished
    /// sentinel.
    pub t_finish: Option<u64>,
    pub steps: u64,
    pub coverage_ratio: f64,
    /// Coverage ratio after every step; non-decreasing.
    pub coverage_curve: Vec<f64>,
    pub collisions: usize,
    /// Robot-interferer collisions while the robot was not driving; a docked
    /// worker drives whenever its station does.
    pub collisions_while_waiting: usize,
    pub worker_distance: Vec<f64>,
    pub station_distance: Vec<f64>,
    pub recharge_events: usize,
    pub discounted_return: f64,
    pub reward_totals: RewardTotals,
}

fn worker_positions(f: &Frame) -> Vec<Point> {
    f.workers.iter().map(|w| Point::new(w.x, w.y)).collect()
}

fn station_positions(f: &Frame) -> Vec<Point> {
    f.stations.iter().map(|s| Point::new(s.x, s.y)).collect()
}

/// Pose and forward command that actually move agent `a` during a step: a
/// docked worker rides along with its station.
fn effective_motion(before: &Frame, actions: &[Action], a: usize) -> (Pose, f64, bool) {
    let m = before.workers.len();
    let u = |j: usize| actions.get(j).map_or(0.0, |act| act.u_v);
    if a < m {
        let w = &before.workers[a];
        match w.docked_to {
            Some(j) => (
                Pose::new(w.x, w.y, before.stations[j].heading),
                u(m + j),
                true,
            ),
            None => (Pose::new(w.x, w.y, w.heading), u(a), false),
        }
    } else {
        let st = &before.stations[a - m];
        (Pose::new(st.x, st.y, st.heading), u(a), true)
    }
}

/// Robot-interferer collisions in which the robot was driving although an
/// interferer already sat in its stop corridor when the step began. The
/// wait-and-move guard should keep this at zero.
pub fn guard_violations(trace: &EpisodeTrace, s: &Scenario) -> usize {
    let m = trace.header.initial.workers.len();
    let ir = s.interferer.radius;
    let worker = Corridor::new(s.worker_limits(), ir, s.dt);
    let station = Corridor::new(s.station_limits(), ir, s.dt);
    let mut count = 0;
    for (k, rec) in trace.steps.iter().enumerate() {
        let before = trace.frame_before(k);
        for &(a, b) in &rec.collisions {
            let (Some(robot), Some(q)) = (robot_of((a, b), m), interferer_of((a, b))) else {
                continue;
            };
            let (pose, u_v, rides_station) = effective_motion(before, &rec.actions, robot);
            let corridor = if rides_station { &station } else { &worker };
            let rec_q = &before.interferers[q];
            if corridor.contains(&pose, u_v, Point::new(rec_q.x, rec_q.y)) {
                count += 1;
            }
        }
    }
    count
}

fn interferer_of(pair: (Entity, Entity)) -> Option<usize> {
    match pair {
        (Entity::Interferer(q), _) | (_, Entity::Interferer(q)) => Some(q),
        _ => None,
    }
}

/// Robot of a robot-interferer pair, as an index into the joint action.
fn robot_of(pair: (Entity, Entity), m: usize) -> Option<usize> {
    let (a, b) = pair;
    let robot = match (a, b) {
        (Entity::Interferer(_), r) | (r, Entity::Interferer(_)) => r,
        _ => return None,
    };
    match robot {
        Entity::Worker(i) => Some(i),
        Entity::Station(j) => Some(m + j),
        _ => None,
    }
}

impl EpisodeMetrics {
    pub fn from_trace(trace: &EpisodeTrace) -> Self {
        let h = &trace.header;
        let m = h.initial.workers.len();
        let mut worker_distance = vec![0.0; m];
        let mut station_distance = vec![0.0; h.initial.stations.len()];
        let mut prev_w = worker_positions(&h.initial);
        let mut prev_s = station_positions(&h.initial);
        let mut totals = RewardTotals::default();
        let mut curve = Vec::with_capacity(trace.steps.len());
        let mut t_finish = None;
        let mut collisions = 0;
        let mut while_waiting = 0;
        let mut recharge_events = 0;
        let mut rewards = Vec::with_capacity(trace.steps.len());
        for (k, rec) in trace.steps.iter().enumerate() {
            let w = worker_positions(&rec.state);
            let s = station_positions(&rec.state);
            for (d, (a, b)) in worker_distance.iter_mut().zip(prev_w.iter().zip(&w)) {
                *d += a.distance(*b);
            }
            for (d, (a, b)) in station_distance.iter_mut().zip(prev_s.iter().zip(&s)) {
                *d += a.distance(*b);
            }
            prev_w = w;
            prev_s = s;
            collisions += rec.collisions.len();
            let before = trace.frame_before(k);
            while_waiting += rec
                .collisions
                .iter()
                .filter_map(|&p| robot_of(p, m))
                .filter(|&a| effective_motion(before, &rec.actions, a).1 == 0.0)
                .count();
            recharge_events += rec.docked.len();
            totals.covering += rec.reward.covering.iter().sum::<f64>();
            totals.energy_penalty += rec.reward.energy_penalty.iter().sum::<f64>();
            totals.collision += rec.reward.collision;
            totals.time += rec.reward.time;
            totals.total += rec.reward.total;
            rewards.push(rec.reward.total);
            curve.push(if h.free_cells == 0 {
                1.0
            } else {
                rec.covered as f64 / h.free_cells as f64
            });
            if rec.finished && t_finish.is_none() {
                t_finish = Some(rec.t);
            }
        }
        Self {
            t_finish,
            steps: trace.steps.len() as u64,
            coverage_ratio: curve.last().copied().unwrap_or(0.0),
            coverage_curve: curve,
            collisions,
            collisions_while_waiting: while_waiting,
            worker_distance,
            station_distance,
            recharge_events,
            discounted_return: discounted_return(&rewards, h.gamma),
            reward_totals: totals,
        }
    }

    pub fn finished(&self) -> bool {
        self.t_finish.is_some()
    }
}

/// `inf` for unfinished episodes, the step count otherwise.
pub fn format_t_finish(t: Option<u64>) -> String {
    t.map_or_else(|| "inf".to_string(), |t| t.to_string())
}
