//! Low-level controllers: waypoint tracking, pursuit, and the wait-and-move
//! guard against interferers.

use std::collections::VecDeque;

use crate::dynamics::{Action, WorldState};
use crate::world::{normalize_angle, KinematicLimits, Point, Pose};

/// A waypoint counts as reached within this distance.
pub const ARRIVE_TOL: f64 = 1e-6;
/// Headings closer than this are treated as aligned.
const ALIGN_TOL: f64 = 1e-9;

fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Rotate-then-drive follower for a polyline of waypoints.
///
/// The robot turns in place until it faces the next waypoint, then drives
/// straight; collinear waypoints ahead are passed without stopping.
#[derive(Debug, Clone, Default)]
pub struct Tracker {
    pub waypoints: VecDeque<Point>,
}

impl Tracker {
    pub fn new(points: impl IntoIterator<Item = Point>) -> Self {
        Self {
            waypoints: points.into_iter().collect(),
        }
    }

    pub fn is_done(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn clear(&mut self) {
        self.waypoints.clear();
    }

    /// Drops waypoints already reached or passed along a straight run.
    pub fn prune(&mut self, pos: Point) {
        while let Some(&front) = self.waypoints.front() {
            if front.distance(pos) <= ARRIVE_TOL {
                self.waypoints.pop_front();
                continue;
            }
            if let Some(&next) = self.waypoints.get(1) {
                let seg = next - front;
                let len = seg.norm();
                if len > 0.0 {
                    let u = seg * (1.0 / len);
                    let rel = pos - front;
                    let along = rel.dot(u);
                    if along > 0.0 && along <= len + ARRIVE_TOL && rel.cross(u).abs() <= ARRIVE_TOL
                    {
                        self.waypoints.pop_front();
                        continue;
                    }
                }
            }
            break;
        }
    }

    pub fn act(&mut self, pose: Pose, limits: &KinematicLimits, dt: f64) -> Action {
        let pos = pose.position();
        self.prune(pos);
        let Some(&target) = self.waypoints.front() else {
            return Action::ZERO;
        };
        let to = target - pos;
        let d = to.norm();
        let alpha = normalize_angle(to.y.atan2(to.x) - pose.heading);
        if alpha.abs() > ALIGN_TOL {
            return Action::new(0.0, clamp_unit(alpha / (limits.omega_max * dt)));
        }
        let u = to * (1.0 / d);
        let mut run = d;
        let mut prev = target;
        for &w in self.waypoints.iter().skip(1) {
            let seg = w - prev;
            let len = seg.norm();
            if len == 0.0 {
                continue;
            }
            if seg.dot(u) <= 0.0 || (seg * (1.0 / len)).cross(u).abs() > ALIGN_TOL {
                break;
            }
            run += len;
            prev = w;
        }
        Action::new(clamp_unit(run / (limits.v_max * dt)), 0.0)
    }
}

/// Geometry of the wait-and-move stop corridor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corridor {
    /// Length of the motion lookahead.
    pub lookahead: f64,
    /// Half-width of the corridor and extra reach beyond the lookahead.
    pub stop_distance: f64,
}

impl Corridor {
    /// Lookahead of three steps at full speed; stop distance of twice the
    /// sum of the two body radii.
    pub fn new(limits: &KinematicLimits, interferer_radius: f64, dt: f64) -> Self {
        Self {
            lookahead: 3.0 * limits.v_max * dt,
            stop_distance: 2.0 * (limits.body_radius + interferer_radius),
        }
    }

    /// True when `q` lies in the corridor ahead of a robot at `pose` moving
    /// in the direction given by the sign of `u_v`.
    pub fn contains(&self, pose: &Pose, u_v: f64, q: Point) -> bool {
        if u_v == 0.0 {
            return false;
        }
        let dir = pose.direction() * u_v.signum();
        let rel = q - pose.position();
        let along = rel.dot(dir);
        let lateral = rel.cross(dir).abs();
        along >= 0.0
            && along <= self.lookahead + self.stop_distance
            && lateral <= self.stop_distance
    }
}

/// Replaces `planned` by the zero action while any interferer occupies the
/// stop corridor of the planned motion.
pub fn wait_and_move(
    planned: Action,
    pose: &Pose,
    interferers: &[Point],
    corridor: &Corridor,
) -> Action {
    if interferers
        .iter()
        .any(|&q| corridor.contains(pose, planned.u_v, q))
    {
        Action::ZERO
    } else {
        planned
    }
}

/// Steers straight at `target`, stopping `stop` short of it: turn toward the
/// target and drive with the speed scaled by the heading alignment.
pub fn pursue(pose: &Pose, target: Point, stop: f64, limits: &KinematicLimits, dt: f64) -> Action {
    let to = target - pose.position();
    let d = to.norm();
    if d <= stop {
        return Action::ZERO;
    }
    let alpha = normalize_angle(to.y.atan2(to.x) - pose.heading);
    let u_omega = clamp_unit(alpha / (limits.omega_max * dt));
    let u_v = clamp_unit((d - stop) / (limits.v_max * dt)) * alpha.cos().max(0.0);
    Action::new(u_v, u_omega)
}

/// Nearest undocked exhausted worker to each station (lowest index on ties).
pub fn nearest_exhausted(
    state: &WorldState,
    exhausted: impl Fn(usize) -> bool,
) -> Vec<Option<usize>> {
    state
        .stations
        .iter()
        .map(|s| {
            let here = s.pose.position();
            let mut best: Option<(f64, usize)> = None;
            for (i, w) in state.workers.iter().enumerate() {
                if w.docked_to.is_some() || !exhausted(i) {
                    continue;
                }
                let d = w.pose.position().distance(here);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, i));
                }
            }
            best.map(|(_, i)| i)
        })
        .collect()
}

/// Station heuristic: pursue the nearest exhausted worker, hold otherwise.
pub fn station_nearest_exhausted(
    state: &WorldState,
    exhausted: impl Fn(usize) -> bool,
    stop: f64,
    limits: &KinematicLimits,
    dt: f64,
) -> Vec<Action> {
    nearest_exhausted(state, exhausted)
        .into_iter()
        .zip(&state.stations)
        .map(|(target, s)| match target {
            Some(i) => pursue(&s.pose, state.workers[i].pose.position(), stop, limits, dt),
            None => Action::ZERO,
        })
        .collect()
}
