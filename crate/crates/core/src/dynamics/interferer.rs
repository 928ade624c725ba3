//! Random straight-then-rotate motion of uncontrolled interferers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::world::{Point, Pose, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfererParams {
    pub count: usize,
    /// Straight-line speed (length/second).
    pub speed: f64,
    /// Moving steps per phase; a rotation step follows each phase.
    pub period: u32,
    /// Body radius.
    pub radius: f64,
}

impl Default for InterfererParams {
    fn default() -> Self {
        Self {
            count: 1,
            speed: 0.5,
            period: 10,
            radius: 0.3,
        }
    }
}

impl InterfererParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return Err(Error::invalid("interferer speed must be non-negative"));
        }
        if self.period == 0 {
            return Err(Error::invalid("interferer period must be at least 1"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid("interferer radius must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfererState {
    pub pose: Pose,
    /// Moving steps left in the current phase; 0 means rotate next.
    pub phase_timer: u32,
}

/// Independent generator for interferer `k`, so that interferers never
/// perturb each other's random streams.
pub fn interferer_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64 + 1);
    rng
}

/// Samples a free start pose for every interferer, away from all robots.
pub fn spawn_interferers(
    scenario: &Scenario,
    seed: u64,
) -> Result<(Vec<InterfererState>, Vec<ChaCha8Rng>)> {
    let p = &scenario.interferer;
    let rect = scenario.bounds.rect();
    let robots: Vec<(Point, f64)> = scenario
        .robots
        .workers
        .poses
        .iter()
        .map(|q| (q.position(), scenario.worker_limits().body_radius))
        .chain(
            scenario
                .robots
                .stations
                .poses
                .iter()
                .map(|q| (q.position(), scenario.station_limits().body_radius)),
        )
        .collect();
    let mut states = Vec::with_capacity(p.count);
    let mut rngs = Vec::with_capacity(p.count);
    for k in 0..p.count {
        let mut rng = interferer_rng(seed, k);
        let mut placed = None;
        for _ in 0..100_000 {
            let c = Point::new(
                rng.random_range(rect.min.x..rect.max.x),
                rng.random_range(rect.min.y..rect.max.y),
            );
            if scenario.disc_blocked(c, p.radius) {
                continue;
            }
            if robots
                .iter()
                .any(|&(q, r)| q.distance(c) < r + p.radius + 1.0)
            {
                continue;
            }
            let heading = rng.random_range(-PI..PI);
            placed = Some(Pose::new(c.x, c.y, heading));
            break;
        }
        let pose = placed.ok_or_else(|| Error::invalid("no free space to place interferers"))?;
        states.push(InterfererState {
            pose,
            phase_timer: p.period,
        });
        rngs.push(rng);
    }
    Ok((states, rngs))
}

/// One step of interferer motion.
///
/// While the phase runs the interferer moves `speed·dt` along its heading.
/// If the move would touch an obstacle or leave the bounds, the offending
/// velocity component is reversed (x, then y, then both); when every
/// reflection is blocked it stays put and turns around. At phase end it only
/// rotates by a uniform angle in `[-π, π)` and starts a new phase.
pub fn interferer_step(
    state: &InterfererState,
    params: &InterfererParams,
    dt: f64,
    blocked: impl Fn(Point) -> bool,
    rng: &mut ChaCha8Rng,
) -> InterfererState {
    if state.phase_timer == 0 {
        let turn = rng.random_range(-PI..PI);
        let pose = Pose::new(state.pose.x, state.pose.y, state.pose.heading + turn);
        return InterfererState {
            pose,
            phase_timer: params.period,
        };
    }
    let here = state.pose.position();
    let vel = state.pose.direction() * (params.speed * dt);
    let candidates = [
        vel,
        Point::new(-vel.x, vel.y),
        Point::new(vel.x, -vel.y),
        Point::new(-vel.x, -vel.y),
    ];
    let mut pose = Pose::new(here.x, here.y, state.pose.heading + PI);
    for d in candidates {
        let next = here + d;
        if !blocked(next) {
            let heading = if d == vel {
                state.pose.heading
            } else {
                d.y.atan2(d.x)
            };
            pose = Pose::new(next.x, next.y, heading);
            break;
        }
    }
    InterfererState {
        pose,
        phase_timer: state.phase_timer - 1,
    }
}
