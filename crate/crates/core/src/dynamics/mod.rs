//! Per-step state transition: kinematics, interferers, collisions, energy
//! and docking, then coverage sweeps.

pub mod collision;
pub mod energy;
pub mod interferer;
pub mod kinematics;

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use collision::{detect_collisions, Body, Entity};
pub use energy::{docking_target, should_release, update_energy, EnergyParams};
pub use interferer::{
    interferer_rng, interferer_step, spawn_interferers, InterfererParams, InterfererState,
};
pub use kinematics::{integrate_unicycle, scale_action, Action};

use crate::coverage::CoverageGrid;
use crate::error::{Error, Result};
use crate::world::{Point, Pose, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerState {
    pub pose: Pose,
    /// Applied linear velocity in the body frame.
    pub v: f64,
    /// Applied angular velocity.
    pub omega: f64,
    pub energy: f64,
    pub docked_to: Option<usize>,
    /// Position relative to the docking station, kept while docked.
    pub dock_offset: Point,
}

impl WorkerState {
    pub fn released(&self) -> bool {
        self.docked_to.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationState {
    pub pose: Pose,
    pub v: f64,
    pub omega: f64,
}

/// Mutable simulation state for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub t: u64,
    pub workers: Vec<WorkerState>,
    pub stations: Vec<StationState>,
    pub interferers: Vec<InterfererState>,
    rngs: Vec<ChaCha8Rng>,
}

/// Everything that happened during one step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepEvents {
    /// Colliding pairs detected after motion, before reverting.
    pub collisions: Vec<(Entity, Entity)>,
    /// Cells newly credited to each worker.
    pub newly_covered: Vec<usize>,
    pub finished: bool,
    /// `(worker, station)` docking transitions.
    pub docked: Vec<(usize, usize)>,
    /// Workers released after a full recharge.
    pub released: Vec<usize>,
}

impl WorldState {
    /// Initial state: scenario poses, full batteries, interferers spawned
    /// from `seed`.
    pub fn new(scenario: &Scenario, seed: u64) -> Result<Self> {
        let (interferers, rngs) = spawn_interferers(scenario, seed)?;
        let workers = scenario
            .robots
            .workers
            .poses
            .iter()
            .map(|&pose| WorkerState {
                pose,
                v: 0.0,
                omega: 0.0,
                energy: scenario.energy.capacity,
                docked_to: None,
                dock_offset: Point::ORIGIN,
            })
            .collect();
        let stations = scenario
            .robots
            .stations
            .poses
            .iter()
            .map(|&pose| StationState {
                pose,
                v: 0.0,
                omega: 0.0,
            })
            .collect();
        Ok(Self {
            t: 0,
            workers,
            stations,
            interferers,
            rngs,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.workers.len() + self.stations.len()
    }

    /// Energy fraction of worker `i`.
    pub fn energy_fraction(&self, scenario: &Scenario, i: usize) -> f64 {
        scenario.energy.fraction(self.workers[i].energy)
    }

    pub fn bodies(&self, scenario: &Scenario) -> Vec<Body> {
        let wr = scenario.worker_limits().body_radius;
        let sr = scenario.station_limits().body_radius;
        let ir = scenario.interferer.radius;
        let mut out =
            Vec::with_capacity(self.workers.len() + self.stations.len() + self.interferers.len());
        out.extend(self.workers.iter().enumerate().map(|(i, w)| Body {
            entity: Entity::Worker(i),
            center: w.pose.position(),
            radius: wr,
            docked_to: w.docked_to,
        }));
        out.extend(self.stations.iter().enumerate().map(|(j, s)| Body {
            entity: Entity::Station(j),
            center: s.pose.position(),
            radius: sr,
            docked_to: None,
        }));
        out.extend(self.interferers.iter().enumerate().map(|(k, s)| Body {
            entity: Entity::Interferer(k),
            center: s.pose.position(),
            radius: ir,
            docked_to: None,
        }));
        out
    }

    pub fn collisions(&self, scenario: &Scenario) -> Vec<(Entity, Entity)> {
        detect_collisions(&self.bodies(scenario), |b| {
            scenario.disc_blocked(b.center, b.radius)
        })
    }

    fn revert(&mut self, prev: &WorldState, e: Entity, done: &mut BTreeSet<Entity>) {
        if !done.insert(e) {
            return;
        }
        match e {
            Entity::Worker(i) => {
                if let Some(j) = self.workers[i].docked_to {
                    self.revert(prev, Entity::Station(j), done);
                } else {
                    let w = &mut self.workers[i];
                    w.pose = prev.workers[i].pose;
                    w.v = 0.0;
                    w.omega = 0.0;
                }
            }
            Entity::Station(j) => {
                let s = &mut self.stations[j];
                s.pose = prev.stations[j].pose;
                s.v = 0.0;
                s.omega = 0.0;
                for (i, w) in self.workers.iter_mut().enumerate() {
                    if w.docked_to == Some(j) {
                        w.pose = prev.workers[i].pose;
                        done.insert(Entity::Worker(i));
                    }
                }
            }
            Entity::Interferer(k) => {
                self.interferers[k].pose = prev.interferers[k].pose;
            }
            Entity::Obstacle => {}
        }
    }
}

/// Advances the world by one step under the joint action (workers first,
/// then stations).
///
/// Sub-updates run in a fixed order: robot motion, interferer motion,
/// collision detection with revert, energy and docking, coverage sweeps,
/// finish check.
pub fn step(
    scenario: &Scenario,
    state: &mut WorldState,
    coverage: &mut CoverageGrid,
    actions: &[Action],
) -> Result<StepEvents> {
    if coverage.is_finished() {
        return Err(Error::EpisodeFinished);
    }
    if state.t >= scenario.max_steps {
        return Err(Error::HorizonExhausted(scenario.max_steps));
    }
    let m = state.workers.len();
    let expected = state.num_agents();
    if actions.len() != expected {
        return Err(Error::ActionCount {
            expected,
            got: actions.len(),
        });
    }
    let prev = state.clone();
    let dt = scenario.dt;
    let ep = &scenario.energy;

    // (1) robots
    for (w, a) in state.workers.iter_mut().zip(&actions[..m]) {
        let immobile = w.docked_to.is_some() || (!ep.soft_constraint && w.energy <= 0.0);
        if immobile {
            w.v = 0.0;
            w.omega = 0.0;
            continue;
        }
        let (v, omega) = scale_action(*a, scenario.worker_limits());
        w.pose = integrate_unicycle(w.pose, v, omega, dt);
        w.v = v;
        w.omega = omega;
    }
    for (s, a) in state.stations.iter_mut().zip(&actions[m..]) {
        let (v, omega) = scale_action(*a, scenario.station_limits());
        s.pose = integrate_unicycle(s.pose, v, omega, dt);
        s.v = v;
        s.omega = omega;
    }
    for w in state.workers.iter_mut() {
        if let Some(j) = w.docked_to {
            let p = state.stations[j].pose.position() + w.dock_offset;
            w.pose = Pose::new(p.x, p.y, w.pose.heading);
        }
    }

    // (2) interferers
    let ip = scenario.interferer;
    for k in 0..state.interferers.len() {
        let blocked = |p: Point| scenario.disc_blocked(p, ip.radius);
        state.interferers[k] =
            interferer_step(&state.interferers[k], &ip, dt, blocked, &mut state.rngs[k]);
    }

    // (3) collisions; revert until no overlap remains among reverted entities
    let events = state.collisions(scenario);
    let mut reverted = BTreeSet::new();
    let mut pairs = events.clone();
    loop {
        let before = reverted.len();
        for &(a, b) in &pairs {
            state.revert(&prev, a, &mut reverted);
            state.revert(&prev, b, &mut reverted);
        }
        if reverted.len() == before {
            break;
        }
        pairs = state.collisions(scenario);
    }

    // (4) energy and docking
    let mut out = StepEvents {
        collisions: events,
        newly_covered: vec![0; m],
        ..StepEvents::default()
    };
    for i in 0..m {
        let w = state.workers[i];
        let here = w.pose.position();
        if w.docked_to.is_none() {
            let dists = state
                .stations
                .iter()
                .map(|s| s.pose.position().distance(here));
            if let Some(j) = docking_target(w.energy, dists, ep) {
                let wm = &mut state.workers[i];
                wm.docked_to = Some(j);
                wm.dock_offset = here - state.stations[j].pose.position();
                wm.v = 0.0;
                wm.omega = 0.0;
                out.docked.push((i, j));
            }
        }
        let w = &mut state.workers[i];
        let dist = match w.docked_to {
            Some(j) => state.stations[j].pose.position().distance(here),
            None => f64::INFINITY,
        };
        w.energy = update_energy(w.energy, dist, w.docked_to.is_some(), ep);
        if w.docked_to.is_some() && should_release(w.energy, ep) {
            w.energy = ep.capacity;
            w.docked_to = None;
            w.dock_offset = Point::ORIGIN;
            out.released.push(i);
        }
    }

    // (5) coverage
    let radius = scenario.cover_radius();
    for i in 0..m {
        let w = &state.workers[i];
        if w.released() && w.energy > 0.0 {
            out.newly_covered[i] = coverage.sweep(i, w.pose.position(), radius);
        }
    }

    // (6) finish
    out.finished = coverage.is_finished();
    state.t += 1;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{rasterize, Polygon};
    use std::sync::Arc;

    fn setup(s: &Scenario) -> (WorldState, CoverageGrid) {
        let grid = Arc::new(rasterize(s).unwrap());
        (
            WorldState::new(s, s.seed).unwrap(),
            CoverageGrid::new(grid, s.num_workers()),
        )
    }

    #[test]
    fn zero_actions_only_discharge() {
        let s = Scenario::minimal(20.0, 20.0);
        let (mut st, mut cov) = setup(&s);
        let before = st.clone();
        step(&s, &mut st, &mut cov, &[Action::ZERO; 2]).unwrap();
        assert_eq!(st.workers[0].pose, before.workers[0].pose);
        assert_eq!(st.stations[0].pose, before.stations[0].pose);
        assert_eq!(
            st.workers[0].energy,
            s.energy.capacity - s.energy.e_discharge
        );
        assert_eq!(st.t, 1);
    }

    #[test]
    fn empty_worker_cannot_move() {
        let s = Scenario::minimal(20.0, 20.0);
        let (mut st, mut cov) = setup(&s);
        st.workers[0].energy = 0.0;
        let before = st.workers[0].pose;
        step(
            &s,
            &mut st,
            &mut cov,
            &[Action::new(1.0, 0.0), Action::ZERO],
        )
        .unwrap();
        assert_eq!(st.workers[0].pose, before);
        assert_eq!(st.workers[0].energy, 0.0);
    }

    #[test]
    fn huge_cover_radius_finishes_in_one_step() {
        let mut s = Scenario::minimal(8.0, 6.0);
        s.robots.workers.limits.cover_radius = Some(100.0);
        let (mut st, mut cov) = setup(&s);
        let ev = step(&s, &mut st, &mut cov, &[Action::ZERO; 2]).unwrap();
        assert!(ev.finished);
        assert_eq!(ev.newly_covered, vec![48]);
        assert!(matches!(
            step(&s, &mut st, &mut cov, &[Action::ZERO; 2]),
            Err(Error::EpisodeFinished)
        ));
    }

    #[test]
    fn wrong_action_count_is_rejected() {
        let s = Scenario::minimal(10.0, 10.0);
        let (mut st, mut cov) = setup(&s);
        assert!(matches!(
            step(&s, &mut st, &mut cov, &[Action::ZERO]),
            Err(Error::ActionCount {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn horizon_is_enforced() {
        let mut s = Scenario::minimal(10.0, 10.0);
        s.max_steps = 1;
        let (mut st, mut cov) = setup(&s);
        step(&s, &mut st, &mut cov, &[Action::ZERO; 2]).unwrap();
        assert!(matches!(
            step(&s, &mut st, &mut cov, &[Action::ZERO; 2]),
            Err(Error::HorizonExhausted(1))
        ));
    }

    #[test]
    fn driving_into_a_wall_reverts_pose() {
        let mut s = Scenario::minimal(10.0, 10.0);
        s.obstacles.push(Polygon::rectangle(3.3, 0.0, 4.0, 10.0));
        s.robots.workers.poses[0] = Pose::new(2.5, 5.0, 0.0);
        s.robots.stations.poses[0] = Pose::new(8.0, 5.0, 0.0);
        let (mut st, mut cov) = setup(&s);
        let ev = step(
            &s,
            &mut st,
            &mut cov,
            &[Action::new(1.0, 0.0), Action::ZERO],
        )
        .unwrap();
        assert_eq!(ev.collisions, vec![(Entity::Worker(0), Entity::Obstacle)]);
        assert_eq!(st.workers[0].pose, Pose::new(2.5, 5.0, 0.0));
    }

    #[test]
    fn exhausted_worker_docks_charges_and_is_released() {
        let mut s = Scenario::minimal(10.0, 10.0);
        s.robots.workers.poses[0] = Pose::new(4.0, 5.0, 0.0);
        s.robots.stations.poses[0] = Pose::new(5.0, 5.0, 0.0);
        let (mut st, mut cov) = setup(&s);
        st.workers[0].energy = 10.0;
        let ev = step(&s, &mut st, &mut cov, &[Action::ZERO; 2]).unwrap();
        assert_eq!(ev.docked, vec![(0, 0)]);
        assert_eq!(st.workers[0].energy, 10.0 + s.energy.e_charge);
        // station drives away carrying the worker
        step(
            &s,
            &mut st,
            &mut cov,
            &[Action::new(1.0, 1.0), Action::new(0.5, 0.0)],
        )
        .unwrap();
        let off = st.workers[0].pose.position() - st.stations[0].pose.position();
        assert!((off.x + 1.0).abs() < 1e-12 && off.y.abs() < 1e-12);
        let mut released = false;
        for _ in 0..200 {
            let ev = step(&s, &mut st, &mut cov, &[Action::ZERO; 2]).unwrap();
            if !ev.released.is_empty() {
                released = true;
                break;
            }
        }
        assert!(released);
        assert_eq!(st.workers[0].energy, s.energy.capacity);
        assert!(st.workers[0].released());
    }

    #[test]
    fn identical_inputs_give_identical_states() {
        let mut s = Scenario::minimal(20.0, 20.0);
        s.interferer.count = 4;
        let run = || {
            let (mut st, mut cov) = setup(&s);
            let mut states = vec![];
            for t in 0..60 {
                let a = Action::new(((t % 7) as f64 - 3.0) / 3.0, ((t % 5) as f64 - 2.0) / 2.0);
                step(&s, &mut st, &mut cov, &[a, a]).unwrap();
                states.push(st.clone());
            }
            states
        };
        assert_eq!(run(), run());
    }
}
