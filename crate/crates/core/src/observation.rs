//! Per-agent observations: a zero-range state vector plus ego-centric binary
//! object images at perception and communication range.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::coverage::CoverageGrid;
use crate::dynamics::WorldState;
use crate::error::{Error, Result};
use crate::world::{world_to_ego, KinematicLimits, Point, Pose, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Worker,
    Station,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationParams {
    /// Side length in pixels of the perception image.
    pub perception_size: usize,
    /// Side length in pixels of the communication image.
    pub comm_size: usize,
    /// Perception pixel size; derived from the role's range when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_perc: Option<f64>,
    /// Communication pixel size; derived from the role's range when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_comm: Option<f64>,
}

impl Default for ObservationParams {
    fn default() -> Self {
        Self {
            perception_size: 20,
            comm_size: 30,
            m_perc: None,
            m_comm: None,
        }
    }
}

impl ObservationParams {
    /// Pixel sizes `(m_perc, m_comm)` used for a role with these limits.
    pub fn resolutions(&self, limits: &KinematicLimits) -> (f64, f64) {
        let perc = self
            .m_perc
            .unwrap_or(2.0 * limits.perception_range / self.perception_size as f64);
        let comm = self
            .m_comm
            .unwrap_or(2.0 * limits.communication_range / self.comm_size as f64);
        (perc, comm)
    }

    pub fn validate(&self, workers: &KinematicLimits, stations: &KinematicLimits) -> Result<()> {
        if self.perception_size == 0 || self.comm_size == 0 {
            return Err(Error::invalid("observation image sizes must be positive"));
        }
        for limits in [workers, stations] {
            let (perc, comm) = self.resolutions(limits);
            if !(perc > 0.0 && perc.is_finite() && comm > 0.0 && comm.is_finite()) {
                return Err(Error::invalid("observation resolutions must be positive"));
            }
            if comm < perc {
                return Err(Error::invalid("m_comm must be at least m_perc"));
            }
        }
        Ok(())
    }
}

/// Channel-major binary image, rows indexed by ego-frame y, columns by x.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryImage {
    pub size: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn zeros(size: usize, channels: usize) -> Self {
        Self {
            size,
            channels,
            pixels: vec![0; size * size * channels],
        }
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> u8 {
        self.pixels[(channel * self.size + row) * self.size + col]
    }

    fn set(&mut self, channel: usize, row: usize, col: usize) {
        self.pixels[(channel * self.size + row) * self.size + col] = 1;
    }

    pub fn channel_count(&self, channel: usize) -> usize {
        let n = self.size * self.size;
        self.pixels[channel * n..(channel + 1) * n]
            .iter()
            .filter(|&&p| p != 0)
            .count()
    }

    /// Bits packed MSB-first in channel-major order.
    pub fn packed(&self) -> Vec<u8> {
        self.pixels
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (k, &b)| acc | ((b & 1) << (7 - k)))
            })
            .collect()
    }
}

/// Pixel `(row, col)` of an ego-frame point, if it falls on the image.
pub fn pixel_of(q: Point, size: usize, resolution: f64) -> Option<(usize, usize)> {
    let half = size as f64 * resolution / 2.0;
    let col = ((q.x + half) / resolution).floor();
    let row = ((q.y + half) / resolution).floor();
    let n = size as f64;
    if col < 0.0 || row < 0.0 || col >= n || row >= n {
        return None;
    }
    Some((row as usize, col as usize))
}

/// Rasterizes per-channel world points into an ego-centric image. Points
/// farther than `range_limit` from the ego are ignored.
pub fn encode_object_image(
    ego: &Pose,
    objects: &[&[Point]],
    size: usize,
    resolution: f64,
    range_limit: f64,
) -> BinaryImage {
    let mut img = BinaryImage::zeros(size, objects.len());
    let origin = ego.position();
    let r_sq = range_limit * range_limit;
    for (c, points) in objects.iter().enumerate() {
        for &p in points.iter() {
            if p.distance_sq(origin) > r_sq {
                continue;
            }
            if let Some((row, col)) = pixel_of(world_to_ego(ego, p), size, resolution) {
                img.set(c, row, col);
            }
        }
    }
    img
}

/// Robot state as seen by the observation encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotView {
    pub pose: Pose,
    pub v: f64,
    pub omega: f64,
    /// Energy fraction (workers only).
    pub p: Option<f64>,
    pub exhausted: bool,
}

/// Geometry-only snapshot of everything an observation may encode.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub workers: Vec<RobotView>,
    pub stations: Vec<RobotView>,
    /// Blocked cell centers and interferer positions.
    pub obstacles: Vec<Point>,
    /// Centers of free cells not yet covered.
    pub uncovered: Vec<Point>,
}

impl Scene {
    pub fn from_world(scenario: &Scenario, state: &WorldState, coverage: &CoverageGrid) -> Self {
        let ep = &scenario.energy;
        let workers = state
            .workers
            .iter()
            .map(|w| RobotView {
                pose: w.pose,
                v: w.v,
                omega: w.omega,
                p: Some(ep.fraction(w.energy)),
                exhausted: ep.is_exhausted(w.energy),
            })
            .collect();
        let stations = state
            .stations
            .iter()
            .map(|s| RobotView {
                pose: s.pose,
                v: s.v,
                omega: s.omega,
                p: None,
                exhausted: false,
            })
            .collect();
        let grid = coverage.grid();
        let mut obstacles: Vec<Point> = (0..grid.len())
            .filter(|&i| !grid.is_free(i))
            .map(|i| grid.center(i))
            .collect();
        obstacles.extend(state.interferers.iter().map(|s| s.pose.position()));
        let uncovered = coverage.uncovered().map(|i| grid.center(i)).collect();
        Self {
            workers,
            stations,
            obstacles,
            uncovered,
        }
    }

    pub fn num_agents(&self) -> usize {
        self.workers.len() + self.stations.len()
    }

    /// Role and role-local index of agent `a` (workers first, then stations).
    pub fn agent(&self, a: usize) -> (Role, usize) {
        if a < self.workers.len() {
            (Role::Worker, a)
        } else {
            (Role::Station, a - self.workers.len())
        }
    }

    /// Applies one rigid motion (rotation about the origin, then translation)
    /// to every entity.
    pub fn transformed(&self, rotation: f64, translation: Point) -> Scene {
        let tp = |p: Point| p.rotated(rotation) + translation;
        let tr = |r: &RobotView| {
            let p = tp(r.pose.position());
            RobotView {
                pose: Pose::new(p.x, p.y, r.pose.heading + rotation),
                ..*r
            }
        };
        Scene {
            workers: self.workers.iter().map(tr).collect(),
            stations: self.stations.iter().map(tr).collect(),
            obstacles: self.obstacles.iter().copied().map(tp).collect(),
            uncovered: self.uncovered.iter().copied().map(tp).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationBundle {
    pub role: Role,
    /// `[x, y, v, ω]`, plus `p` for workers.
    pub zero: Vec<f64>,
    pub perception: BinaryImage,
    pub comm: BinaryImage,
}

pub const WORKER_PERCEPTION_CHANNELS: [&str; 4] = ["worker", "station", "obstacle", "uncovered"];
pub const WORKER_COMM_CHANNELS: [&str; 3] = ["worker", "station", "uncovered"];
pub const STATION_PERCEPTION_CHANNELS: [&str; 3] =
    ["obstacle", "worker_normal", "worker_exhausted"];
pub const STATION_COMM_CHANNELS: [&str; 3] = ["station", "worker_normal", "worker_exhausted"];

impl Role {
    pub fn perception_channels(self) -> &'static [&'static str] {
        match self {
            Role::Worker => &WORKER_PERCEPTION_CHANNELS,
            Role::Station => &STATION_PERCEPTION_CHANNELS,
        }
    }

    pub fn comm_channels(self) -> &'static [&'static str] {
        match self {
            Role::Worker => &WORKER_COMM_CHANNELS,
            Role::Station => &STATION_COMM_CHANNELS,
        }
    }

    pub fn zero_len(self) -> usize {
        match self {
            Role::Worker => 5,
            Role::Station => 4,
        }
    }
}

/// Zero-range vector of one robot.
pub fn encode_zero_range(r: &RobotView) -> Vec<f64> {
    let mut z = vec![r.pose.x, r.pose.y, r.v, r.omega];
    if let Some(p) = r.p {
        z.push(p);
    }
    z
}

fn positions(
    robots: &[RobotView],
    skip: Option<usize>,
    keep: impl Fn(&RobotView) -> bool,
) -> Vec<Point> {
    robots
        .iter()
        .enumerate()
        .filter(|&(i, r)| Some(i) != skip && keep(r))
        .map(|(_, r)| r.pose.position())
        .collect()
}

/// Observation of agent `a` (workers first, then stations).
pub fn observe_scene(
    scene: &Scene,
    params: &ObservationParams,
    worker_limits: &KinematicLimits,
    station_limits: &KinematicLimits,
    a: usize,
) -> ObservationBundle {
    let (role, idx) = scene.agent(a);
    match role {
        Role::Worker => {
            let me = &scene.workers[idx];
            let (m_perc, m_comm) = params.resolutions(worker_limits);
            let workers = positions(&scene.workers, Some(idx), |_| true);
            let stations = positions(&scene.stations, None, |_| true);
            let perception = encode_object_image(
                &me.pose,
                &[&workers, &stations, &scene.obstacles, &scene.uncovered],
                params.perception_size,
                m_perc,
                worker_limits.perception_range,
            );
            let comm = encode_object_image(
                &me.pose,
                &[&workers, &stations, &scene.uncovered],
                params.comm_size,
                m_comm,
                worker_limits.communication_range,
            );
            ObservationBundle {
                role,
                zero: encode_zero_range(me),
                perception,
                comm,
            }
        }
        Role::Station => {
            let me = &scene.stations[idx];
            let (m_perc, m_comm) = params.resolutions(station_limits);
            let normal = positions(&scene.workers, None, |r| !r.exhausted);
            let exhausted = positions(&scene.workers, None, |r| r.exhausted);
            let stations = positions(&scene.stations, Some(idx), |_| true);
            let perception = encode_object_image(
                &me.pose,
                &[&scene.obstacles, &normal, &exhausted],
                params.perception_size,
                m_perc,
                station_limits.perception_range,
            );
            let comm = encode_object_image(
                &me.pose,
                &[&stations, &normal, &exhausted],
                params.comm_size,
                m_comm,
                station_limits.communication_range,
            );
            ObservationBundle {
                role,
                zero: encode_zero_range(me),
                perception,
                comm,
            }
        }
    }
}

/// Observations of every agent in the world.
pub fn observe_all(
    scenario: &Scenario,
    state: &WorldState,
    coverage: &CoverageGrid,
) -> Vec<ObservationBundle> {
    let scene = Scene::from_world(scenario, state, coverage);
    (0..scene.num_agents())
        .map(|a| {
            observe_scene(
                &scene,
                &scenario.observation,
                scenario.worker_limits(),
                scenario.station_limits(),
                a,
            )
        })
        .collect()
}

/// Writes one record per agent: a text header line followed by the packed
/// perception bits and then the packed communication bits.
pub fn write_dump(out: &mut impl Write, t: u64, bundles: &[ObservationBundle]) -> io::Result<()> {
    for (a, b) in bundles.iter().enumerate() {
        let zero: Vec<String> = b.zero.iter().map(|v| format!("{v:?}")).collect();
        writeln!(
            out,
            "t={t} agent={a} role={} perception={}x{}x{}:{} comm={}x{}x{}:{} zero={}",
            match b.role {
                Role::Worker => "worker",
                Role::Station => "station",
            },
            b.perception.size,
            b.perception.size,
            b.perception.channels,
            b.role.perception_channels().join(","),
            b.comm.size,
            b.comm.size,
            b.comm.channels,
            b.role.comm_channels().join(","),
            zero.join(","),
        )?;
        out.write_all(&b.perception.packed())?;
        out.write_all(&b.comm.packed())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn view(x: f64, y: f64, h: f64, p: Option<f64>) -> RobotView {
        RobotView {
            pose: Pose::new(x, y, h),
            v: 0.0,
            omega: 0.0,
            p,
            exhausted: p.is_some_and(|p| p < 0.2),
        }
    }

    fn limits() -> KinematicLimits {
        KinematicLimits {
            v_max: 1.0,
            omega_max: 1.0,
            body_radius: 0.25,
            perception_range: 10.0,
            communication_range: 30.0,
            cover_radius: Some(1.0),
        }
    }

    #[test]
    fn zero_range_layout() {
        assert_eq!(encode_zero_range(&view(0.0, 0.0, 0.0, None)), vec![0.0; 4]);
        let mut w = view(1.0, 2.0, 0.0, Some(0.5));
        w.v = 1.0;
        assert_eq!(encode_zero_range(&w), vec![1.0, 2.0, 1.0, 0.0, 0.5]);
    }

    #[test]
    fn object_image_examples() {
        let ego = Pose::new(5.0, 5.0, 0.0);
        let empty = encode_object_image(&ego, &[&[]], 20, 1.0, 10.0);
        assert!(empty.pixels.iter().all(|&p| p == 0));

        let at_ego = encode_object_image(&ego, &[&[Point::new(5.0, 5.0)]], 20, 1.0, 10.0);
        assert_eq!(at_ego.get(0, 10, 10), 1);
        assert_eq!(at_ego.channel_count(0), 1);

        // heading north: a point 3 units north lies on the ego +x axis
        let ego = Pose::new(5.0, 5.0, FRAC_PI_2);
        let img = encode_object_image(&ego, &[&[Point::new(5.0, 8.0)]], 20, 1.0, 10.0);
        assert_eq!(img.get(0, 10, 13), 1);
    }

    #[test]
    fn station_splits_workers_by_exhaustion() {
        let scene = Scene {
            workers: vec![
                view(7.0, 5.0, 0.0, Some(0.1)),
                view(5.0, 8.0, 0.0, Some(0.9)),
            ],
            stations: vec![view(5.0, 5.0, 0.0, None)],
            obstacles: vec![],
            uncovered: vec![],
        };
        let obs = observe_scene(
            &scene,
            &ObservationParams::default(),
            &limits(),
            &limits(),
            2,
        );
        assert_eq!(obs.role, Role::Station);
        assert_eq!(obs.perception.get(2, 10, 12), 1);
        assert_eq!(obs.perception.get(1, 10, 12), 0);
        assert_eq!(obs.perception.channel_count(1), 1);
        assert_eq!(obs.perception.channel_count(2), 1);
    }

    #[test]
    fn uncovered_cells_beyond_comm_range_are_dropped() {
        let scene = Scene {
            workers: vec![view(0.0, 0.0, 0.0, Some(1.0))],
            stations: vec![view(-100.0, 0.0, 0.0, None)],
            obstacles: vec![],
            uncovered: vec![Point::new(29.9, 0.0), Point::new(30.1, 0.0)],
        };
        let obs = observe_scene(
            &scene,
            &ObservationParams::default(),
            &limits(),
            &limits(),
            0,
        );
        assert_eq!(obs.comm.channel_count(2), 1);
        assert_eq!(obs.comm.get(2, 15, 29), 1);
    }

    #[test]
    fn ego_is_excluded_from_its_own_channel() {
        let scene = Scene {
            workers: vec![view(0.0, 0.0, 0.0, Some(1.0))],
            stations: vec![view(50.0, 0.0, 0.0, None)],
            obstacles: vec![],
            uncovered: vec![],
        };
        let obs = observe_scene(
            &scene,
            &ObservationParams::default(),
            &limits(),
            &limits(),
            0,
        );
        assert!(obs.perception.pixels.iter().all(|&p| p == 0));
        assert!(obs.comm.pixels.iter().all(|&p| p == 0));
    }

    #[test]
    fn packing_is_msb_first() {
        let mut img = BinaryImage::zeros(3, 1);
        img.set(0, 0, 0);
        img.set(0, 2, 2);
        assert_eq!(img.packed(), vec![0b1000_0000, 0b1000_0000]);
    }
}
