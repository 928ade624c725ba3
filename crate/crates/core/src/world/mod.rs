//! Immutable scenario description, planar geometry and rasterization.

pub mod geometry;
pub mod grid;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use geometry::{
    ego_to_world, normalize_angle, point_in_free_space, world_to_ego, Point, Polygon, Pose, Rect,
};
pub use grid::{rasterize, CellGrid};

use crate::dynamics::{EnergyParams, InterfererParams};
use crate::error::{Error, Result};
use crate::observation::ObservationParams;
use crate::rewards::RewardParams;

/// Target area rectangle plus the rasterization resolution (meters per cell).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
    pub resolution: f64,
}

impl Bounds {
    pub fn rect(&self) -> Rect {
        Rect::new(self.min, self.max)
    }
}

/// Per-role motion and sensing limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    pub v_max: f64,
    pub omega_max: f64,
    pub body_radius: f64,
    pub perception_range: f64,
    pub communication_range: f64,
    /// Radius of the disc swept by a working worker. Workers only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover_radius: Option<f64>,
}

impl KinematicLimits {
    fn validate(&self, role: &str) -> Result<()> {
        let positive = [
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
            ("body_radius", self.body_radius),
            ("perception_range", self.perception_range),
            ("communication_range", self.communication_range),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{role} {name} must be positive")));
            }
        }
        if self.communication_range < self.perception_range {
            return Err(Error::invalid(format!(
                "{role} communication_range must be >= perception_range"
            )));
        }
        if let Some(r) = self.cover_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!(
                    "{role} cover_radius must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// A homogeneous group of robots: shared limits, one initial pose each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotGroup {
    pub limits: KinematicLimits,
    pub poses: Vec<Pose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Robots {
    pub workers: RobotGroup,
    pub stations: RobotGroup,
}

/// Complete, immutable description of one coverage task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub bounds: Bounds,
    pub obstacles: Vec<Polygon>,
    pub robots: Robots,
    pub energy: EnergyParams,
    pub reward: RewardParams,
    pub observation: ObservationParams,
    pub interferer: InterfererParams,
    pub dt: f64,
    pub max_steps: u64,
    pub seed: u64,
}

impl Scenario {
    pub fn num_workers(&self) -> usize {
        self.robots.workers.poses.len()
    }

    pub fn num_stations(&self) -> usize {
        self.robots.stations.poses.len()
    }

    pub fn num_interferers(&self) -> usize {
        self.interferer.count
    }

    pub fn worker_limits(&self) -> &KinematicLimits {
        &self.robots.workers.limits
    }

    pub fn station_limits(&self) -> &KinematicLimits {
        &self.robots.stations.limits
    }

    /// Worker cover radius (validated to exist).
    pub fn cover_radius(&self) -> f64 {
        self.robots.workers.limits.cover_radius.unwrap_or(0.0)
    }

    pub fn is_free(&self, p: Point) -> bool {
        point_in_free_space(&self.bounds.rect(), &self.obstacles, p)
    }

    /// True when a disc of `radius` at `c` touches an obstacle or leaves the bounds.
    pub fn disc_blocked(&self, c: Point, radius: f64) -> bool {
        self.bounds.rect().disc_exits(c, radius)
            || self.obstacles.iter().any(|o| o.intersects_disc(c, radius))
    }

    /// True when a disc of `radius` can slide along segment `[a, b]` without
    /// touching an obstacle or leaving the bounds.
    pub fn segment_clear(&self, a: Point, b: Point, radius: f64) -> bool {
        let rect = self.bounds.rect();
        if rect.disc_exits(a, radius) || rect.disc_exits(b, radius) {
            return false;
        }
        let lo = Point::new(a.x.min(b.x) - radius, a.y.min(b.y) - radius);
        let hi = Point::new(a.x.max(b.x) + radius, a.y.max(b.y) + radius);
        self.obstacles.iter().all(|o| {
            let Some(bb) = o.bounding_box() else {
                return true;
            };
            let apart = bb.max.x < lo.x || bb.min.x > hi.x || bb.max.y < lo.y || bb.min.y > hi.y;
            apart || o.segment_distance(a, b) >= radius
        })
    }

    /// Checks every documented invariant.
    pub fn validate(&self) -> Result<()> {
        if self.num_workers() < 1 {
            return Err(Error::invalid("at least one worker is required"));
        }
        if self.num_stations() < 1 {
            return Err(Error::invalid("at least one station is required"));
        }
        let b = &self.bounds;
        if !(b.max.x > b.min.x && b.max.y > b.min.y) {
            return Err(Error::invalid("bounds must have positive extent"));
        }
        if !(b.resolution > 0.0 && b.resolution.is_finite()) {
            return Err(Error::invalid("raster resolution must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be at least 1"));
        }
        for (i, poly) in self.obstacles.iter().enumerate() {
            if !poly.is_simple() {
                return Err(Error::invalid(format!(
                    "obstacle {i} is not a simple polygon"
                )));
            }
        }
        self.robots.workers.limits.validate("worker")?;
        self.robots.stations.limits.validate("station")?;
        if self.robots.workers.limits.cover_radius.is_none() {
            return Err(Error::invalid("worker cover_radius is required"));
        }
        let groups = [
            ("worker", &self.robots.workers),
            ("station", &self.robots.stations),
        ];
        for (role, group) in groups {
            for (i, pose) in group.poses.iter().enumerate() {
                if !(pose.x.is_finite() && pose.y.is_finite() && pose.heading.is_finite()) {
                    return Err(Error::invalid(format!("{role} {i} pose is not finite")));
                }
                if !self.is_free(pose.position()) {
                    return Err(Error::invalid(format!(
                        "{role} {i} starts outside the free space"
                    )));
                }
            }
        }
        self.energy.validate()?;
        self.reward.validate()?;
        self.observation
            .validate(&self.robots.workers.limits, &self.robots.stations.limits)?;
        self.interferer.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        // Serializing plain data structs cannot fail.
        serde_json::to_string_pretty(self).expect("scenario serializes") + "\n"
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Open `width × height` field with one worker and one station near the
    /// middle, default parameters and no interferers. Handy for tests.
    pub fn minimal(width: f64, height: f64) -> Self {
        let c = Point::new(width / 2.0, height / 2.0);
        let worker_limits = KinematicLimits {
            v_max: 1.0,
            omega_max: 2.0,
            body_radius: 0.25,
            perception_range: 10.0,
            communication_range: 30.0,
            cover_radius: Some(1.0),
        };
        let station_limits = KinematicLimits {
            body_radius: 0.35,
            cover_radius: None,
            ..worker_limits
        };
        Scenario {
            name: "minimal".into(),
            bounds: Bounds {
                min: Point::ORIGIN,
                max: Point::new(width, height),
                resolution: 1.0,
            },
            obstacles: vec![],
            robots: Robots {
                workers: RobotGroup {
                    limits: worker_limits,
                    poses: vec![Pose::new(c.x - width / 4.0, c.y, 0.0)],
                },
                stations: RobotGroup {
                    limits: station_limits,
                    poses: vec![Pose::new(c.x, c.y, 0.0)],
                },
            },
            energy: EnergyParams::with_capacity(100.0),
            reward: RewardParams::default(),
            observation: ObservationParams::default(),
            interferer: InterfererParams {
                count: 0,
                ..InterfererParams::default()
            },
            dt: 1.0,
            max_steps: 1000,
            seed: 0,
        }
    }
}
