//! Bundled scenarios: a star, a corridor and two campus layouts.
//!
//! Map silhouettes are approximations: the star and corridor shapes and the
//! campus building layout are hand-drawn. Area size, cover radius and team
//! sizes are the intended ones.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::dynamics::{EnergyParams, InterfererParams};
use crate::error::{Error, Result};
use crate::observation::ObservationParams;
use crate::rewards::RewardParams;
use crate::world::{
    rasterize, Bounds, KinematicLimits, Point, Polygon, Pose, RobotGroup, Robots, Scenario,
};

pub const BUILTIN_NAMES: [&str; 4] = ["star", "corridor", "cuhksz-1", "cuhksz-2"];

/// Obstacles whose complement is a five-pointed star centered at `(cx, cy)`.
/// Each obstacle is the wedge between two adjacent star tips, extended far
/// outward along the tip rays.
pub fn star_obstacles(cx: f64, cy: f64, r_out: f64, r_in: f64) -> Vec<Polygon> {
    let c = Point::new(cx, cy);
    let far = 4.0 * r_out;
    let at = |r: f64, a: f64| c + Point::new(a.cos(), a.sin()) * r;
    let step = 2.0 * PI / 5.0;
    (0..5)
        .map(|i| {
            let a0 = FRAC_PI_2 + step * i as f64;
            let a1 = a0 + step;
            Polygon::new(vec![
                at(r_out, a0),
                at(r_in, a0 + step / 2.0),
                at(r_out, a1),
                at(far, a1),
                at(far, a0),
            ])
        })
        .collect()
}

fn worker_limits(cover_radius: f64) -> KinematicLimits {
    KinematicLimits {
        v_max: 1.0,
        omega_max: 2.0,
        body_radius: 0.25,
        perception_range: 10.0,
        communication_range: 30.0,
        cover_radius: Some(cover_radius),
    }
}

fn station_limits() -> KinematicLimits {
    KinematicLimits {
        body_radius: 0.35,
        cover_radius: None,
        ..worker_limits(1.0)
    }
}

struct Layout {
    name: &'static str,
    width: f64,
    height: f64,
    cover_radius: f64,
    obstacles: Vec<Polygon>,
    workers: Vec<Pose>,
    stations: Vec<Pose>,
    interferers: usize,
    /// Steps a full charge lasts.
    charge_steps: f64,
}

fn build(layout: Layout) -> Scenario {
    let capacity = 100.0;
    let e_discharge = capacity / layout.charge_steps;
    let m = layout.workers.len();
    let mut s = Scenario {
        name: layout.name.into(),
        bounds: Bounds {
            min: Point::ORIGIN,
            max: Point::new(layout.width, layout.height),
            resolution: 1.0,
        },
        obstacles: layout.obstacles,
        robots: Robots {
            workers: RobotGroup {
                limits: worker_limits(layout.cover_radius),
                poses: layout.workers,
            },
            stations: RobotGroup {
                limits: station_limits(),
                poses: layout.stations,
            },
        },
        energy: EnergyParams {
            e_discharge,
            e_charge: 10.0 * e_discharge,
            ..EnergyParams::with_capacity(capacity)
        },
        reward: RewardParams::default(),
        observation: ObservationParams::default(),
        interferer: InterfererParams {
            count: layout.interferers,
            ..InterfererParams::default()
        },
        dt: 1.0,
        max_steps: 1,
        seed: 0,
    };
    s.max_steps = step_budget(&s, m);
    s
}

/// Twenty times the steps `m` workers need to sweep every free cell once
/// with lanes of width `2·cover_radius` at full speed.
pub fn step_budget(s: &Scenario, m: usize) -> u64 {
    // Builtin geometry always rasterizes to a non-empty grid.
    let free = rasterize(s).map(|g| g.free_count()).unwrap_or(1) as f64;
    let res = s.bounds.resolution;
    let throughput =
        m as f64 * 2.0 * s.cover_radius() * s.worker_limits().v_max * s.dt / (res * res);
    (20.0 * free / throughput).ceil() as u64
}

fn row(x0: f64, y: f64, dx: f64, n: usize) -> Vec<Pose> {
    (0..n)
        .map(|i| Pose::new(x0 + dx * i as f64, y, 0.0))
        .collect()
}

fn star() -> Scenario {
    build(Layout {
        name: "star",
        width: 30.0,
        height: 30.0,
        cover_radius: 4.0,
        obstacles: star_obstacles(15.0, 15.0, 14.0, 7.5),
        workers: vec![Pose::new(13.0, 13.0, 0.0), Pose::new(17.0, 13.0, 0.0)],
        stations: vec![Pose::new(15.0, 15.0, 0.0)],
        interferers: 1,
        charge_steps: 600.0,
    })
}

fn corridor() -> Scenario {
    build(Layout {
        name: "corridor",
        width: 120.0,
        height: 50.0,
        cover_radius: 4.0,
        obstacles: vec![
            Polygon::rectangle(0.0, 38.0, 40.0, 50.0),
            Polygon::rectangle(80.0, 0.0, 120.0, 12.0),
            Polygon::rectangle(28.0, 16.0, 42.0, 27.0),
            Polygon::rectangle(70.0, 24.0, 86.0, 33.0),
            Polygon::rectangle(55.0, 0.0, 58.0, 15.0),
            Polygon::rectangle(55.0, 35.0, 58.0, 50.0),
        ],
        workers: row(3.0, 3.0, 3.0, 3),
        stations: vec![Pose::new(6.0, 7.0, 0.0)],
        interferers: 6,
        charge_steps: 600.0,
    })
}

fn campus_buildings() -> Vec<Polygon> {
    [
        (20.0, 10.0, 40.0, 25.0),
        (20.0, 35.0, 45.0, 50.0),
        (55.0, 5.0, 70.0, 20.0),
        (60.0, 30.0, 80.0, 55.0),
        (90.0, 10.0, 115.0, 22.0),
        (95.0, 32.0, 110.0, 45.0),
        (125.0, 5.0, 140.0, 25.0),
        (125.0, 38.0, 150.0, 52.0),
        (155.0, 15.0, 170.0, 30.0),
        (160.0, 40.0, 175.0, 55.0),
    ]
    .iter()
    .map(|&(x0, y0, x1, y1)| Polygon::rectangle(x0, y0, x1, y1))
    .collect()
}

fn cuhksz_1() -> Scenario {
    build(Layout {
        name: "cuhksz-1",
        width: 180.0,
        height: 60.0,
        cover_radius: 2.0,
        obstacles: campus_buildings(),
        workers: row(3.0, 3.0, 3.0, 3),
        stations: vec![Pose::new(6.0, 7.0, 0.0)],
        interferers: 6,
        charge_steps: 700.0,
    })
}

fn cuhksz_2() -> Scenario {
    build(Layout {
        name: "cuhksz-2",
        width: 180.0,
        height: 60.0,
        cover_radius: 2.0,
        obstacles: campus_buildings(),
        workers: row(3.0, 3.0, 3.0, 6),
        stations: vec![Pose::new(6.0, 7.0, 0.0), Pose::new(12.0, 7.0, 0.0)],
        interferers: 6,
        charge_steps: 700.0,
    })
}

pub fn load_builtin_scenarios() -> Vec<Scenario> {
    vec![star(), corridor(), cuhksz_1(), cuhksz_2()]
}

pub fn builtin(name: &str) -> Result<Scenario> {
    load_builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::invalid(format!("no builtin scenario named `{name}`")))
}
