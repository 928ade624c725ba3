//! Pairwise disc collision detection between robots, interferers and obstacles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::world::Point;

/// Anything that can take part in a collision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Entity {
    Worker(usize),
    Station(usize),
    Interferer(usize),
    /// Static obstacles and the area boundary.
    Obstacle,
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Worker(i) => write!(f, "w{i}"),
            Entity::Station(i) => write!(f, "s{i}"),
            Entity::Interferer(i) => write!(f, "i{i}"),
            Entity::Obstacle => f.write_str("obstacle"),
        }
    }
}

impl FromStr for Entity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "obstacle" {
            return Ok(Entity::Obstacle);
        }
        let bad = || format!("unknown entity `{s}`");
        let (tag, num) = s.split_at_checked(1).ok_or_else(bad)?;
        let i: usize = num.parse().map_err(|_| bad())?;
        match tag {
            "w" => Ok(Entity::Worker(i)),
            "s" => Ok(Entity::Station(i)),
            "i" => Ok(Entity::Interferer(i)),
            _ => Err(bad()),
        }
    }
}

impl From<Entity> for String {
    fn from(e: Entity) -> Self {
        e.to_string()
    }
}

impl TryFrom<String> for Entity {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A disc body taking part in collision checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Body {
    pub entity: Entity,
    pub center: Point,
    pub radius: f64,
    /// Station a worker is docked to.
    pub docked_to: Option<usize>,
}

fn exempt(a: &Body, b: &Body) -> bool {
    match (a.entity, b.entity) {
        (Entity::Interferer(_), Entity::Interferer(_)) => true,
        (Entity::Worker(_), Entity::Station(j)) => a.docked_to == Some(j),
        (Entity::Station(j), Entity::Worker(_)) => b.docked_to == Some(j),
        (Entity::Worker(_), Entity::Worker(_)) => {
            a.docked_to.is_some() && a.docked_to == b.docked_to
        }
        _ => false,
    }
}

/// All colliding pairs, sorted. Bodies collide iff their center distance is
/// strictly below the radius sum. `touches_obstacle` reports static contact
/// for robots (interferers never report obstacle contact: they reflect).
pub fn detect_collisions(
    bodies: &[Body],
    touches_obstacle: impl Fn(&Body) -> bool,
) -> Vec<(Entity, Entity)> {
    let mut out = Vec::new();
    for (i, a) in bodies.iter().enumerate() {
        for b in &bodies[i + 1..] {
            if exempt(a, b) {
                continue;
            }
            let reach = a.radius + b.radius;
            if a.center.distance_sq(b.center) < reach * reach {
                let (x, y) = if a.entity <= b.entity {
                    (a.entity, b.entity)
                } else {
                    (b.entity, a.entity)
                };
                out.push((x, y));
            }
        }
        if !matches!(a.entity, Entity::Interferer(_)) && touches_obstacle(a) {
            out.push((a.entity, Entity::Obstacle));
        }
    }
    out.sort();
    out
}
