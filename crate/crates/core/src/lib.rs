//! Worker-station multi-robot coverage simulator, baseline planners and
//! benchmark harness.

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coverage;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod observation;
pub mod planners;
pub mod rewards;
pub mod world;

pub use coverage::{CoverageGrid, CoverageSnapshot};
pub use dynamics::{step, Action, EnergyParams, Entity, InterfererParams, StepEvents, WorldState};
pub use error::{Error, Result};
pub use observation::{ObservationBundle, ObservationParams, Role};
pub use rewards::{RewardBreakdown, RewardParams};
pub use world::{CellGrid, KinematicLimits, Point, Polygon, Pose, Scenario};
