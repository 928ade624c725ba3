//! Decision layer: the policy interface, the three classical baselines and
//! the controllers that turn their plans into per-step actions.

pub mod bcd;
pub mod control;
pub mod executor;
pub mod kmeans;
pub mod nav;
pub mod plan;
pub mod stc;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coverage::CoverageGrid;
use crate::dynamics::{Action, WorldState};
use crate::error::{Error, Result};
use crate::observation::{observe_all, ObservationBundle, Role};
use crate::world::Scenario;

pub use executor::TeamController;
pub use plan::{CoveragePlan, NavContext, PlanItem, StationLeg};

/// Read-only view of the world handed to controllers each step.
#[derive(Clone, Copy)]
pub struct Snapshot<'a> {
    pub scenario: &'a Scenario,
    pub state: &'a WorldState,
    pub coverage: &'a CoverageGrid,
}

/// Produces the joint action (workers first, then stations) for one step.
pub trait Controller {
    fn actions(&mut self, snap: &Snapshot<'_>) -> Result<Vec<Action>>;

    /// Action source of each agent at the last step was a wait-and-move
    /// hold. Controllers without the guard report nothing.
    fn waiting(&self) -> Vec<bool> {
        Vec::new()
    }
}

/// Decentralized per-agent policy acting on its own observation.
pub trait Policy {
    fn role(&self) -> Role;
    fn act(&mut self, obs: &ObservationBundle, agent: usize) -> Action;
}

/// Drives every worker with one policy and every station with another.
pub struct RolePolicies {
    pub worker: Box<dyn Policy>,
    pub station: Box<dyn Policy>,
}

impl RolePolicies {
    pub fn new(worker: Box<dyn Policy>, station: Box<dyn Policy>) -> Result<Self> {
        if worker.role() != Role::Worker || station.role() != Role::Station {
            return Err(Error::invalid("policy roles do not match the roster"));
        }
        Ok(Self { worker, station })
    }
}

impl Controller for RolePolicies {
    fn actions(&mut self, snap: &Snapshot<'_>) -> Result<Vec<Action>> {
        let bundles = observe_all(snap.scenario, snap.state, snap.coverage);
        Ok(bundles
            .iter()
            .enumerate()
            .map(|(a, obs)| match obs.role {
                Role::Worker => self.worker.act(obs, a),
                Role::Station => self.station.act(obs, a),
            })
            .collect())
    }
}

/// Uniform random actions in `[-1, 1]²`; a scripted stand-in for learned
/// policies.
pub struct RandomPolicy {
    role: Role,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(role: Role, seed: u64) -> Self {
        Self {
            role,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomPolicy {
    fn role(&self) -> Role {
        self.role
    }

    fn act(&mut self, _obs: &ObservationBundle, _agent: usize) -> Action {
        Action::new(
            self.rng.random_range(-1.0..=1.0),
            self.rng.random_range(-1.0..=1.0),
        )
    }
}

/// Controller replaying a fixed script; the last action repeats.
pub struct Scripted {
    pub script: Vec<Vec<Action>>,
    t: usize,
}

impl Scripted {
    pub fn new(script: Vec<Vec<Action>>) -> Self {
        Self { script, t: 0 }
    }
}

impl Controller for Scripted {
    fn actions(&mut self, snap: &Snapshot<'_>) -> Result<Vec<Action>> {
        let n = snap.state.num_agents();
        let row = self
            .script
            .get(self.t)
            .or(self.script.last())
            .cloned()
            .unwrap_or_else(|| vec![Action::ZERO; n]);
        self.t += 1;
        Ok(row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    MobileBcd,
    StaticMstc,
    MobileMstc,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [
        PlannerKind::MobileBcd,
        PlannerKind::StaticMstc,
        PlannerKind::MobileMstc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::MobileBcd => "mobile-bcd",
            PlannerKind::StaticMstc => "static-mstc",
            PlannerKind::MobileMstc => "mobile-mstc",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownPlanner(s.to_string()))
    }
}

/// Builds the plan for `kind` and wraps it in an executing controller.
pub fn make_controller(
    kind: PlannerKind,
    scenario: &Scenario,
    seed: u64,
) -> Result<TeamController> {
    let ctx = NavContext::new(scenario)?;
    let plan = match kind {
        PlannerKind::MobileBcd => plan::mobile_bcd_plan(scenario, &ctx),
        PlannerKind::StaticMstc => plan::static_mstc_star(scenario, &ctx)?,
        PlannerKind::MobileMstc => plan::mobile_mstc_star(scenario, &ctx, seed)?,
    };
    Ok(TeamController::new(kind, scenario, ctx, plan))
}
