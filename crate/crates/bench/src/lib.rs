//! Fixtures shared by the criterion benchmarks.

use std::sync::Arc;

use ws_sim_core::coverage::CoverageGrid;
use ws_sim_core::dynamics::{Action, WorldState};
use ws_sim_core::harness::builtin::builtin;
use ws_sim_core::world::{rasterize, Scenario};

/// A builtin scenario with its initial world and empty coverage.
pub struct Fixture {
    pub scenario: Scenario,
    pub state: WorldState,
    pub coverage: CoverageGrid,
}

impl Fixture {
    /// Panics on unknown names; benchmarks only use the bundled ones.
    pub fn builtin(name: &str, seed: u64) -> Self {
        let scenario = builtin(name).expect("bundled scenario");
        let state = WorldState::new(&scenario, seed).expect("valid start");
        let grid = Arc::new(rasterize(&scenario).expect("rasterizable"));
        let coverage = CoverageGrid::new(grid, scenario.num_workers());
        Self {
            scenario,
            state,
            coverage,
        }
    }

    /// Gentle forward motion with alternating turns for every agent.
    pub fn cruise_actions(&self) -> Vec<Action> {
        let n = self.state.num_agents();
        (0..n)
            .map(|a| Action::new(0.6, if a % 2 == 0 { 0.3 } else { -0.3 }))
            .collect()
    }
}
