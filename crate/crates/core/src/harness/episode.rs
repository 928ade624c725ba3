//! Runs one episode of a controller against the dynamics.

use std::sync::Arc;

use super::metrics::EpisodeMetrics;
use super::trace::{EpisodeTrace, Frame, StepRecord, TraceHeader};
use crate::coverage::CoverageGrid;
use crate::dynamics::{step, WorldState};
use crate::error::Result;
use crate::planners::{make_controller, Controller, PlannerKind, Policy, RolePolicies, Snapshot};
use crate::rewards::shared_reward;
use crate::world::{rasterize, Scenario};

/// Steps until every free cell is covered or the horizon runs out, recording
/// a trace. Deterministic for fixed inputs.
pub fn run_episode(
    scenario: &Scenario,
    controller: &mut dyn Controller,
    seed: u64,
    label: &str,
) -> Result<(EpisodeMetrics, EpisodeTrace)> {
    let grid = Arc::new(rasterize(scenario)?);
    let mut state = WorldState::new(scenario, seed)?;
    let mut coverage = CoverageGrid::new(grid, scenario.num_workers());
    let header = TraceHeader {
        scenario: scenario.name.clone(),
        controller: label.to_string(),
        seed,
        max_steps: scenario.max_steps,
        free_cells: coverage.free_count(),
        gamma: scenario.reward.gamma,
        initial: Frame::capture(&state),
    };
    let mut steps = Vec::new();
    let n = state.num_agents();
    let p_e = scenario.energy.exhausted_threshold;
    while !coverage.is_finished() && state.t < scenario.max_steps {
        let snap = Snapshot {
            scenario,
            state: &state,
            coverage: &coverage,
        };
        let actions = controller.actions(&snap)?;
        let mut waiting = controller.waiting();
        waiting.resize(n, false);
        let events = step(scenario, &mut state, &mut coverage, &actions)?;
        let fractions: Vec<f64> = (0..state.workers.len())
            .map(|i| state.energy_fraction(scenario, i))
            .collect();
        let reward = shared_reward(&events, &fractions, p_e, &scenario.reward);
        steps.push(StepRecord {
            t: state.t,
            actions: actions.iter().map(|a| a.clamped()).collect(),
            waiting,
            state: Frame::capture(&state),
            newly_covered: events.newly_covered,
            covered: coverage.covered_count(),
            finished: events.finished,
            collisions: events.collisions,
            docked: events.docked,
            released: events.released,
            reward,
        });
    }
    let trace = EpisodeTrace { header, steps };
    Ok((EpisodeMetrics::from_trace(&trace), trace))
}

/// Plans and runs one of the baselines.
pub fn run_planner(
    scenario: &Scenario,
    kind: PlannerKind,
    seed: u64,
) -> Result<(EpisodeMetrics, EpisodeTrace)> {
    let mut c = make_controller(kind, scenario, seed)?;
    run_episode(scenario, &mut c, seed, kind.name())
}

/// Runs decentralized policies, one per role.
pub fn run_policies(
    scenario: &Scenario,
    worker: Box<dyn Policy>,
    station: Box<dyn Policy>,
    seed: u64,
    label: &str,
) -> Result<(EpisodeMetrics, EpisodeTrace)> {
    let mut c = RolePolicies::new(worker, station)?;
    run_episode(scenario, &mut c, seed, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Action;
    use crate::planners::Scripted;

    #[test]
    fn one_sweep_map_finishes_at_step_one() {
        let mut s = Scenario::minimal(4.0, 4.0);
        s.robots.workers.limits.cover_radius = Some(10.0);
        let (m, _) = run_episode(&s, &mut Scripted::new(vec![]), 0, "zero").unwrap();
        assert_eq!(m.t_finish, Some(1));
        assert_eq!(m.coverage_curve, vec![1.0]);
    }

    #[test]
    fn zero_actions_leave_the_task_unfinished() {
        let mut s = Scenario::minimal(30.0, 30.0);
        s.max_steps = 50;
        let (m, t) = run_episode(
            &s,
            &mut Scripted::new(vec![vec![Action::ZERO; 2]]),
            0,
            "zero",
        )
        .unwrap();
        assert_eq!(m.t_finish, None);
        assert_eq!(t.steps.len(), 50);
        assert!(m.coverage_ratio < 1.0);
    }

    #[test]
    fn wrong_action_count_is_an_error() {
        let s = Scenario::minimal(10.0, 10.0);
        let r = run_episode(
            &s,
            &mut Scripted::new(vec![vec![Action::ZERO; 3]]),
            0,
            "bad",
        );
        assert!(matches!(r, Err(crate::Error::ActionCount { .. })));
    }

    #[test]
    fn trace_round_trip_reproduces_metrics() {
        let mut s = Scenario::minimal(20.0, 20.0);
        s.interferer.count = 2;
        s.max_steps = 60;
        let script = vec![vec![Action::new(0.7, 0.3), Action::new(0.5, -0.2)]];
        let (m, t) = run_episode(&s, &mut Scripted::new(script), 4, "script").unwrap();
        let text = t.to_jsonl();
        let back = EpisodeTrace::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, t);
        assert_eq!(EpisodeMetrics::from_trace(&back), m);
        assert_eq!(back.to_jsonl(), text);
    }
}
