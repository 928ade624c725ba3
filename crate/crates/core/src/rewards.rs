//! Shared team reward and its components.

use serde::{Deserialize, Serialize};

use crate::dynamics::StepEvents;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    /// Reward per newly covered cell.
    pub r_cover: f64,
    /// One-off team reward on the finishing step.
    pub r_finish: f64,
    /// Penalty per collision event.
    pub r_collision: f64,
    /// Per-step penalty until the task finishes.
    pub r_time: f64,
    pub gamma: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            r_cover: 0.1,
            r_finish: 10.0,
            r_collision: -1.0,
            r_time: -0.01,
            gamma: 0.99,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_cover > 0.0) {
            return Err(Error::invalid("r_cover must be positive"));
        }
        if !(self.r_finish >= 0.0) {
            return Err(Error::invalid("r_finish must be non-negative"));
        }
        if !(self.r_collision <= 0.0 && self.r_time <= 0.0) {
            return Err(Error::invalid(
                "r_collision and r_time must be non-positive",
            ));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("gamma must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Per-step reward split by component. `total` is the exact sum of the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub covering: Vec<f64>,
    pub energy_penalty: Vec<f64>,
    pub collision: f64,
    pub time: f64,
    pub total: f64,
}

/// Coverage reward for one worker: `r_cover` per newly covered cell, plus
/// `r_finish` when `finished` marks this entry as carrying the completion bonus.
pub fn covering_reward(newly_covered: usize, finished: bool, params: &RewardParams) -> f64 {
    let base = params.r_cover * newly_covered as f64;
    if finished {
        base + params.r_finish
    } else {
        base
    }
}

/// Truncated exponential penalty for a worker below the exhaustion threshold.
pub fn energy_penalty(p: f64, p_e: f64) -> f64 {
    if p < p_e {
        -(1.0f64).min((p - p_e).exp())
    } else {
        0.0
    }
}

/// Team reward for one step. The completion bonus is booked once, on the
/// covering entry of the lowest-index worker that covered cells this step.
pub fn shared_reward(
    events: &StepEvents,
    fractions: &[f64],
    p_e: f64,
    params: &RewardParams,
) -> RewardBreakdown {
    let finisher = if events.finished {
        events.newly_covered.iter().position(|&n| n > 0).or(Some(0))
    } else {
        None
    };
    let covering: Vec<f64> = events
        .newly_covered
        .iter()
        .enumerate()
        .map(|(i, &n)| covering_reward(n, finisher == Some(i), params))
        .collect();
    let energy_penalty: Vec<f64> = fractions.iter().map(|&p| energy_penalty(p, p_e)).collect();
    let collision = params.r_collision * events.collisions.len() as f64;
    let time = if events.finished { 0.0 } else { params.r_time };
    let total =
        covering.iter().sum::<f64>() + energy_penalty.iter().sum::<f64>() + collision + time;
    RewardBreakdown {
        covering,
        energy_penalty,
        collision,
        time,
        total,
    }
}

/// `Σ γ^t r_t` over the given per-step totals.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut g = 1.0;
    let mut acc = 0.0;
    for &r in rewards {
        acc += g * r;
        g *= gamma;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Entity;

    #[test]
    fn covering_reward_examples() {
        let p = RewardParams::default();
        assert_eq!(covering_reward(0, false, &p), 0.0);
        assert_eq!(covering_reward(0, true, &p), p.r_finish);
        assert!((covering_reward(5, false, &p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(energy_penalty(0.2, 0.2), 0.0);
        assert!((energy_penalty(-0.8, 0.2) + (-1.0f64).exp()).abs() < 1e-15);
        assert!((energy_penalty(-0.8, 0.2) + 0.367879).abs() < 1e-6);
        assert_eq!(energy_penalty(0.5, 0.2), 0.0);
        // left limit at the threshold
        assert!((energy_penalty(0.2 - 1e-12, 0.2) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn idle_step_costs_only_time() {
        let p = RewardParams::default();
        let ev = StepEvents {
            newly_covered: vec![0, 0],
            ..StepEvents::default()
        };
        let r = shared_reward(&ev, &[0.9, 0.5], 0.2, &p);
        assert_eq!(r.total, p.r_time);
    }

    #[test]
    fn collision_term_counts_events() {
        let p = RewardParams::default();
        let ev = StepEvents {
            newly_covered: vec![0],
            collisions: vec![
                (Entity::Worker(0), Entity::Interferer(0)),
                (Entity::Worker(0), Entity::Obstacle),
            ],
            ..StepEvents::default()
        };
        assert_eq!(
            shared_reward(&ev, &[1.0], 0.2, &p).collision,
            2.0 * p.r_collision
        );
    }

    #[test]
    fn finishing_step_books_bonus_once() {
        let p = RewardParams::default();
        let ev = StepEvents {
            newly_covered: vec![0, 3, 1],
            finished: true,
            ..StepEvents::default()
        };
        let r = shared_reward(&ev, &[1.0, 1.0, 1.0], 0.2, &p);
        assert_eq!(r.time, 0.0);
        assert_eq!(r.covering[1], 3.0 * p.r_cover + p.r_finish);
        assert_eq!(r.covering[2], p.r_cover);
        let expected = 4.0 * p.r_cover + p.r_finish;
        assert!((r.total - expected).abs() < 1e-12);
    }

    #[test]
    fn discounted_return_examples() {
        assert_eq!(discounted_return(&[0.0; 5], 0.9), 0.0);
        assert_eq!(discounted_return(&[1.0, 2.0, 3.0], 1.0), 6.0);
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.5), 1.75);
    }
}
