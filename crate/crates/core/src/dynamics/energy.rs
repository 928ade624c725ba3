//! Worker energy bookkeeping: discharge, docked recharge and release.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    /// Energy capacity `c` of every worker.
    pub capacity: f64,
    /// Energy drained per step while not docked.
    pub e_discharge: f64,
    /// Energy restored per step while docked.
    pub e_charge: f64,
    /// A worker is exhausted when its energy fraction is strictly below this.
    pub exhausted_threshold: f64,
    /// Docking is possible within this distance of a station.
    pub rendezvous_radius: f64,
    /// Training semantics: energy may go negative and empty workers keep moving.
    #[serde(default)]
    pub soft_constraint: bool,
}

impl EnergyParams {
    /// Defaults: 600 working steps per charge, recharge ten times faster,
    /// exhaustion below 20 %, 1.5 m rendezvous radius.
    pub fn with_capacity(capacity: f64) -> Self {
        let e_discharge = capacity / 600.0;
        Self {
            capacity,
            e_discharge,
            e_charge: 10.0 * e_discharge,
            exhausted_threshold: 0.2,
            rendezvous_radius: 1.5,
            soft_constraint: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return Err(Error::invalid("energy capacity must be positive"));
        }
        if !(self.e_discharge > 0.0 && self.e_charge > 0.0) {
            return Err(Error::invalid(
                "charge and discharge rates must be positive",
            ));
        }
        if !(self.exhausted_threshold > 0.0 && self.exhausted_threshold < 1.0) {
            return Err(Error::invalid("exhausted threshold must lie in (0, 1)"));
        }
        if !(self.rendezvous_radius > 0.0) {
            return Err(Error::invalid("rendezvous radius must be positive"));
        }
        Ok(())
    }

    pub fn fraction(&self, energy: f64) -> f64 {
        energy / self.capacity
    }

    pub fn is_exhausted(&self, energy: f64) -> bool {
        self.fraction(energy) < self.exhausted_threshold
    }

    /// Steps of discharge left before the energy reaches zero.
    pub fn steps_left(&self, energy: f64) -> f64 {
        (energy / self.e_discharge).max(0.0)
    }

    /// Number of steps a full charge lasts.
    pub fn charge_steps(&self) -> f64 {
        self.capacity / self.e_discharge
    }
}

/// One step of the energy model.
///
/// A worker charges only while docked and within the rendezvous radius of a
/// station; otherwise it discharges. Energy stays within `[0, c]` unless the
/// soft constraint lets it fall below zero.
pub fn update_energy(
    e_prev: f64,
    dist_to_station: f64,
    docked: bool,
    params: &EnergyParams,
) -> f64 {
    if docked && dist_to_station <= params.rendezvous_radius {
        (e_prev + params.e_charge).min(params.capacity)
    } else if params.soft_constraint {
        e_prev - params.e_discharge
    } else {
        (e_prev - params.e_discharge).max(0.0)
    }
}

/// Docking gate: an undocked worker docks iff it is exhausted and a station is
/// within the rendezvous radius. Returns the nearest such station (lowest
/// index on ties).
pub fn docking_target(
    energy: f64,
    station_distances: impl IntoIterator<Item = f64>,
    params: &EnergyParams,
) -> Option<usize> {
    if !params.is_exhausted(energy) {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for (j, d) in station_distances.into_iter().enumerate() {
        if d <= params.rendezvous_radius && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((j, d));
        }
    }
    best.map(|(j, _)| j)
}

/// A docked worker is released iff fully recharged.
pub fn should_release(energy: f64, params: &EnergyParams) -> bool {
    energy >= params.capacity
}
