//! Line-delimited episode traces.
//!
//! The first line is a [`TraceHeader`]; every further line is one
//! [`StepRecord`]. Fields appear in declaration order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Action, Entity, WorldState};
use crate::error::{Error, Result};
use crate::rewards::RewardBreakdown;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerRecord {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub omega: f64,
    pub energy: f64,
    pub docked_to: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationRecord {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfererRecord {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

/// Positions and internal state of every entity at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub workers: Vec<WorkerRecord>,
    pub stations: Vec<StationRecord>,
    pub interferers: Vec<InterfererRecord>,
}

impl Frame {
    pub fn capture(state: &WorldState) -> Self {
        Self {
            workers: state
                .workers
                .iter()
                .map(|w| WorkerRecord {
                    x: w.pose.x,
                    y: w.pose.y,
                    heading: w.pose.heading,
                    v: w.v,
                    omega: w.omega,
                    energy: w.energy,
                    docked_to: w.docked_to,
                })
                .collect(),
            stations: state
                .stations
                .iter()
                .map(|s| StationRecord {
                    x: s.pose.x,
                    y: s.pose.y,
                    heading: s.pose.heading,
                    v: s.v,
                    omega: s.omega,
                })
                .collect(),
            interferers: state
                .interferers
                .iter()
                .map(|s| InterfererRecord {
                    x: s.pose.x,
                    y: s.pose.y,
                    heading: s.pose.heading,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub scenario: String,
    pub controller: String,
    pub seed: u64,
    pub max_steps: u64,
    pub free_cells: usize,
    pub gamma: f64,
    pub initial: Frame,
}

/// Everything that happened in one step. `state` is taken after the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    /// Applied joint action, workers first.
    pub actions: Vec<Action>,
    /// Agents whose motion was held back by the wait-and-move guard.
    pub waiting: Vec<bool>,
    pub state: Frame,
    pub newly_covered: Vec<usize>,
    pub covered: usize,
    pub finished: bool,
    pub collisions: Vec<(Entity, Entity)>,
    pub docked: Vec<(usize, usize)>,
    pub released: Vec<usize>,
    pub reward: RewardBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
}

impl EpisodeTrace {
    pub fn write_jsonl(&self, out: &mut impl Write) -> Result<()> {
        serde_json::to_writer(&mut *out, &self.header)?;
        out.write_all(b"\n")?;
        for s in &self.steps {
            serde_json::to_writer(&mut *out, s)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        // writing into memory cannot fail
        self.write_jsonl(&mut buf).expect("in-memory trace write");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Trace("empty trace".into()))??;
        let header: TraceHeader = serde_json::from_str(&first)?;
        let mut steps = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: StepRecord = serde_json::from_str(&line)?;
            if rec.t != k as u64 + 1 {
                return Err(Error::Trace(format!("record {} has t = {}", k + 1, rec.t)));
            }
            steps.push(rec);
        }
        Ok(Self { header, steps })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_jsonl(BufReader::new(File::open(path)?))
    }

    /// Frame before step `k` (zero-based).
    pub fn frame_before(&self, k: usize) -> &Frame {
        match k {
            0 => &self.header.initial,
            _ => &self.steps[k - 1].state,
        }
    }
}
