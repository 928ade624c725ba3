//! Seeded benchmark suites: every (scenario, planner, seed) episode runs
//! independently, in parallel, and is reduced into one row per pair.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::builtin::builtin;
use super::episode::{run_episode, run_planner, run_policies};
use super::metrics::{format_t_finish, EpisodeMetrics};
use crate::error::{Error, Result};
use crate::observation::Role;
use crate::planners::{PlannerKind, RandomPolicy, Scripted};
use crate::world::Scenario;

/// Environment variable capping the number of episodes run in parallel.
pub const THREADS_ENV: &str = "WS_SIM_THREADS";

/// Anything a suite can put in charge of the team.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BenchPlanner {
    Baseline(PlannerKind),
    /// Zero actions throughout; never finishes a nontrivial map.
    Idle,
    /// Uniform random actions for every agent.
    Random,
}

impl fmt::Display for BenchPlanner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchPlanner::Baseline(k) => k.fmt(f),
            BenchPlanner::Idle => f.write_str("idle"),
            BenchPlanner::Random => f.write_str("random"),
        }
    }
}

impl FromStr for BenchPlanner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idle" => Ok(BenchPlanner::Idle),
            "random" => Ok(BenchPlanner::Random),
            _ => s.parse().map(BenchPlanner::Baseline),
        }
    }
}

impl TryFrom<String> for BenchPlanner {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BenchPlanner> for String {
    fn from(p: BenchPlanner) -> String {
        p.to_string()
    }
}

fn one() -> u64 {
    1
}

/// Suite description as read from JSON. Scenario entries name a builtin or
/// a scenario file relative to the suite file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSuite {
    pub scenarios: Vec<String>,
    pub planners: Vec<BenchPlanner>,
    /// Seeds per (scenario, planner) pair: `base_seed..base_seed + seeds`.
    #[serde(default = "one")]
    pub seeds: u64,
    #[serde(default)]
    pub base_seed: u64,
    /// Overrides the interferer count of every scenario.
    #[serde(default)]
    pub interferers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl BenchSuite {
    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::invalid("a suite needs at least one seed per pair"));
        }
        if self.scenarios.is_empty() || self.planners.is_empty() {
            return Err(Error::invalid(
                "a suite needs at least one scenario and one planner",
            ));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let suite: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        suite.validate()?;
        Ok(suite)
    }

    /// Resolves scenario entries, reading files relative to `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<Vec<Scenario>> {
        self.scenarios
            .iter()
            .map(|name| {
                let mut s = if name.ends_with(".json") {
                    Scenario::load(base_dir.join(name))?
                } else {
                    builtin(name)?
                };
                if let Some(n) = self.interferers {
                    s.interferer.count = n;
                }
                s.validate()?;
                Ok(s)
            })
            .collect()
    }
}

/// One episode of a suite. Plans that cannot be built count as failures
/// and carry the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub scenario: String,
    pub planner: BenchPlanner,
    pub seed: u64,
    pub metrics: Option<EpisodeMetrics>,
    pub error: Option<String>,
}

impl EpisodeRow {
    pub fn t_finish(&self) -> Option<u64> {
        self.metrics.as_ref().and_then(|m| m.t_finish)
    }
}

/// Aggregate over the seeds of one pair. Any failure turns the mean and the
/// maximum into the unfinished sentinel (`null` in JSON, `inf` in CSV); the
/// minimum is taken over finished seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub planner: BenchPlanner,
    pub seeds: usize,
    pub failures: usize,
    pub mean_t_finish: Option<f64>,
    pub min_t_finish: Option<u64>,
    pub max_t_finish: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub summary: Vec<SummaryRow>,
    pub episodes: Vec<EpisodeRow>,
}

/// Reads the parallelism cap from the environment; unset or invalid values
/// leave the decision to the thread pool.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

pub fn run_one(scenario: &Scenario, planner: BenchPlanner, seed: u64) -> Result<EpisodeMetrics> {
    let label = planner.to_string();
    let (m, _) = match planner {
        BenchPlanner::Baseline(k) => run_planner(scenario, k, seed)?,
        BenchPlanner::Idle => run_episode(scenario, &mut Scripted::new(Vec::new()), seed, &label)?,
        BenchPlanner::Random => run_policies(
            scenario,
            Box::new(RandomPolicy::new(Role::Worker, seed.wrapping_mul(2))),
            Box::new(RandomPolicy::new(Role::Station, seed.wrapping_mul(2) + 1)),
            seed,
            &label,
        )?,
    };
    Ok(m)
}

/// Runs every episode of the suite with at most `threads` in flight.
/// Per-episode results do not depend on scheduling.
pub fn run_bench(
    suite: &BenchSuite,
    scenarios: &[Scenario],
    threads: Option<usize>,
) -> Result<BenchReport> {
    suite.validate()?;
    let jobs: Vec<(usize, BenchPlanner, u64)> = (0..scenarios.len())
        .flat_map(|i| {
            suite
                .planners
                .iter()
                .flat_map(move |&p| (0..suite.seeds).map(move |k| (i, p, suite.base_seed + k)))
        })
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let episodes: Vec<EpisodeRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, planner, seed)| {
                let s = &scenarios[i];
                let (metrics, error) = match run_one(s, planner, seed) {
                    Ok(m) => (Some(m), None),
                    Err(e @ (Error::Infeasible(_) | Error::Disconnected(_))) => {
                        (None, Some(e.to_string()))
                    }
                    Err(e) => return Err(e),
                };
                Ok(EpisodeRow {
                    scenario: s.name.clone(),
                    planner,
                    seed,
                    metrics,
                    error,
                })
            })
            .collect::<Result<_>>()
    })?;
    let summary = summarize(&episodes);
    Ok(BenchReport { summary, episodes })
}

/// One row per (scenario, planner) in first-appearance order.
pub fn summarize(episodes: &[EpisodeRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(&str, BenchPlanner)> = Vec::new();
    for e in episodes {
        let key = (e.scenario.as_str(), e.planner);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(scenario, planner)| {
            let ts: Vec<Option<u64>> = episodes
                .iter()
                .filter(|e| e.scenario == scenario && e.planner == planner)
                .map(EpisodeRow::t_finish)
                .collect();
            let done: Vec<u64> = ts.iter().flatten().copied().collect();
            let failures = ts.len() - done.len();
            let all_done = failures == 0;
            SummaryRow {
                scenario: scenario.to_string(),
                planner,
                seeds: ts.len(),
                failures,
                mean_t_finish: all_done
                    .then(|| done.iter().sum::<u64>() as f64 / done.len() as f64),
                min_t_finish: done.iter().min().copied(),
                max_t_finish: if all_done {
                    done.iter().max().copied()
                } else {
                    None
                },
            }
        })
        .collect()
}

fn fmt_mean(m: Option<f64>) -> String {
    m.map_or_else(|| "inf".to_string(), |v| format!("{v:.2}"))
}

impl BenchReport {
    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "scenario",
            "planner",
            "seeds",
            "failures",
            "mean_t_finish",
            "min_t_finish",
            "max_t_finish",
        ])?;
        for r in &self.summary {
            w.write_record([
                r.scenario.clone(),
                r.planner.to_string(),
                r.seeds.to_string(),
                r.failures.to_string(),
                fmt_mean(r.mean_t_finish),
                format_t_finish(r.min_t_finish),
                format_t_finish(r.max_t_finish),
            ])?;
        }
        csv_text(w)
    }

    pub fn episodes_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "scenario",
            "planner",
            "seed",
            "t_finish",
            "steps",
            "coverage_ratio",
            "collisions",
            "collisions_while_waiting",
            "recharge_events",
            "discounted_return",
            "error",
        ])?;
        for e in &self.episodes {
            let mut row = vec![
                e.scenario.clone(),
                e.planner.to_string(),
                e.seed.to_string(),
            ];
            match &e.metrics {
                Some(m) => row.extend([
                    format_t_finish(m.t_finish),
                    m.steps.to_string(),
                    format!("{:.6}", m.coverage_ratio),
                    m.collisions.to_string(),
                    m.collisions_while_waiting.to_string(),
                    m.recharge_events.to_string(),
                    format!("{:.6}", m.discounted_return),
                    String::new(),
                ]),
                None => {
                    row.extend(["inf".to_string()]);
                    row.extend(std::iter::repeat_n(String::new(), 6));
                    row.push(e.error.clone().unwrap_or_default());
                }
            }
            w.write_record(&row)?;
        }
        csv_text(w)
    }

    /// Writes `summary.csv`, `episodes.csv` and `results.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.csv"), self.summary_csv()?)?;
        fs::write(dir.join("episodes.csv"), self.episodes_csv()?)?;
        fs::write(
            dir.join("results.json"),
            serde_json::to_string_pretty(self)?,
        )?;
        Ok(())
    }
}

fn csv_text(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}
