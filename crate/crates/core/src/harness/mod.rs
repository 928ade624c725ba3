//! Episode runner, bundled scenarios, metrics, traces, benchmarking and rendering.

pub mod bench;
pub mod builtin;
pub mod episode;
pub mod metrics;
pub mod render;
pub mod trace;

pub use bench::{run_bench, BenchPlanner, BenchReport, BenchSuite};
pub use episode::{run_episode, run_planner, run_policies};
pub use metrics::EpisodeMetrics;
pub use render::{render_trace, RenderOptions};
pub use trace::EpisodeTrace;
