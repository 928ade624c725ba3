//! `ws-sim`: run episodes, benchmark suites and check scenario files.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid input, 3 infeasible
//! plan.

mod external;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ws_sim_core::harness::bench::{threads_from_env, BenchSuite};
use ws_sim_core::harness::builtin::{builtin, BUILTIN_NAMES};
use ws_sim_core::harness::metrics::format_t_finish;
use ws_sim_core::harness::render::save_ppm;
use ws_sim_core::harness::{
    render_trace, run_bench, run_episode, run_planner, run_policies, RenderOptions,
};
use ws_sim_core::planners::{PlannerKind, RandomPolicy};
use ws_sim_core::{Error, Role, Scenario};

use external::ExternalPolicy;

#[derive(Parser)]
#[command(
    name = "ws-sim",
    version,
    about = "Worker-station multi-robot coverage simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one episode and print its metrics as JSON.
    Simulate(SimulateArgs),
    /// Run a benchmark suite and write CSV tables plus results.json.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        /// Output directory; defaults to the suite's `out` field.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect scenarios.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCmd,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Check a scenario file (or builtin name) and print a summary.
    Validate { file: String },
    /// Print the names of the bundled scenarios.
    ListBuiltin,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerArg {
    MobileBcd,
    StaticMstc,
    MobileMstc,
    /// Child process given by `--policy-cmd`.
    External,
    /// Uniform random actions.
    #[value(hide = true)]
    Random,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Scenario JSON file or builtin name.
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum)]
    planner: PlannerArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the line-delimited trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write a PPM picture of the final frame here.
    #[arg(long)]
    render: Option<PathBuf>,
    /// Pixels per grid cell in the picture.
    #[arg(long, default_value_t = 4)]
    scale: usize,
    /// Override the interferer count.
    #[arg(long)]
    interferers: Option<usize>,
    /// Shell command of the external policy process.
    #[arg(long, required_if_eq("planner", "external"))]
    policy_cmd: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Infeasible(_) | Error::Disconnected(_)) => 3,
        Some(
            Error::InvalidScenario(_)
            | Error::UnknownPlanner(_)
            | Error::ActionCount { .. }
            | Error::Json(_)
            | Error::Trace(_),
        ) => 2,
        Some(Error::Io(io)) if io.kind() == std::io::ErrorKind::NotFound => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Simulate(args) => simulate(args),
        Cmd::Bench { suite, out } => bench(&suite, out),
        Cmd::Scenario {
            command: ScenarioCmd::Validate { file },
        } => validate(&file),
        Cmd::Scenario {
            command: ScenarioCmd::ListBuiltin,
        } => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    }
}

/// Builtin names win over files of the same name.
fn load_scenario(name: &str) -> Result<Scenario> {
    let s = if BUILTIN_NAMES.contains(&name) {
        builtin(name)?
    } else {
        Scenario::load(name).with_context(|| format!("loading scenario {name}"))?
    };
    s.validate()?;
    Ok(s)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut s = load_scenario(&args.scenario)?;
    if let Some(n) = args.interferers {
        s.interferer.count = n;
        s.validate()?;
    }
    let seed = args.seed;
    let (metrics, trace) = match args.planner {
        PlannerArg::MobileBcd => run_planner(&s, PlannerKind::MobileBcd, seed)?,
        PlannerArg::StaticMstc => run_planner(&s, PlannerKind::StaticMstc, seed)?,
        PlannerArg::MobileMstc => run_planner(&s, PlannerKind::MobileMstc, seed)?,
        PlannerArg::Random => run_policies(
            &s,
            Box::new(RandomPolicy::new(Role::Worker, seed.wrapping_mul(2))),
            Box::new(RandomPolicy::new(Role::Station, seed.wrapping_mul(2) + 1)),
            seed,
            "random",
        )?,
        PlannerArg::External => {
            let cmd = args
                .policy_cmd
                .as_deref()
                .context("--policy-cmd is required")?;
            let mut policy = ExternalPolicy::spawn(cmd).context("starting the external policy")?;
            run_episode(&s, &mut policy, seed, "external")?
        }
    };
    if let Some(path) = &args.trace {
        trace
            .save(path)
            .with_context(|| format!("writing trace {}", path.display()))?;
    }
    if let Some(path) = &args.render {
        let opts = RenderOptions {
            scale: args.scale,
            upto: None,
        };
        let img = render_trace(&s, &trace, opts)?;
        save_ppm(&img, path).with_context(|| format!("writing image {}", path.display()))?;
    }
    eprintln!(
        "{}: t_finish={} coverage={:.4} collisions={}",
        s.name,
        format_t_finish(metrics.t_finish),
        metrics.coverage_ratio,
        metrics.collisions
    );
    println!("{}", serde_json::to_string(&metrics)?);
    Ok(())
}

fn bench(suite_path: &Path, out: Option<PathBuf>) -> Result<()> {
    let suite = BenchSuite::load(suite_path)
        .with_context(|| format!("loading suite {}", suite_path.display()))?;
    let base = suite_path.parent().unwrap_or(Path::new("."));
    let scenarios = suite.resolve(base)?;
    let out = out
        .or_else(|| suite.out.as_ref().map(|o| base.join(o)))
        .context("no output directory: pass --out or set `out` in the suite")?;
    let report = run_bench(&suite, &scenarios, threads_from_env())?;
    report.write(&out)?;
    print!("{}", report.summary_csv()?);
    Ok(())
}

fn validate(file: &str) -> Result<()> {
    let s = load_scenario(file)?;
    let grid = ws_sim_core::world::rasterize(&s)?;
    println!(
        "{}: {}x{} cells, {} free, {} workers, {} stations, {} interferers, max_steps {}",
        s.name,
        grid.width(),
        grid.height(),
        grid.free_count(),
        s.num_workers(),
        s.num_stations(),
        s.num_interferers(),
        s.max_steps
    );
    Ok(())
}
