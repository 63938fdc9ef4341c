//! `pathfuse`: plan on a mask, simulate missions, benchmark fusion strategies.
//!
//! Exit codes: 0 success, 2 no path, 3 parse or configuration error,
//! 4 assertion failure, 1 anything else.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Overrides;

#[derive(Debug)]
pub enum CliError {
    NoPath(String),
    Config(String),
    Assertion(String),
    Other(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::NoPath(_) => 2,
            CliError::Config(_) => 3,
            CliError::Assertion(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::NoPath(m) => write!(f, "no path: {m}"),
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Assertion(m) => write!(f, "assertion failed: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<pathfuse_core::Error> for CliError {
    fn from(e: pathfuse_core::Error) -> Self {
        match e {
            pathfuse_core::Error::NoPath { .. } => CliError::NoPath(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "pathfuse",
    version,
    about = "Traversability-driven local planning with path fusion"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON run configuration; unset keys keep their defaults [default: none]
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overrides the config file [default: config value, 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections; results do not depend on it [default: all cores]
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Require an explicit --seed [default: off]
    #[arg(long, global = true, default_value_t = false)]
    ci: bool,
    /// Strategy: angular, es, km, nf or nf:<beta> [default: config value, angular]
    #[arg(long, global = true)]
    strategy: Option<String>,
    /// Merge threshold in meters [default: config value, 0.75]
    #[arg(long, global = true)]
    merge_threshold: Option<f64>,
    /// Candidates kept for fusion [default: config value, 32]
    #[arg(long, global = true)]
    top_k: Option<usize>,
    /// Mask flip probability for simulated observations [default: config value, 0]
    #[arg(long, global = true)]
    flip_p: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plan once on a traversability mask and print diagnostics JSON
    Plan(PlanArgs),
    /// Run a closed-loop mission; the last stdout line is `score=<v> outcome=<kind>`
    Simulate(SimulateArgs),
    /// Compare strategies on a case suite and print a CSV table
    Bench(BenchArgs),
    /// Sweep the merge threshold or the no-fusion beta over a case suite
    Sweep(SweepArgs),
    /// Render a simulation log as one SVG per step
    Replay(ReplayArgs),
    /// Write a seeded synthetic fork suite
    GenSuite(GenSuiteArgs),
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// Binary PGM mask, 255 traversable (required)
    #[arg(long)]
    mask: PathBuf,
    /// Camera: JSON pinhole description, or a ray table (mount height from the config) (required)
    #[arg(long)]
    calib: PathBuf,
    /// Goal bearing in radians, right-positive from straight ahead
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    goal_bearing: f64,
    /// Goal distance in meters
    #[arg(long, default_value_t = 10.0)]
    goal_distance: f64,
    /// Write diagnostics here instead of stdout [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also draw the cost map, candidates and selection [default: none]
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// World file, generated spec or explicit grid (required)
    #[arg(long)]
    world: PathBuf,
    /// Mission file; a single checkpoint at the world goal if absent [default: none]
    #[arg(long)]
    mission: Option<PathBuf>,
    /// Difficulty used when no mission file is given
    #[arg(long, default_value_t = 1)]
    difficulty: u32,
    /// Write the JSONL log here [default: none]
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Directory of case files (required)
    #[arg(long)]
    suite: PathBuf,
    /// Comma-separated strategies, one table row each
    #[arg(long, default_value = "nf:1,km,es,angular", value_delimiter = ',')]
    strategies: Vec<String>,
    /// Write the CSV here instead of stdout [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write full per-case reports as JSON [default: none]
    #[arg(long)]
    json: Option<PathBuf>,
    /// PSA ordering to check, e.g. `angular>es>=km>nf`; bare `nf` is the best no-fusion row [default: none]
    #[arg(long)]
    assert_ordering: Option<String>,
    /// Minimum PSA margin for each `>` in the ordering
    #[arg(long, default_value_t = 0.0)]
    min_gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Threshold,
    Beta,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// What to sweep
    #[arg(value_enum)]
    kind: SweepKind,
    /// Directory of case files (required)
    #[arg(long)]
    suite: PathBuf,
    /// Comma-separated values [default: 0,0.25,0.5,0.75,1,1.5,2 for thresholds; 0.1,0.2,0.5,1,2,5,10 for beta]
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    /// Write the CSV here instead of stdout [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a chart [default: none]
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// JSONL log written by `simulate --log` (required)
    #[arg(long)]
    log: PathBuf,
    /// World file to draw behind the trace [default: none]
    #[arg(long)]
    world: Option<PathBuf>,
    /// Output directory for step_NNNN.svg frames (required)
    #[arg(long)]
    out_dir: PathBuf,
    /// Keep every n-th step
    #[arg(long, default_value_t = 1)]
    every: usize,
}

#[derive(Args, Debug)]
pub struct GenSuiteArgs {
    /// Output directory (required)
    #[arg(long)]
    out: PathBuf,
    /// Number of cases
    #[arg(long, default_value_t = 200)]
    count: usize,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    if g.ci && g.seed.is_none() {
        return Err(CliError::Config("--seed is required with --ci".into()));
    }
    let overrides = Overrides {
        seed: g.seed,
        strategy: g.strategy.clone(),
        merge_threshold: g.merge_threshold,
        top_k: g.top_k,
        flip_p: g.flip_p,
    };
    let config = config::RunConfig::load(g.config.as_deref(), &overrides)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = g.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Other(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Plan(a) => commands::plan(a, &config),
        Command::Simulate(a) => commands::simulate(a, &config),
        Command::Bench(a) => commands::bench(a, &config),
        Command::Sweep(a) => commands::sweep(a, &config),
        Command::Replay(a) => commands::replay(a),
        Command::GenSuite(a) => commands::gen_suite(a, &config),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pathfuse: {e}");
            ExitCode::from(e.code())
        }
    }
}
