use std::io::Write;
use std::path::Path;

use pathfuse_core::camera::{CameraModel, CameraSpec};
use pathfuse_core::eval::{
    bench_csv, beta_sweep, beta_sweep_csv, beta_sweep_svg, fork_suite, load_suite, pr_sweep,
    pr_sweep_csv, pr_sweep_svg, run_fusion_bench, write_suite, MetricReport,
};
use pathfuse_core::paths::sample_paths;
use pathfuse_core::seed::derive_seed;
use pathfuse_core::sim::{replay as replay_frames, run_mission, Mission, SimLog, World};
use pathfuse_core::{plan as plan_once, Goal, Mask, PlannerConfig, Strategy};

use crate::config::RunConfig;
use crate::{
    plot, BenchArgs, CliError, GenSuiteArgs, PlanArgs, ReplayArgs, SimulateArgs, SweepArgs,
    SweepKind,
};

const DEFAULT_THRESHOLDS: [f64; 7] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0];
const DEFAULT_BETAS: [f64; 7] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Other(format!("stdout: {e}")))
        }
    }
}

fn load_camera(path: &Path, config: &RunConfig) -> Result<CameraModel, CliError> {
    if path.extension().is_some_and(|x| x == "json") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let spec: CameraSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(spec.build()?)
    } else {
        Ok(CameraModel::load_ray_table(
            path,
            config.camera.mount_height,
        )?)
    }
}

pub fn plan(args: &PlanArgs, config: &RunConfig) -> Result<(), CliError> {
    if !(args.goal_bearing.abs() <= std::f64::consts::PI) {
        return Err(CliError::Config(
            "--goal-bearing must lie in [-pi, pi]".into(),
        ));
    }
    if !(args.goal_distance > 0.0) {
        return Err(CliError::Config("--goal-distance must be positive".into()));
    }
    let camera = load_camera(&args.calib, config)?;
    let mask = Mask::load(&args.mask)?;
    let costmap = config
        .sim
        .perception
        .cost_map(&camera, &mask, &config.sim.grid)?;
    let paths = sample_paths(&config.sim.sampler, derive_seed(config.seed, 0))?;
    let goal = Goal::from_bearing(args.goal_bearing, args.goal_distance);
    let outcome = plan_once(&paths, &costmap, &goal, &config.planner)?;
    emit(args.out.as_deref(), &(outcome.diagnostics.to_json() + "\n"))?;
    if let Some(svg) = &args.svg {
        write_file(svg, &plot::plan_svg(&costmap, &paths, &outcome, &goal))?;
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs, config: &RunConfig) -> Result<(), CliError> {
    let world = World::load(&args.world)?;
    let mission = match &args.mission {
        Some(p) => Mission::load(p)?,
        None => {
            let m = Mission::for_world(&world, args.difficulty, config.sim.robot.v_max);
            m.validate()?;
            m
        }
    };
    let camera = config.camera.build()?;
    let log = run_mission(
        &world,
        &mission,
        &config.planner,
        &camera,
        &config.sim,
        config.seed,
    )?;
    if let Some(path) = &args.log {
        write_file(path, &log.to_jsonl())?;
    }
    let o = &log.outcome;
    emit(
        None,
        &format!(
            "steps={} time={:.2} reached={}/{}\n{}\n",
            log.steps.len(),
            o.time,
            o.reached,
            o.total,
            o.summary()
        ),
    )
}

fn with_strategy(planner: &PlannerConfig, strategy: Strategy) -> PlannerConfig {
    PlannerConfig {
        strategy,
        ..planner.clone()
    }
}

pub fn bench(args: &BenchArgs, config: &RunConfig) -> Result<(), CliError> {
    let strategies = args
        .strategies
        .iter()
        .map(|s| Strategy::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    if strategies.is_empty() {
        return Err(CliError::Config("--strategies is empty".into()));
    }
    let cases = load_suite(&args.suite, &config.observation())?;
    let paths = sample_paths(&config.sim.sampler, derive_seed(config.seed, 0))?;
    let reports = strategies
        .iter()
        .map(|&s| run_fusion_bench(&cases, &paths, &with_strategy(&config.planner, s)))
        .collect::<Result<Vec<_>, _>>()?;
    emit(args.out.as_deref(), &bench_csv(&reports))?;
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n";
        write_file(path, &text)?;
    }
    if let Some(spec) = &args.assert_ordering {
        check_ordering(spec, &reports, args.min_gap)?;
    }
    Ok(())
}

/// PSA of one ordering term. Bare `nf` stands for the best no-fusion row.
fn term_psa(term: &str, reports: &[MetricReport]) -> Result<f64, CliError> {
    let term = term.trim();
    if term == "nf" {
        return reports
            .iter()
            .filter(|r| r.strategy.starts_with("nf"))
            .map(|r| r.psa)
            .reduce(f64::max)
            .ok_or_else(|| CliError::Config("ordering names nf but no no-fusion row ran".into()));
    }
    let name = Strategy::parse(term)?.to_string();
    reports
        .iter()
        .find(|r| r.strategy == name)
        .map(|r| r.psa)
        .ok_or_else(|| CliError::Config(format!("ordering names {term:?}, which did not run")))
}

/// Checks a chain like `angular>es>=km>nf`. Each `>` must hold by more
/// than `min_gap`; `>=` allows ties.
pub fn check_ordering(spec: &str, reports: &[MetricReport], min_gap: f64) -> Result<(), CliError> {
    let mut terms = Vec::new();
    let mut ops = Vec::new();
    let mut rest = spec;
    while let Some(i) = rest.find('>') {
        terms.push(&rest[..i]);
        let strict = !rest[i + 1..].starts_with('=');
        ops.push(strict);
        rest = &rest[i + if strict { 1 } else { 2 }..];
    }
    terms.push(rest);
    if ops.is_empty() || terms.iter().any(|t| t.trim().is_empty()) {
        return Err(CliError::Config(format!("malformed ordering {spec:?}")));
    }
    let psa = terms
        .iter()
        .map(|t| term_psa(t, reports))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, &strict) in ops.iter().enumerate() {
        let (a, b) = (psa[i], psa[i + 1]);
        let ok = if strict {
            a > b && a - b >= min_gap
        } else {
            a >= b
        };
        if !ok {
            return Err(CliError::Assertion(format!(
                "{} ({a:.3}) {} {} ({b:.3})",
                terms[i].trim(),
                if strict { ">" } else { ">=" },
                terms[i + 1].trim()
            )));
        }
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs, config: &RunConfig) -> Result<(), CliError> {
    let cases = load_suite(&args.suite, &config.observation())?;
    let (csv, svg) = match args.kind {
        SweepKind::Threshold => {
            let values = args
                .values
                .clone()
                .unwrap_or_else(|| DEFAULT_THRESHOLDS.to_vec());
            let paths = sample_paths(&config.sim.sampler, derive_seed(config.seed, 0))?;
            let points = pr_sweep(&cases, &paths, &config.planner, &values)?;
            (pr_sweep_csv(&points), pr_sweep_svg(&points))
        }
        SweepKind::Beta => {
            let values = args
                .values
                .clone()
                .unwrap_or_else(|| DEFAULT_BETAS.to_vec());
            let seeds: Vec<u64> = config
                .eval
                .beta_seeds
                .iter()
                .map(|&s| derive_seed(config.seed, s))
                .collect();
            let points = beta_sweep(
                &cases,
                &config.sim.sampler,
                &config.planner,
                &values,
                &seeds,
            )?;
            let svg = if args.svg.is_some() {
                let paths = sample_paths(&config.sim.sampler, seeds[0])?;
                let fused = run_fusion_bench(
                    &cases,
                    &paths,
                    &with_strategy(&config.planner, Strategy::Angular),
                )?;
                beta_sweep_svg(&points, Some(("angular fusion", fused.psa)))
            } else {
                String::new()
            };
            (beta_sweep_csv(&points), svg)
        }
    };
    emit(args.out.as_deref(), &csv)?;
    if let Some(path) = &args.svg {
        write_file(path, &svg)?;
    }
    Ok(())
}

pub fn replay(args: &ReplayArgs) -> Result<(), CliError> {
    if args.every == 0 {
        return Err(CliError::Config("--every must be at least 1".into()));
    }
    let text = std::fs::read_to_string(&args.log)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.log.display())))?;
    let log = SimLog::from_jsonl(&text)?;
    let world = args.world.as_deref().map(World::load).transpose()?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Other(format!("{}: {e}", args.out_dir.display())))?;
    let frames = replay_frames(&log, world.as_ref());
    let mut written = 0;
    for (i, frame) in frames.iter().enumerate().step_by(args.every) {
        write_file(&args.out_dir.join(format!("step_{i:04}.svg")), frame)?;
        written += 1;
    }
    emit(
        None,
        &format!("frames={written} {}\n", log.outcome.summary()),
    )
}

pub fn gen_suite(args: &GenSuiteArgs, config: &RunConfig) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::Config("--count must be at least 1".into()));
    }
    let entries = fork_suite(args.count, config.seed)?;
    write_suite(&args.out, &entries)?;
    emit(
        None,
        &format!("cases={} dir={}\n", entries.len(), args.out.display()),
    )
}
