use std::path::Path as FsPath;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::robot::{check_collision, step_kinematics, track_path, RobotParams, RobotState};
use super::sensor::{render_observation, Noise, Perception};
use super::world::World;
use crate::camera::CameraModel;
use crate::costmap::GridSpec;
use crate::error::{invalid_param, Error, Result};
use crate::fusion::{plan, Goal, PlannerConfig};
use crate::geometry::Point;
use crate::paths::{sample_paths, SamplerSpec};
use crate::seed::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub x: f64,
    pub z: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    1.0
}

impl Checkpoint {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.z)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mission {
    pub checkpoints: Vec<Checkpoint>,
    pub difficulty: u32,
    /// Simulated seconds.
    pub time_limit: f64,
}

impl Mission {
    pub fn validate(&self) -> Result<()> {
        if self.checkpoints.is_empty() {
            return Err(invalid_param("mission needs at least one checkpoint"));
        }
        if self.checkpoints.iter().any(|c| !(c.radius > 0.0)) {
            return Err(invalid_param("checkpoint radius must be positive"));
        }
        if !(1..=6).contains(&self.difficulty) {
            return Err(invalid_param("difficulty must lie in 1..=6"));
        }
        if !(self.time_limit > 0.0) {
            return Err(invalid_param("time_limit must be positive"));
        }
        Ok(())
    }

    /// Single checkpoint at the world's goal with a generous time budget.
    pub fn for_world(world: &World, difficulty: u32, v_max: f64) -> Mission {
        Mission {
            checkpoints: vec![Checkpoint {
                x: world.goal.x,
                z: world.goal.z,
                radius: default_radius(),
            }],
            difficulty,
            time_limit: 3.0 * world.route_length() / v_max + 10.0,
        }
    }

    pub fn load(path: &FsPath) -> Result<Mission> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Mission = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        m.validate()?;
        Ok(m)
    }
}

/// Recovery behaviour when the planner reports no path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecoveryParams {
    /// Rotation per recovery attempt, radians.
    pub rotate_increment: f64,
    /// Consecutive failed replans tolerated before giving up.
    pub retry_budget: u32,
}

impl Default for RecoveryParams {
    fn default() -> Self {
        RecoveryParams {
            rotate_increment: std::f64::consts::FRAC_PI_4,
            retry_budget: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub replan_hz: f64,
    pub robot: RobotParams,
    pub noise: Noise,
    pub perception: Perception,
    pub recovery: RecoveryParams,
    pub sampler: SamplerSpec,
    pub grid: GridSpec,
    /// Record representative paths in every step record.
    pub log_representatives: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.05,
            replan_hz: 3.0,
            robot: RobotParams::default(),
            noise: Noise::default(),
            perception: Perception::default(),
            recovery: RecoveryParams::default(),
            sampler: SamplerSpec::default(),
            grid: GridSpec::default(),
            log_representatives: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.replan_hz > 0.0) {
            return Err(invalid_param("dt and replan_hz must be positive"));
        }
        self.robot.validate()?;
        self.noise.validate()?;
        self.perception.validate()?;
        self.sampler.validate()?;
        self.grid.validate()
    }

    fn substeps(&self) -> usize {
        ((1.0 / self.replan_hz) / self.dt).round().max(1.0) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    /// Time ran out after reaching some but not all checkpoints.
    Partial,
    Collision,
    /// Time ran out (or recovery gave up) with no checkpoint reached.
    Timeout,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Partial => "partial",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Track,
    Recover,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub state: RobotState,
    pub mode: Mode,
    /// Selected path in the world frame.
    pub selected: Option<Vec<Point>>,
    pub representatives: Vec<Vec<Point>>,
    pub k: Option<usize>,
    pub silhouette_loss: Option<f64>,
    pub reached: usize,
    pub collision: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub outcome: Outcome,
    pub reached: usize,
    pub total: usize,
    pub difficulty: u32,
    pub score: f64,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogLine {
    Step(StepRecord),
    Outcome(OutcomeRecord),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimLog {
    pub steps: Vec<StepRecord>,
    pub outcome: OutcomeRecord,
}

/// Proportional checkpoint score, zero after a collision.
pub fn mission_score(reached: usize, total: usize, difficulty: u32, collided: bool) -> f64 {
    if collided || total == 0 {
        return 0.0;
    }
    reached.min(total) as f64 / total as f64 * difficulty as f64
}

impl OutcomeRecord {
    pub fn new(reached: usize, total: usize, difficulty: u32, collided: bool, time: f64) -> Self {
        let outcome = if collided {
            Outcome::Collision
        } else if reached >= total {
            Outcome::Success
        } else if reached > 0 {
            Outcome::Partial
        } else {
            Outcome::Timeout
        };
        OutcomeRecord {
            outcome,
            reached,
            total,
            difficulty,
            score: mission_score(reached, total, difficulty, collided),
            time,
        }
    }

    /// `score=<v> outcome=<kind>`
    pub fn summary(&self) -> String {
        format!("score={} outcome={}", self.score, self.outcome.name())
    }
}

impl SimLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(
                &serde_json::to_string(&LogLine::Step(s.clone())).expect("serialize step"),
            );
            out.push('\n');
        }
        out.push_str(
            &serde_json::to_string(&LogLine::Outcome(self.outcome.clone()))
                .expect("serialize outcome"),
        );
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<SimLog> {
        let mut steps = Vec::new();
        let mut outcome = None;
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            if outcome.is_some() {
                return Err(Error::Parse(format!(
                    "line {}: record after outcome",
                    i + 1
                )));
            }
            match serde_json::from_str(line)
                .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?
            {
                LogLine::Step(s) => steps.push(s),
                LogLine::Outcome(o) => outcome = Some(o),
            }
        }
        let outcome = outcome.ok_or_else(|| Error::Parse("log has no outcome record".into()))?;
        Ok(SimLog { steps, outcome })
    }
}

/// Closed-loop receding-horizon run of one mission.
pub fn run_mission(
    world: &World,
    mission: &Mission,
    planner: &PlannerConfig,
    camera: &CameraModel,
    sim: &SimConfig,
    seed: u64,
) -> Result<SimLog> {
    mission.validate()?;
    planner.validate()?;
    sim.validate()?;
    let pathset = sample_paths(&sim.sampler, derive_seed(seed, 0))?;
    let substeps = sim.substeps();
    let total = mission.checkpoints.len();
    let params = &sim.robot;

    let mut state = RobotState::at(world.start);
    let mut time = 0.0;
    let mut reached = 0;
    let mut failures = 0u32;
    let mut collided = false;
    let mut steps = Vec::new();

    'outer: while time < mission.time_limit && reached < total {
        let step = steps.len();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1 + step as u64));
        let mask = render_observation(world, &state, camera, &sim.noise, &mut rng);
        let map = sim.perception.cost_map(camera, &mask, &sim.grid)?;
        let target = mission.checkpoints[reached].position();
        let goal = Goal::at(state.pose.to_robot(target));
        let pose = state.pose;
        let mut record = StepRecord {
            step,
            time,
            state,
            mode: Mode::Track,
            selected: None,
            representatives: Vec::new(),
            k: None,
            silhouette_loss: None,
            reached,
            collision: false,
        };
        let (path, cycle) = match plan(&pathset, &map, &goal, planner) {
            Ok(out) => {
                failures = 0;
                let world_path: Vec<Point> = out
                    .path
                    .waypoints
                    .iter()
                    .map(|&p| pose.to_world(p))
                    .collect();
                record.selected = Some(world_path.clone());
                if sim.log_representatives {
                    record.representatives = out
                        .diagnostics
                        .representatives
                        .iter()
                        .map(|r| r.waypoints.iter().map(|&p| pose.to_world(p)).collect())
                        .collect();
                }
                record.k = out.diagnostics.k;
                record.silhouette_loss = out.diagnostics.silhouette_loss;
                (Some(world_path), substeps)
            }
            Err(Error::NoPath { .. }) => {
                failures += 1;
                record.mode = Mode::Recover;
                if failures > sim.recovery.retry_budget {
                    steps.push(record);
                    break;
                }
                let turn = sim.recovery.rotate_increment / params.omega_max;
                (None, ((turn / sim.dt).ceil() as usize).max(1))
            }
            Err(e) => return Err(e),
        };
        // rotate toward the checkpoint side during recovery
        let turn_sign = if goal.direction.x > 0.0 { -1.0 } else { 1.0 };
        for _ in 0..cycle {
            let (v, w) = match &path {
                Some(p) => track_path(p, &state, params),
                None => (0.0, turn_sign * params.omega_max),
            };
            state = step_kinematics(&state, v, w, sim.dt, params);
            time += sim.dt;
            if check_collision(world, &state, params.footprint_radius) {
                collided = true;
                record.collision = true;
                steps.push(record);
                break 'outer;
            }
            while reached < total
                && state
                    .pose
                    .position()
                    .distance(mission.checkpoints[reached].position())
                    <= mission.checkpoints[reached].radius
            {
                reached += 1;
            }
            if reached == total || time >= mission.time_limit {
                break;
            }
            if path.is_some() && reached > record.reached {
                // new target: replan immediately
                break;
            }
        }
        steps.push(record);
    }
    Ok(SimLog {
        steps,
        outcome: OutcomeRecord::new(
            reached,
            total,
            mission.difficulty,
            collided,
            round_time(time),
        ),
    })
}

fn round_time(t: f64) -> f64 {
    (t * 1e6).round() / 1e6
}
