use std::f64::consts::FRAC_PI_2;
use std::path::Path as FsPath;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{membership, FusionCase};
use crate::camera::{CameraModel, CameraSpec};
use crate::costmap::GridSpec;
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::Point;
use crate::paths::{Path, PathKind, SamplerSpec};
use crate::seed::derive_seed;
use crate::sim::{
    fork_branches, Branch, Noise, Perception, Pose, ScenarioKind, World, WorldParams, WorldSpec,
};

/// How cases are observed: camera, BEV grid and mask post-processing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservationConfig {
    pub camera: CameraSpec,
    pub grid: GridSpec,
    pub perception: Perception,
}

/// Case file: a world reference plus the robot pose to observe it from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub name: String,
    /// World file, relative to the case file.
    pub world: String,
    pub pose: Pose,
    /// World-frame goal; the world's own goal if absent.
    #[serde(default)]
    pub goal: Option<Point>,
    #[serde(default)]
    pub noise: Noise,
    /// Seeds the observation noise.
    #[serde(default)]
    pub seed: u64,
}

impl CaseSpec {
    pub fn build(
        &self,
        world: &World,
        camera: &CameraModel,
        obs: &ObservationConfig,
    ) -> Result<FusionCase> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        FusionCase::from_world(
            self.name.clone(),
            world,
            self.pose,
            self.goal.unwrap_or(world.goal),
            camera,
            &obs.perception,
            &self.noise,
            &obs.grid,
            &mut rng,
        )
    }
}

/// A generated case with its world description inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub case: CaseSpec,
    pub world: WorldSpec,
    pub family: SuiteFamily,
}

impl SuiteEntry {
    pub fn build(&self, camera: &CameraModel, obs: &ObservationConfig) -> Result<FusionCase> {
        let world = World::from_spec(&self.world)?;
        self.case.build(&world, camera, obs)
    }
}

/// Case families mixed into the synthetic fork suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteFamily {
    /// Two branches of random angle and width; the goal bearing leans
    /// somewhat toward the wrong one.
    Fork,
    /// A narrow goal branch next to a wide, shallower wrong branch that
    /// points closer to the goal than the goal branch's far side.
    Decoy,
    /// Single corridor, one correct answer.
    Corridor,
}

/// Goal distance from the junction for fork cases, meters.
const GOAL_RANGE: f64 = 30.0;
const MAX_TRIES: usize = 10_000;

/// Seeded mixture: 30% fork, 60% decoy, 10% corridor. Case `i` depends
/// only on `(seed, i)`.
pub fn fork_suite(n: usize, seed: u64) -> Result<Vec<SuiteEntry>> {
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let name = format!("case{i:03}");
            let u: f64 = rng.gen();
            if u < 0.30 {
                fork_entry(&name, SuiteFamily::Fork, &mut rng)
            } else if u < 0.90 {
                fork_entry(&name, SuiteFamily::Decoy, &mut rng)
            } else {
                Ok(corridor_entry(&name, &mut rng))
            }
        })
        .collect()
}

fn fork_entry(name: &str, family: SuiteFamily, rng: &mut ChaCha8Rng) -> Result<SuiteEntry> {
    for _ in 0..MAX_TRIES {
        let correct = rng.gen_range(0..2usize);
        let (ac, aw, wc, ww, lean) = match family {
            SuiteFamily::Decoy => (
                rng.gen_range(0.45..0.7),
                rng.gen_range(0.05..0.35),
                rng.gen_range(1.3..1.8),
                rng.gen_range(2.8..4.0),
                rng.gen_range(0.1..0.35),
            ),
            _ => (
                rng.gen_range(0.35..0.75),
                rng.gen_range(0.1..0.7),
                rng.gen_range(1.2..3.5),
                rng.gen_range(1.2..3.5),
                rng.gen_range(-0.15..0.45),
            ),
        };
        let params = WorldParams {
            width: rng.gen_range(1.8..2.6),
            stem_length: 4.0,
            branch_angle: ac,
            branch_width: wc,
            other_angle: Some(aw),
            other_width: Some(ww),
            goal_branch: Some(correct),
            ..WorldParams::default()
        };
        let pose = Pose::new(
            rng.gen_range(-0.15..0.15),
            params.stem_length - rng.gen_range(0.0..0.8),
            FRAC_PI_2 + rng.gen_range(-0.08..0.08),
        );
        // branch 0 opens to the left (negative bearing)
        let side = if correct == 0 { -1.0 } else { 1.0 };
        let (correct_bearing, wrong_bearing) = (side * ac, -side * aw);
        let goal_bearing = correct_bearing - side * lean;
        let goal =
            Point::new(0.0, params.stem_length) + Point::from_bearing(goal_bearing) * GOAL_RANGE;
        let case_seed = rng.gen();
        let world_seed = rng.gen();
        if (goal_bearing - correct_bearing).abs() >= (goal_bearing - wrong_bearing).abs()
            || !labels_resolvable(&fork_branches(&params, correct), pose)
        {
            continue;
        }
        let world = WorldSpec {
            scenario_kind: ScenarioKind::Fork,
            params: serde_json::to_value(&params).expect("params serialize"),
            seed: world_seed,
        };
        return Ok(entry(name, world, pose, Some(goal), case_seed, family));
    }
    Err(invalid_arg(format!(
        "{name}: no labelable fork geometry found"
    )))
}

fn corridor_entry(name: &str, rng: &mut ChaCha8Rng) -> SuiteEntry {
    let params = WorldParams {
        width: rng.gen_range(1.4..3.0),
        ..WorldParams::default()
    };
    let pose = Pose::new(
        rng.gen_range(-0.2..0.2),
        rng.gen_range(0.0..2.0),
        FRAC_PI_2 + rng.gen_range(-0.1..0.1),
    );
    let world = WorldSpec {
        scenario_kind: ScenarioKind::Corridor,
        params: serde_json::to_value(&params).expect("params serialize"),
        seed: rng.gen(),
    };
    entry(name, world, pose, None, rng.gen(), SuiteFamily::Corridor)
}

fn entry(
    name: &str,
    world: WorldSpec,
    pose: Pose,
    goal: Option<Point>,
    seed: u64,
    family: SuiteFamily,
) -> SuiteEntry {
    SuiteEntry {
        case: CaseSpec {
            name: name.to_string(),
            world: format!("worlds/{name}.json"),
            pose,
            goal,
            noise: Noise {
                flip_p: 0.02,
                erode_px: 0,
            },
            seed,
        },
        world,
        family,
    }
}

/// Straight paths from the robot toward each branch's centreline, and a
/// quarter width to either side of it, must be labelled with that branch
/// alone. Rejects layouts where corridor overlap makes labels ambiguous.
fn labels_resolvable(branches: &[Branch], pose: Pose) -> bool {
    let local: Vec<Branch> = branches
        .iter()
        .map(|b| Branch {
            polyline: b.polyline.iter().map(|&p| pose.to_robot(p)).collect(),
            ..b.clone()
        })
        .collect();
    let radius = SamplerSpec::default().endpoint_radius;
    let n = SamplerSpec::default().waypoints;
    local.iter().enumerate().all(|(i, b)| {
        let (a, c) = (b.polyline[0], b.polyline[1]);
        let Some(dir) = (c - a).normalized() else {
            return false;
        };
        // centreline point at the sampling radius from the robot
        let along = a.dot(dir);
        let disc = along * along - a.dot(a) + radius * radius;
        if disc < 0.0 {
            return false;
        }
        let centre = a + dir * (-along + disc.sqrt());
        let normal = Point::new(dir.z, -dir.x);
        [-0.25, 0.0, 0.25].iter().all(|&f| {
            let Some(end) = (centre + normal * (f * b.width)).normalized() else {
                return false;
            };
            let end = end * radius;
            let waypoints = (0..n).map(|k| end * (k as f64 / (n - 1) as f64)).collect();
            Path::new(PathKind::Linear, waypoints)
                .map(|p| membership(&p, &local) == [i])
                .unwrap_or(false)
        })
    })
}

/// Builds every entry (in parallel, order kept).
pub fn build_suite(entries: &[SuiteEntry], obs: &ObservationConfig) -> Result<Vec<FusionCase>> {
    let camera = obs.camera.build()?;
    entries.par_iter().map(|e| e.build(&camera, obs)).collect()
}

/// Writes `<name>.json` case files and `worlds/<name>.json` world files.
pub fn write_suite(dir: &FsPath, entries: &[SuiteEntry]) -> Result<()> {
    let worlds = dir.join("worlds");
    std::fs::create_dir_all(&worlds).map_err(|e| Error::io(&worlds, e))?;
    for e in entries {
        let world_path = dir.join(&e.case.world);
        write_json(&world_path, &e.world)?;
        write_json(&dir.join(format!("{}.json", e.case.name)), &e.case)?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &FsPath, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("suite files serialize") + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads every `*.json` case file directly under `dir`, in file-name order.
pub fn load_suite(dir: &FsPath, obs: &ObservationConfig) -> Result<Vec<FusionCase>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(invalid_arg(format!("no case files in {}", dir.display())));
    }
    let camera = obs.camera.build()?;
    files
        .par_iter()
        .map(|path| {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let spec: CaseSpec = serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let world = World::load(&dir.join(&spec.world))?;
            spec.build(&world, &camera, obs)
        })
        .collect()
}
