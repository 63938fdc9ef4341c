//! Shared fixtures for the pipeline benchmarks.

use pathfuse_core::camera::{CameraModel, CameraSpec};
use pathfuse_core::paths::{sample_paths, top_k};
use pathfuse_core::sim::{
    render_observation, synthesize_world, Noise, Perception, RobotState, ScenarioKind, WorldParams,
};
use pathfuse_core::{CostMap, Goal, GridSpec, Mask, Path, PathSet, PlannerConfig, SamplerSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One planning cycle's inputs, observed at the start of a fork world.
pub struct Fixture {
    pub camera: CameraModel,
    pub grid: GridSpec,
    pub mask: Mask,
    pub map: CostMap,
    pub paths: PathSet,
    /// Top-K candidates of `paths` on `map`.
    pub candidates: Vec<Path>,
    pub goal: Goal,
    pub planner: PlannerConfig,
}

impl Fixture {
    pub fn fork(seed: u64) -> Fixture {
        let world = synthesize_world(ScenarioKind::Fork, &WorldParams::default(), seed)
            .expect("fork world");
        let camera = CameraSpec::default().build().expect("default camera");
        let grid = GridSpec::default();
        let state = RobotState::at(world.start);
        let noise = Noise {
            flip_p: 0.02,
            ..Noise::off()
        };
        let mask = render_observation(
            &world,
            &state,
            &camera,
            &noise,
            &mut ChaCha8Rng::seed_from_u64(seed),
        );
        let map = Perception::default()
            .cost_map(&camera, &mask, &grid)
            .expect("cost map");
        let paths = sample_paths(&SamplerSpec::default(), seed).expect("path set");
        let planner = PlannerConfig::default();
        let candidates = top_k(&paths.paths, &map, planner.top_k)
            .expect("top-k")
            .iter()
            .map(|r| paths.paths[r.index].clone())
            .collect();
        let goal = Goal::at(world.start.to_robot(world.goal));
        Fixture {
            camera,
            grid,
            mask,
            map,
            paths,
            candidates,
            goal,
            planner,
        }
    }
}
