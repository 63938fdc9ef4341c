//! Synthetic worlds, an oracle traversability sensor, a unicycle robot and
//! the receding-horizon mission loop.

mod mission;
mod replay;
mod robot;
mod sensor;
mod world;

pub use mission::{
    mission_score, run_mission, Checkpoint, Mission, Mode, Outcome, OutcomeRecord, RecoveryParams,
    SimConfig, SimLog, StepRecord,
};
pub use replay::replay;
pub use robot::{check_collision, step_kinematics, track_path, Pose, RobotParams, RobotState};
pub use sensor::{render_observation, Noise, Perception};
pub use world::{
    fork_branches, synthesize_world, Branch, ExplicitWorld, ScenarioKind, World, WorldFile,
    WorldParams, WorldSpec,
};
