//! Run configuration: a JSON file merged over defaults, then flag overrides.

use std::path::Path;

use pathfuse_core::camera::CameraSpec;
use pathfuse_core::eval::ObservationConfig;
use pathfuse_core::sim::SimConfig;
use pathfuse_core::{PlannerConfig, Strategy};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a command needs. Sampler, grid, noise and perception live
/// under `sim` and are shared by `plan` and `bench`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub camera: CameraSpec,
    pub planner: PlannerConfig,
    pub sim: SimConfig,
    pub eval: EvalConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Path-set seeds averaged by the beta sweep.
    pub beta_seeds: Vec<u64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            beta_seeds: (0..5).collect(),
        }
    }
}

/// Flag overrides shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub strategy: Option<String>,
    pub merge_threshold: Option<f64>,
    pub top_k: Option<usize>,
    pub flip_p: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, o: &Overrides) -> Result<RunConfig, CliError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = o.seed {
            config.seed = seed;
        }
        if let Some(s) = &o.strategy {
            config.planner.strategy = Strategy::parse(s)?;
        }
        if let Some(t) = o.merge_threshold {
            config.planner.fusion.merge_threshold = t;
        }
        if let Some(k) = o.top_k {
            config.planner.top_k = k;
        }
        if let Some(p) = o.flip_p {
            config.sim.noise.flip_p = p;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.camera.build()?;
        self.planner.validate()?;
        self.sim.validate()?;
        if self.eval.beta_seeds.is_empty() {
            return Err(CliError::Config("eval.beta_seeds must not be empty".into()));
        }
        Ok(())
    }

    pub fn observation(&self) -> ObservationConfig {
        ObservationConfig {
            camera: self.camera.clone(),
            grid: self.sim.grid.clone(),
            perception: self.sim.perception.clone(),
        }
    }
}
