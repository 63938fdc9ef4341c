use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::robot::RobotState;
use super::world::World;
use crate::camera::CameraModel;
use crate::costmap::{CostMap, GridSpec, LETHAL};
use crate::error::{invalid_param, Result};
use crate::mask::Mask;

/// Perception corruption applied to the oracle mask.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Noise {
    /// Independent per-pixel flip probability.
    pub flip_p: f64,
    /// Pixels eroded from traversable-region borders.
    pub erode_px: usize,
}

impl Noise {
    pub fn off() -> Self {
        Noise::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.flip_p) {
            return Err(invalid_param(format!(
                "flip_p must lie in [0, 1], got {}",
                self.flip_p
            )));
        }
        Ok(())
    }
}

/// Post-processing between the raw mask and the planner's cost map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Perception {
    /// 3x3 majority filter on the mask before projection.
    pub majority_filter: bool,
    /// Lethal cells grow by this radius before planning, meters.
    pub inflation_radius: f64,
}

impl Default for Perception {
    fn default() -> Self {
        Perception {
            majority_filter: true,
            inflation_radius: 0.25,
        }
    }
}

impl Perception {
    /// No filtering and no inflation: the planner sees the raw projection.
    pub fn raw() -> Self {
        Perception {
            majority_filter: false,
            inflation_radius: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inflation_radius >= 0.0) {
            return Err(invalid_param("inflation_radius must be >= 0"));
        }
        Ok(())
    }

    /// Mask to planner cost map.
    pub fn cost_map(&self, camera: &CameraModel, mask: &Mask, grid: &GridSpec) -> Result<CostMap> {
        let map = if self.majority_filter {
            camera.project_mask_to_bev(&mask.majority_filtered(), grid)?
        } else {
            camera.project_mask_to_bev(mask, grid)?
        };
        Ok(if self.inflation_radius > 0.0 {
            map.inflated(self.inflation_radius)
        } else {
            map
        })
    }
}

/// Ground-truth traversability seen through `camera` from `state`.
///
/// Pixels whose ray misses the ground are non-traversable. Erosion runs
/// before flipping, so `flip_p = 1` yields the exact complement of the
/// noiseless-flip result.
pub fn render_observation(
    world: &World,
    state: &RobotState,
    camera: &CameraModel,
    noise: &Noise,
    rng: &mut ChaCha8Rng,
) -> Mask {
    let (w, h) = camera.dims();
    let pose = state.pose;
    let data = camera
        .ground_points()
        .into_iter()
        .map(|g| g.is_some_and(|p| world.truth.point_cost(pose.to_world(p)) < LETHAL))
        .collect();
    let mut mask = Mask::from_vec(w, h, data).expect("dims match camera");
    for _ in 0..noise.erode_px {
        mask = mask.eroded();
    }
    if noise.flip_p > 0.0 {
        for v in 0..h {
            for u in 0..w {
                if noise.flip_p >= 1.0 || rng.gen::<f64>() < noise.flip_p {
                    let x = mask.get(u, v);
                    mask.set(u, v, !x);
                }
            }
        }
    }
    mask
}
