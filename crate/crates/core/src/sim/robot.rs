use serde::{Deserialize, Serialize};

use super::world::World;
use crate::costmap::LETHAL;
use crate::error::{invalid_param, Result};
use crate::geometry::{normalize_angle, Point};

/// Planar pose in the world frame. `theta` is measured from the world `x`
/// axis toward `z`, so positive turn rates steer left.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub x: f64,
    pub z: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, z: f64, theta: f64) -> Self {
        Pose {
            x,
            z,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.z)
    }

    fn axes(&self) -> (Point, Point) {
        let (s, c) = self.theta.sin_cos();
        // (forward, right)
        (Point::new(c, s), Point::new(s, -c))
    }

    /// Robot-frame point (`x` right, `z` forward) to world frame.
    pub fn to_world(&self, p: Point) -> Point {
        let (fwd, right) = self.axes();
        self.position() + fwd * p.z + right * p.x
    }

    /// World point to the robot frame.
    pub fn to_robot(&self, p: Point) -> Point {
        let (fwd, right) = self.axes();
        let d = p - self.position();
        Point::new(d.dot(right), d.dot(fwd))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose,
    pub v: f64,
    pub omega: f64,
}

impl RobotState {
    pub fn at(pose: Pose) -> Self {
        RobotState {
            pose,
            v: 0.0,
            omega: 0.0,
        }
    }
}

/// Velocity limits, footprint and tracking gains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotParams {
    pub v_max: f64,
    pub v_min: f64,
    pub omega_max: f64,
    pub footprint_radius: f64,
    pub lookahead: f64,
    pub gain: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        RobotParams {
            v_max: 1.0,
            v_min: 0.1,
            omega_max: 1.5,
            footprint_radius: 0.25,
            lookahead: 1.0,
            gain: 2.0,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0 && self.omega_max > 0.0 && self.footprint_radius > 0.0) {
            return Err(invalid_param(
                "v_max, omega_max and footprint_radius must be positive",
            ));
        }
        if !(self.v_min >= 0.0 && self.v_min <= self.v_max) {
            return Err(invalid_param("v_min must lie in [0, v_max]"));
        }
        if !(self.lookahead > 0.0 && self.gain > 0.0) {
            return Err(invalid_param("lookahead and gain must be positive"));
        }
        Ok(())
    }
}

/// One explicit Euler step of the unicycle model, commands clamped to limits.
pub fn step_kinematics(
    state: &RobotState,
    v_cmd: f64,
    omega_cmd: f64,
    dt: f64,
    params: &RobotParams,
) -> RobotState {
    let v = v_cmd.clamp(-params.v_max, params.v_max);
    let omega = omega_cmd.clamp(-params.omega_max, params.omega_max);
    let p = state.pose;
    let (s, c) = p.theta.sin_cos();
    RobotState {
        pose: Pose::new(p.x + v * c * dt, p.z + v * s * dt, p.theta + omega * dt),
        v,
        omega,
    }
}

/// Pure-pursuit style tracking of a world-frame path.
///
/// Steers toward the first waypoint at least `lookahead` away from the robot
/// (the last waypoint if none is), slowing down as the turn rate grows.
pub fn track_path(path: &[Point], state: &RobotState, params: &RobotParams) -> (f64, f64) {
    let Some(&last) = path.last() else {
        return (0.0, 0.0);
    };
    let here = state.pose.position();
    let target = path
        .iter()
        .copied()
        .find(|p| p.distance(here) >= params.lookahead)
        .unwrap_or(last);
    let local = state.pose.to_robot(target);
    if local.norm() < 1e-9 {
        return (0.0, 0.0);
    }
    // left-positive bearing
    let alpha = (-local.x).atan2(local.z);
    let omega = (params.gain * alpha).clamp(-params.omega_max, params.omega_max);
    let v = params.v_min + (params.v_max - params.v_min) * (1.0 - omega.abs() / params.omega_max);
    (v, omega)
}

/// True iff any lethal cell (or the outside of the map) touches the closed
/// footprint disk.
pub fn check_collision(world: &World, state: &RobotState, footprint_radius: f64) -> bool {
    let map = &world.truth;
    let spec = map.spec();
    let c = state.pose.position();
    let r = footprint_radius;
    let res = spec.resolution;
    let col_lo = ((c.x - r - spec.origin.x) / res).floor() as i64;
    let col_hi = ((c.x + r - spec.origin.x) / res).floor() as i64;
    let row_lo = ((c.z - r - spec.origin.z) / res).floor() as i64;
    let row_hi = ((c.z + r - spec.origin.z) / res).floor() as i64;
    for row in row_lo..=row_hi {
        for col in col_lo..=col_hi {
            let x0 = spec.origin.x + col as f64 * res;
            let z0 = spec.origin.z + row as f64 * res;
            let dx = (x0 - c.x).max(0.0).max(c.x - (x0 + res));
            let dz = (z0 - c.z).max(0.0).max(c.z - (z0 + res));
            if dx * dx + dz * dz > r * r {
                continue;
            }
            let inside =
                col >= 0 && row >= 0 && (col as usize) < spec.width && (row as usize) < spec.height;
            if !inside {
                return true;
            }
            let cost = map.cells()[row as usize * spec.width + col as usize];
            if cost >= LETHAL {
                return true;
            }
        }
    }
    false
}
