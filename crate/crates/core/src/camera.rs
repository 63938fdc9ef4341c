//! Per-pixel ray camera model and ground-plane projection.
//!
//! Camera frame: `x` right, `y` up, `z` forward. Image frame: `u` right, `v`
//! down. A ray `d` meets the ground plane `y = -h` at `s * d` with
//! `s = -h / d.y`, which is only meaningful for rays pointing below the
//! horizon.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::costmap::{CostMap, GridSpec, FREE, LETHAL};
use crate::error::{invalid_arg, invalid_param, Error, Result};
use crate::geometry::Point;
use crate::mask::Mask;

/// Rays with `y >= -HORIZON_EPS` are treated as never reaching the ground.
pub const HORIZON_EPS: f64 = 1e-6;

/// Ground-plane intersection in the robot frame (`x` lateral, `z` forward).
pub type GroundPoint = Point;

pub type Ray = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinholeParams {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Rotation about the camera `x` axis; negative looks down.
    #[serde(default)]
    pub pitch: f64,
}

/// Serializable pinhole camera description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSpec {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub pitch: f64,
    pub mount_height: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        CameraSpec {
            width: 320,
            height: 240,
            fx: 160.0,
            fy: 160.0,
            cx: 160.0,
            cy: 120.0,
            pitch: -0.45,
            mount_height: 1.0,
        }
    }
}

impl CameraSpec {
    pub fn build(&self) -> Result<CameraModel> {
        CameraModel::pinhole(
            PinholeParams {
                fx: self.fx,
                fy: self.fy,
                cx: self.cx,
                cy: self.cy,
                pitch: self.pitch,
            },
            self.mount_height,
            (self.width, self.height),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CameraModel {
    width: usize,
    height: usize,
    mount_height: f64,
    rays: Vec<Ray>,
}

fn norm3(r: &Ray) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

impl CameraModel {
    /// Builds the ray table of an undistorted pinhole camera.
    pub fn pinhole(params: PinholeParams, mount_height: f64, dims: (usize, usize)) -> Result<Self> {
        let PinholeParams {
            fx,
            fy,
            cx,
            cy,
            pitch,
        } = params;
        if !(fx > 0.0 && fy > 0.0) {
            return Err(invalid_param(format!(
                "focal lengths must be positive (fx={fx}, fy={fy})"
            )));
        }
        if !(mount_height > 0.0) {
            return Err(invalid_param(format!(
                "camera height must be positive, got {mount_height}"
            )));
        }
        if dims.0 == 0 || dims.1 == 0 {
            return Err(invalid_param("image dimensions must be non-zero"));
        }
        let (sp, cp) = pitch.sin_cos();
        let mut rays = Vec::with_capacity(dims.0 * dims.1);
        for v in 0..dims.1 {
            for u in 0..dims.0 {
                let x = (u as f64 - cx) / fx;
                // image v grows downward, camera y grows upward
                let y = -(v as f64 - cy) / fy;
                let z = 1.0;
                let r = [x, y * cp + z * sp, -y * sp + z * cp];
                let n = norm3(&r);
                rays.push([r[0] / n, r[1] / n, r[2] / n]);
            }
        }
        Ok(CameraModel {
            width: dims.0,
            height: dims.1,
            mount_height,
            rays,
        })
    }

    /// Wraps an externally calibrated ray table, renormalizing every ray.
    pub fn from_rays(dims: (usize, usize), rays: Vec<Ray>, mount_height: f64) -> Result<Self> {
        if !(mount_height > 0.0) {
            return Err(invalid_param(format!(
                "camera height must be positive, got {mount_height}"
            )));
        }
        if dims.0 == 0 || dims.1 == 0 || rays.len() != dims.0 * dims.1 {
            return Err(invalid_arg(format!(
                "ray table holds {} rays for a {}x{} image",
                rays.len(),
                dims.0,
                dims.1
            )));
        }
        let mut out = Vec::with_capacity(rays.len());
        for (i, r) in rays.into_iter().enumerate() {
            let n = norm3(&r);
            if !(n > 0.0 && n.is_finite()) {
                return Err(invalid_arg(format!(
                    "ray {i} has zero or non-finite length"
                )));
            }
            out.push([r[0] / n, r[1] / n, r[2] / n]);
        }
        Ok(CameraModel {
            width: dims.0,
            height: dims.1,
            mount_height,
            rays: out,
        })
    }

    /// Parses the text ray-table format: `width height`, then one `dx dy dz`
    /// line per pixel in row-major order.
    pub fn parse_ray_table(text: &str, mount_height: f64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty ray table".into()))?;
        let dims: Vec<usize> = header
            .split_ascii_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("bad ray table header {header:?}")))?;
        let [w, h] = dims[..] else {
            return Err(Error::Parse(format!("bad ray table header {header:?}")));
        };
        let mut rays = Vec::with_capacity(w * h);
        for (i, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split_ascii_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse(format!("bad ray on line {}: {line:?}", i + 2)))?;
            let [dx, dy, dz] = vals[..] else {
                return Err(Error::Parse(format!(
                    "ray on line {} needs 3 values",
                    i + 2
                )));
            };
            rays.push([dx, dy, dz]);
        }
        if rays.len() != w * h {
            return Err(Error::Parse(format!(
                "ray table declares {w}x{h} but holds {} rays",
                rays.len()
            )));
        }
        Self::from_rays((w, h), rays, mount_height).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load_ray_table(path: &Path, mount_height: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_ray_table(&text, mount_height)
    }

    pub fn to_ray_table(&self) -> String {
        use std::fmt::Write as _;
        let mut out = format!("{} {}\n", self.width, self.height);
        for r in &self.rays {
            let _ = writeln!(out, "{} {} {}", r[0], r[1], r[2]);
        }
        out
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn mount_height(&self) -> f64 {
        self.mount_height
    }

    pub fn rays(&self) -> &[Ray] {
        &self.rays
    }

    pub fn ray(&self, u: usize, v: usize) -> Result<Ray> {
        if u >= self.width || v >= self.height {
            return Err(invalid_arg(format!(
                "pixel ({u}, {v}) outside {}x{} image",
                self.width, self.height
            )));
        }
        Ok(self.rays[v * self.width + u])
    }

    pub fn ground_intersect(&self, u: usize, v: usize) -> Result<Option<GroundPoint>> {
        Ok(intersect_ground(&self.ray(u, v)?, self.mount_height))
    }

    /// Ground intersections for every pixel, row-major.
    pub fn ground_points(&self) -> Vec<Option<GroundPoint>> {
        self.rays
            .iter()
            .map(|r| intersect_ground(r, self.mount_height))
            .collect()
    }

    /// Projects an image-space mask into a BEV cost map.
    ///
    /// Cells hit only by traversable pixels become free, cells hit by any
    /// non-traversable pixel become lethal, and cells no pixel reaches stay at
    /// the unknown cost.
    pub fn project_mask_to_bev(&self, mask: &Mask, grid: &GridSpec) -> Result<CostMap> {
        if mask.dims() != self.dims() {
            return Err(invalid_arg(format!(
                "mask is {}x{} but camera is {}x{}",
                mask.width(),
                mask.height(),
                self.width,
                self.height
            )));
        }
        let mut map = CostMap::new(grid.clone())?;
        // 0 = no evidence, 1 = free only, 2 = obstacle seen
        let mut evidence = vec![0u8; grid.cell_count()];
        for (ray, &traversable) in self.rays.iter().zip(mask.data()) {
            let Some(p) = intersect_ground(ray, self.mount_height) else {
                continue;
            };
            let Some(idx) = map.cell_of(p) else {
                continue;
            };
            let e = &mut evidence[idx.row * grid.width + idx.col];
            *e = if traversable { (*e).max(1) } else { 2 };
        }
        let (mut free, mut blocked) = (Vec::new(), Vec::new());
        for idx in map.indices() {
            match evidence[idx.row * grid.width + idx.col] {
                1 => free.push(idx),
                2 => blocked.push(idx),
                _ => {}
            }
        }
        map.set_cells(&free, FREE)?;
        map.set_cells(&blocked, LETHAL)?;
        Ok(map)
    }
}

/// Solves `s * d = (., -h, .)` for `s` and returns the planar point
/// `(s * d.x, s * d.z)`, or `None` when the ray does not point below the
/// horizon.
pub fn intersect_ground(ray: &Ray, mount_height: f64) -> Option<GroundPoint> {
    if ray[1] >= -HORIZON_EPS {
        return None;
    }
    let s = -mount_height / ray[1];
    Some(Point::new(s * ray[0], s * ray[2]))
}
