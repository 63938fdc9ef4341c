//! Candidate path sampling and cost scoring.
//!
//! Paths are sampled once from a seed: endpoints lie on an arc in front of
//! the robot and each endpoint is joined to the origin by a straight line and
//! by a quadratic `x(z) = a z + b z^2`. Planning cycles only re-score them.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costmap::CostMap;
use crate::error::{invalid_arg, invalid_param, Result};
use crate::geometry::Point;

/// Dense samples per quadratic before arc-length resampling.
const CURVE_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Linear,
    Quadratic,
    /// Waypoint-wise mean of other paths.
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub kind: PathKind,
    pub waypoints: Vec<Point>,
}

impl Path {
    pub fn new(kind: PathKind, waypoints: Vec<Point>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(invalid_arg(format!(
                "a path needs at least 2 waypoints, got {}",
                waypoints.len()
            )));
        }
        Ok(Path { kind, waypoints })
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn start(&self) -> Point {
        self.waypoints[0]
    }

    pub fn endpoint(&self) -> Point {
        self.waypoints[self.waypoints.len() - 1]
    }

    /// Displacement from first to last waypoint.
    pub fn heading(&self) -> Point {
        self.endpoint() - self.start()
    }

    pub fn arc_length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Waypoint-wise mean of paths that share a waypoint count.
    pub fn mean<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<Path> {
        let mut iter = paths.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| invalid_arg("mean of an empty path set"))?;
        let mut acc = first.waypoints.clone();
        let mut count = 1usize;
        for p in iter {
            if p.len() != acc.len() {
                return Err(invalid_arg("cannot average paths of different lengths"));
            }
            for (a, w) in acc.iter_mut().zip(&p.waypoints) {
                *a += *w;
            }
            count += 1;
        }
        let inv = count as f64;
        Path::new(PathKind::Mean, acc.into_iter().map(|p| p / inv).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSpec {
    /// Number of paths M.
    pub count: usize,
    /// Waypoints per path n.
    pub waypoints: usize,
    /// Endpoints lie within this angle of straight ahead (radians).
    pub fov_halfangle: f64,
    /// Radius of the endpoint arc (meters).
    pub endpoint_radius: f64,
    /// Quadratic coefficient bound `|b| <= curvature_range` (1/m).
    pub curvature_range: f64,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec {
            count: 128,
            waypoints: 20,
            fov_halfangle: 60f64.to_radians(),
            endpoint_radius: 3.5,
            curvature_range: 0.2,
        }
    }
}

impl SamplerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(invalid_param("path count must be >= 1"));
        }
        if self.waypoints < 2 {
            return Err(invalid_param("paths need >= 2 waypoints"));
        }
        if !(self.fov_halfangle > 0.0 && self.fov_halfangle <= FRAC_PI_2) {
            return Err(invalid_param(format!(
                "fov_halfangle must lie in (0, pi/2], got {}",
                self.fov_halfangle
            )));
        }
        if !(self.endpoint_radius > 0.0 && self.endpoint_radius.is_finite()) {
            return Err(invalid_param("endpoint_radius must be positive"));
        }
        if !(self.curvature_range >= 0.0 && self.curvature_range.is_finite()) {
            return Err(invalid_param("curvature_range must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<Path>,
    pub seed: u64,
    pub spec: SamplerSpec,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// JSON array of `{kind, waypoints}` objects.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.paths).expect("paths serialize")
    }
}

/// Samples the fixed candidate set. Endpoints come in pairs: a straight path
/// and a quadratic share each endpoint.
pub fn sample_paths(spec: &SamplerSpec, seed: u64) -> Result<PathSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paths = Vec::with_capacity(spec.count);
    let mut endpoint = Point::ORIGIN;
    for i in 0..spec.count {
        if i % 2 == 0 {
            let bearing = rng.gen_range(-1.0..=1.0) * spec.fov_halfangle;
            endpoint = Point::from_bearing(bearing) * spec.endpoint_radius;
            paths.push(linear_path(endpoint, spec.waypoints));
        } else {
            let b = if spec.curvature_range > 0.0 {
                rng.gen_range(-spec.curvature_range..=spec.curvature_range)
            } else {
                0.0
            };
            paths.push(quadratic_path(endpoint, b, spec.waypoints));
        }
    }
    Ok(PathSet {
        paths,
        seed,
        spec: spec.clone(),
    })
}

fn linear_path(end: Point, n: usize) -> Path {
    let waypoints = (0..n).map(|i| end * (i as f64 / (n - 1) as f64)).collect();
    Path {
        kind: PathKind::Linear,
        waypoints,
    }
}

/// `x(z) = a z + b z^2` through the origin and `end`.
fn quadratic_path(end: Point, b: f64, n: usize) -> Path {
    // near-lateral endpoints cannot be written as a function of z
    if end.z < 1e-6 * end.norm().max(1.0) {
        return Path {
            kind: PathKind::Quadratic,
            ..linear_path(end, n)
        };
    }
    let a = (end.x - b * end.z * end.z) / end.z;
    let dense: Vec<Point> = (0..=CURVE_SAMPLES)
        .map(|j| {
            let z = end.z * j as f64 / CURVE_SAMPLES as f64;
            Point::new(a * z + b * z * z, z)
        })
        .collect();
    let mut waypoints = resample_polyline(&dense, n);
    // pin the endpoint exactly
    waypoints[n - 1] = end;
    Path {
        kind: PathKind::Quadratic,
        waypoints,
    }
}

/// Resamples a polyline to `n` points equally spaced in arc length.
pub fn resample_polyline(points: &[Point], n: usize) -> Vec<Point> {
    let mut cum = Vec::with_capacity(points.len());
    let mut total = 0.0;
    cum.push(0.0);
    for w in points.windows(2) {
        total += w[0].distance(w[1]);
        cum.push(total);
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let target = total * i as f64 / (n - 1) as f64;
        while seg + 1 < points.len() - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 {
            ((target - cum[seg]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(points[seg] + (points[seg + 1] - points[seg]) * t);
    }
    out
}

/// Sum of map cost over every waypoint.
pub fn traversability_cost(path: &Path, map: &CostMap) -> f64 {
    path.waypoints.iter().map(|&p| map.point_cost(p)).sum()
}

/// Sum over waypoints after the first of `(1 - cos theta) / 2`, where theta is
/// the angle between `p_i - p_1` and the goal direction.
pub fn goal_cost(path: &Path, goal_direction: Point) -> f64 {
    let start = path.start();
    let g = goal_direction.normalized().unwrap_or(Point::new(0.0, 1.0));
    path.waypoints[1..]
        .iter()
        .map(|&p| match (p - start).normalized() {
            Some(d) => ((1.0 - d.dot(g)) / 2.0).clamp(0.0, 1.0),
            None => 0.0,
        })
        .sum()
}

pub fn combined_cost(path: &Path, map: &CostMap, goal_direction: Point, beta: f64) -> f64 {
    traversability_cost(path, map) + beta * goal_cost(path, goal_direction)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedPath {
    /// Index into the scored path slice.
    pub index: usize,
    pub cost: f64,
}

/// The `k` lowest traversability-cost paths, ties broken by index.
pub fn top_k(paths: &[Path], map: &CostMap, k: usize) -> Result<Vec<RankedPath>> {
    if k == 0 || k > paths.len() {
        return Err(invalid_arg(format!(
            "top_k needs 1 <= k <= {}, got {k}",
            paths.len()
        )));
    }
    let mut ranked: Vec<RankedPath> = paths
        .iter()
        .enumerate()
        .map(|(index, p)| RankedPath {
            index,
            cost: traversability_cost(p, map),
        })
        .collect();
    ranked.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.index.cmp(&b.index)));
    ranked.truncate(k);
    Ok(ranked)
}
