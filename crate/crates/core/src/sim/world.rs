use std::path::Path as FsPath;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::robot::Pose;
use crate::costmap::{CostMap, GridSpec, FREE, LETHAL};
use crate::error::{invalid_param, Error, Result};
use crate::geometry::{distance_to_polyline, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Open,
    Corridor,
    Fork,
    ForkWithDeadend,
    ObstacleField,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Open => "open",
            ScenarioKind::Corridor => "corridor",
            ScenarioKind::Fork => "fork",
            ScenarioKind::ForkWithDeadend => "fork_with_deadend",
            ScenarioKind::ObstacleField => "obstacle_field",
        }
    }
}

/// Shape parameters; each scenario reads the fields it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldParams {
    pub resolution: f64,
    /// Forward extent of open, corridor and obstacle-field worlds.
    pub length: f64,
    /// Corridor width, also the width of the fork stem.
    pub width: f64,
    pub stem_length: f64,
    /// Branch bearing magnitude, radians.
    pub branch_angle: f64,
    pub branch_length: f64,
    pub branch_width: f64,
    /// Non-goal branch overrides; the goal branch values apply if unset.
    /// In `fork_with_deadend` the non-goal branch is the dead end.
    pub other_angle: Option<f64>,
    pub other_length: Option<f64>,
    pub other_width: Option<f64>,
    /// Straight (+z) continuation of the goal-correct branch past its end.
    pub bend_length: f64,
    /// Goal-correct branch (0 = left, 1 = right); drawn from the seed if unset.
    pub goal_branch: Option<usize>,
    /// Obstacles per square meter.
    pub obstacle_density: f64,
    pub obstacle_radius: [f64; 2],
    /// Rocks per square meter scattered inside fork branches.
    pub branch_clutter: f64,
    /// Lethal border kept around the free space.
    pub margin: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            resolution: 0.05,
            length: 20.0,
            width: 2.0,
            stem_length: 4.0,
            branch_angle: 30f64.to_radians(),
            branch_length: 10.0,
            branch_width: 2.0,
            other_angle: None,
            other_length: None,
            other_width: None,
            bend_length: 0.0,
            goal_branch: None,
            obstacle_density: 0.04,
            obstacle_radius: [0.2, 0.5],
            branch_clutter: 0.0,
            margin: 2.0,
        }
    }
}

impl WorldParams {
    /// Defaults per scenario. The dead-end fork uses a greedy trap: the
    /// goal-correct branch leaves at a steep angle and bends back toward a
    /// distant goal, while a wide dead end opens at a shallower angle.
    pub fn preset(kind: ScenarioKind) -> WorldParams {
        match kind {
            ScenarioKind::ForkWithDeadend => WorldParams {
                branch_angle: 0.6,
                branch_length: 3.0,
                branch_width: 1.4,
                bend_length: 10.0,
                other_angle: Some(0.35),
                other_length: Some(7.0),
                other_width: Some(4.0),
                ..WorldParams::default()
            },
            _ => WorldParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("resolution", self.resolution),
            ("length", self.length),
            ("width", self.width),
            ("stem_length", self.stem_length),
            ("branch_length", self.branch_length),
            ("branch_width", self.branch_width),
            ("other_length", self.other_length.unwrap_or(1.0)),
            ("other_width", self.other_width.unwrap_or(1.0)),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid_param(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, a) in [
            ("branch_angle", Some(self.branch_angle)),
            ("other_angle", self.other_angle),
        ] {
            if matches!(a, Some(a) if !(a > 0.0 && a < std::f64::consts::FRAC_PI_2)) {
                return Err(invalid_param(format!("{name} must lie in (0, pi/2)")));
            }
        }
        if matches!(self.goal_branch, Some(b) if b > 1) {
            return Err(invalid_param("goal_branch must be 0 or 1"));
        }
        let [lo, hi] = self.obstacle_radius;
        if !(lo > 0.0 && hi >= lo)
            || self.obstacle_density < 0.0
            || self.branch_clutter < 0.0
            || self.margin < 0.0
            || self.bend_length < 0.0
        {
            return Err(invalid_param("bad obstacle or margin parameters"));
        }
        Ok(())
    }
}

/// Ground-truth corridor label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub polyline: Vec<Point>,
    pub width: f64,
    pub goal_correct: bool,
}

impl Branch {
    /// Whether `p` lies inside the corridor: the polyline dilated by half
    /// the width, cut flat at the first vertex so a corridor does not reach
    /// back past its own mouth.
    pub fn contains(&self, p: Point) -> bool {
        if let [a, b, ..] = self.polyline[..] {
            if (p - a).dot(b - a) < 0.0 {
                return false;
            }
        }
        distance_to_polyline(p, &self.polyline) <= self.width / 2.0
    }
}

/// Regenerable world description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub scenario_kind: ScenarioKind,
    /// Overrides applied on top of `WorldParams::preset(scenario_kind)`.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
}

impl WorldSpec {
    pub fn params(&self) -> Result<WorldParams> {
        let mut base = serde_json::to_value(WorldParams::preset(self.scenario_kind))
            .expect("params serialize");
        match &self.params {
            serde_json::Value::Null => {}
            serde_json::Value::Object(over) => {
                let map = base.as_object_mut().expect("params are an object");
                for (k, v) in over {
                    map.insert(k.clone(), v.clone());
                }
            }
            _ => return Err(Error::Parse("world params must be an object".into())),
        }
        let params: WorldParams =
            serde_json::from_value(base).map_err(|e| Error::Parse(format!("world params: {e}")))?;
        params.validate()?;
        Ok(params)
    }
}

/// World stored as an explicit cost-map file plus annotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitWorld {
    /// Cost-map file, relative to the world file.
    pub grid: String,
    #[serde(default)]
    pub branches: Vec<Branch>,
    pub start: Pose,
    pub goal: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorldFile {
    Generated(WorldSpec),
    Explicit(ExplicitWorld),
}

#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub kind: Option<ScenarioKind>,
    pub truth: CostMap,
    pub branches: Vec<Branch>,
    pub start: Pose,
    /// Natural mission goal (end of the goal-correct route).
    pub goal: Point,
    /// Reference route from start to goal.
    pub route: Vec<Point>,
}

enum Shape {
    Capsule(Vec<Point>, f64),
    Rect(Point, Point),
}

impl Shape {
    fn contains(&self, p: Point) -> bool {
        match self {
            Shape::Capsule(poly, w) => distance_to_polyline(p, poly) <= w / 2.0,
            Shape::Rect(lo, hi) => p.x >= lo.x && p.x <= hi.x && p.z >= lo.z && p.z <= hi.z,
        }
    }

    fn bounds(&self) -> (Point, Point) {
        match self {
            Shape::Capsule(poly, w) => {
                let r = w / 2.0;
                let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
                let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for p in poly {
                    lo = Point::new(lo.x.min(p.x - r), lo.z.min(p.z - r));
                    hi = Point::new(hi.x.max(p.x + r), hi.z.max(p.z + r));
                }
                (lo, hi)
            }
            Shape::Rect(lo, hi) => (*lo, *hi),
        }
    }
}

/// The two fork corridors, left (index 0) then right, starting at the
/// junction.
pub fn fork_branches(p: &WorldParams, correct: usize) -> Vec<Branch> {
    let junction = Point::new(0.0, p.stem_length);
    (0..2)
        .map(|side| {
            let (angle, len, width) = if side == correct {
                (p.branch_angle, p.branch_length, p.branch_width)
            } else {
                (
                    p.other_angle.unwrap_or(p.branch_angle),
                    p.other_length.unwrap_or(p.branch_length),
                    p.other_width.unwrap_or(p.branch_width),
                )
            };
            let bearing = if side == 0 { -angle } else { angle };
            let end = junction + Point::from_bearing(bearing) * len;
            let mut polyline = vec![junction, end];
            if side == correct && p.bend_length > 0.0 {
                polyline.push(end + Point::new(0.0, p.bend_length));
            }
            Branch {
                polyline,
                width,
                goal_correct: side == correct,
            }
        })
        .collect()
}

/// Free area behind the start so the robot never spawns against a wall.
const BACKSTOP: f64 = 1.5;

pub fn synthesize_world(kind: ScenarioKind, params: &WorldParams, seed: u64) -> Result<World> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = params;
    let start = Pose::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
    let mut shapes = Vec::new();
    let mut branches = Vec::new();
    let mut obstacles = Vec::new();
    let (goal, route) = match kind {
        ScenarioKind::Open | ScenarioKind::ObstacleField => {
            let half = p.length / 2.0;
            shapes.push(Shape::Rect(
                Point::new(-half, -BACKSTOP),
                Point::new(half, p.length),
            ));
            let goal = Point::new(0.0, p.length - 2.0);
            if kind == ScenarioKind::ObstacleField {
                let area = p.length * (p.length + BACKSTOP);
                let count = (area * p.obstacle_density).round() as usize;
                for _ in 0..count {
                    let c = Point::new(
                        rng.gen_range(-half..half),
                        rng.gen_range(-BACKSTOP..p.length),
                    );
                    let r = rng.gen_range(p.obstacle_radius[0]..=p.obstacle_radius[1]);
                    // keep the start and goal neighbourhoods clear
                    if c.norm() > r + 1.5 && c.distance(goal) > r + 1.0 {
                        obstacles.push((c, r));
                    }
                }
            }
            (goal, vec![Point::ORIGIN, goal])
        }
        ScenarioKind::Corridor => {
            let axis = vec![Point::new(0.0, -BACKSTOP), Point::new(0.0, p.length)];
            shapes.push(Shape::Capsule(axis, p.width));
            branches.push(Branch {
                polyline: vec![Point::ORIGIN, Point::new(0.0, p.length)],
                width: p.width,
                goal_correct: true,
            });
            let goal = Point::new(0.0, p.length - 1.5);
            (goal, vec![Point::ORIGIN, goal])
        }
        ScenarioKind::Fork | ScenarioKind::ForkWithDeadend => {
            let junction = Point::new(0.0, p.stem_length);
            shapes.push(Shape::Capsule(
                vec![Point::new(0.0, -BACKSTOP), junction],
                p.width,
            ));
            let correct = p.goal_branch.unwrap_or_else(|| rng.gen_range(0..2));
            branches = fork_branches(p, correct);
            for b in &branches {
                shapes.push(Shape::Capsule(b.polyline.clone(), b.width));
            }
            let poly = &branches[correct].polyline;
            let (last, prev) = (poly[poly.len() - 1], poly[poly.len() - 2]);
            let goal = last - (last - prev).normalized().unwrap_or(Point::ORIGIN) * 1.5;
            if p.branch_clutter > 0.0 {
                obstacles = scatter_rocks(&branches, junction, goal, p, &mut rng);
            }
            let mut route = poly[..poly.len() - 1].to_vec();
            route.push(goal);
            route.insert(0, Point::ORIGIN);
            (goal, route)
        }
    };
    let mut world = rasterize(&shapes, &obstacles, p)?;
    world.kind = Some(kind);
    world.branches = branches;
    world.start = start;
    world.goal = goal;
    world.route = route;
    Ok(world)
}

/// Rocks inside the branch corridors, clear of the junction mouth and goal.
fn scatter_rocks(
    branches: &[Branch],
    junction: Point,
    goal: Point,
    p: &WorldParams,
    rng: &mut ChaCha8Rng,
) -> Vec<(Point, f64)> {
    let mut rocks = Vec::new();
    for b in branches {
        let length: f64 = b.polyline.windows(2).map(|w| w[0].distance(w[1])).sum();
        let count = (length * b.width * p.branch_clutter).round() as usize;
        let mut placed = 0;
        for _ in 0..count * 20 {
            if placed == count {
                break;
            }
            let t = rng.gen_range(0.0..length);
            let c = point_along(&b.polyline, t);
            let dir = point_along(&b.polyline, (t + 1e-3).min(length)) - c;
            let side = Point::new(dir.z, -dir.x)
                .normalized()
                .unwrap_or(Point::ORIGIN);
            let c = c + side * rng.gen_range(-b.width / 2.0..b.width / 2.0);
            let r = rng.gen_range(p.obstacle_radius[0]..=p.obstacle_radius[1]);
            if c.distance(junction) > r + 1.5 && c.distance(goal) > r + 1.0 {
                rocks.push((c, r));
                placed += 1;
            }
        }
    }
    rocks
}

fn point_along(poly: &[Point], mut t: f64) -> Point {
    for w in poly.windows(2) {
        let len = w[0].distance(w[1]);
        if t <= len {
            return w[0] + (w[1] - w[0]) * (t / len);
        }
        t -= len;
    }
    poly[poly.len() - 1]
}

fn rasterize(shapes: &[Shape], obstacles: &[(Point, f64)], p: &WorldParams) -> Result<World> {
    let res = p.resolution;
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in shapes {
        let (a, b) = s.bounds();
        lo = Point::new(lo.x.min(a.x), lo.z.min(a.z));
        hi = Point::new(hi.x.max(b.x), hi.z.max(b.z));
    }
    // snap the origin to the cell lattice so robot-aligned grids line up
    let origin = Point::new(
        ((lo.x - p.margin) / res).floor() * res,
        ((lo.z - p.margin) / res).floor() * res,
    );
    let width = ((hi.x + p.margin - origin.x) / res).ceil() as usize;
    let height = ((hi.z + p.margin - origin.z) / res).ceil() as usize;
    let spec = GridSpec {
        resolution: res,
        width,
        height,
        origin,
        unknown_cost: LETHAL,
    };
    let mut cells = vec![LETHAL; spec.cell_count()];
    for row in 0..height {
        for col in 0..width {
            let c = Point::new(
                origin.x + (col as f64 + 0.5) * res,
                origin.z + (row as f64 + 0.5) * res,
            );
            let free = shapes.iter().any(|s| s.contains(c))
                && !obstacles.iter().any(|&(o, r)| c.distance(o) <= r);
            if free {
                cells[row * width + col] = FREE;
            }
        }
    }
    Ok(World {
        kind: None,
        truth: CostMap::from_cells(spec, cells)?,
        branches: Vec::new(),
        start: Pose::default(),
        goal: Point::ORIGIN,
        route: Vec::new(),
    })
}

impl World {
    pub fn from_spec(spec: &WorldSpec) -> Result<World> {
        synthesize_world(spec.scenario_kind, &spec.params()?, spec.seed)
    }

    /// Loads a world file, regenerating or reading the grid it points to.
    pub fn load(path: &FsPath) -> Result<World> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: WorldFile = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        match file {
            WorldFile::Generated(spec) => World::from_spec(&spec),
            WorldFile::Explicit(ex) => {
                let dir = path.parent().unwrap_or(FsPath::new("."));
                let truth = CostMap::load(&dir.join(&ex.grid))?;
                Ok(World {
                    kind: None,
                    truth,
                    branches: ex.branches,
                    start: ex.start,
                    goal: ex.goal,
                    route: vec![Point::new(ex.start.x, ex.start.z), ex.goal],
                })
            }
        }
    }

    pub fn is_lethal(&self, p: Point) -> bool {
        self.truth.point_cost(p) >= LETHAL
    }

    pub fn route_length(&self) -> f64 {
        self.route.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Index of the goal-correct branch, if any.
    pub fn correct_branch(&self) -> Option<usize> {
        self.branches.iter().position(|b| b.goal_correct)
    }

    pub fn extent(&self) -> (Point, Point) {
        (self.truth.spec().origin, self.truth.spec().max_corner())
    }
}
