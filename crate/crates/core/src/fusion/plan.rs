use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    adaptive_kmeans, merge_centroids, select_angular, select_euclidean, FusionConfig,
    RepresentativeSet,
};
use crate::costmap::CostMap;
use crate::error::{invalid_arg, invalid_param, Error, Result};
use crate::geometry::Point;
use crate::paths::{combined_cost, goal_cost, top_k, Path, PathSet};

/// How the final path is picked from the top-K candidates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    /// Argmin of `f + beta * g` over the top-K paths.
    NoFusion { beta: f64 },
    /// Adaptive k-means without merging, angular selection.
    KmeansOnly,
    /// Merge, then the endpoint nearest the goal point.
    Euclidean,
    /// Merge, then the heading best aligned with the goal direction.
    Angular,
}

impl Strategy {
    /// Short label: `nf`, `km`, `es` or `angular`.
    pub fn short_name(&self) -> &'static str {
        match self {
            Strategy::NoFusion { .. } => "nf",
            Strategy::KmeansOnly => "km",
            Strategy::Euclidean => "es",
            Strategy::Angular => "angular",
        }
    }

    /// Parses `nf:<beta>`, `nf` (beta 1), `km`, `es` or `angular`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "km" | "kmeans" | "kmeans_only" => Ok(Strategy::KmeansOnly),
            "es" | "euclidean" => Ok(Strategy::Euclidean),
            "angular" | "as" => Ok(Strategy::Angular),
            "nf" | "no_fusion" => Ok(Strategy::NoFusion { beta: 1.0 }),
            _ => {
                let beta = s
                    .strip_prefix("nf:")
                    .or_else(|| s.strip_prefix("nf="))
                    .and_then(|b| b.parse::<f64>().ok())
                    .ok_or_else(|| invalid_arg(format!("unknown strategy {s:?}")))?;
                if !(beta >= 0.0 && beta.is_finite()) {
                    return Err(invalid_param(format!("beta must be >= 0, got {beta}")));
                }
                Ok(Strategy::NoFusion { beta })
            }
        }
    }

    pub fn merges(&self) -> bool {
        matches!(self, Strategy::Euclidean | Strategy::Angular)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::NoFusion { beta } => write!(f, "nf:{beta}"),
            other => f.write_str(other.short_name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub top_k: usize,
    pub fusion: FusionConfig,
    pub strategy: Strategy,
    /// Planning fails when every top-K path costs at least this fraction of
    /// its waypoint count.
    pub lethal_fraction: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            top_k: 32,
            fusion: FusionConfig::default(),
            strategy: Strategy::Angular,
            lethal_fraction: 0.9,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(invalid_param("top_k must be >= 1"));
        }
        if !(self.lethal_fraction > 0.0 && self.lethal_fraction <= 1.0) {
            return Err(invalid_param("lethal_fraction must lie in (0, 1]"));
        }
        if let Strategy::NoFusion { beta } = self.strategy {
            if !(beta >= 0.0 && beta.is_finite()) {
                return Err(invalid_param("beta must be >= 0"));
            }
        }
        self.fusion.validate()
    }
}

/// Goal expressed in the robot frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    /// Unit vector toward the goal.
    pub direction: Point,
    /// Goal position.
    pub point: Point,
}

impl Goal {
    pub fn at(point: Point) -> Self {
        let direction = point.normalized().unwrap_or(Point::new(0.0, 1.0));
        Goal { direction, point }
    }

    /// Goal at `distance` along `bearing` (right-positive from forward).
    pub fn from_bearing(bearing: f64, distance: f64) -> Self {
        let direction = Point::from_bearing(bearing);
        Goal {
            direction,
            point: direction * distance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    /// Index into the path set.
    pub index: usize,
    pub traversability: f64,
    pub goal: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanDiagnostics {
    pub strategy: String,
    /// Cluster count chosen by adaptive k-means (absent without fusion).
    pub k: Option<usize>,
    pub silhouette_loss: Option<f64>,
    pub representatives: Vec<Path>,
    /// Cluster ids behind each representative.
    pub provenance: Vec<Vec<usize>>,
    /// Index into `representatives`, or into `costs` without fusion.
    pub selected_index: usize,
    pub selected: Path,
    /// Top-K candidates in rank order.
    pub costs: Vec<CostRecord>,
}

impl PlanDiagnostics {
    pub fn merge_count(&self) -> usize {
        self.provenance
            .iter()
            .map(|g| g.len().saturating_sub(1))
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("diagnostics serialize")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanOutcome {
    pub path: Path,
    pub diagnostics: PlanDiagnostics,
}

/// Top-K filtering, then either the no-fusion argmin or adaptive k-means,
/// optional merging and goal-directed selection.
pub fn plan(
    pathset: &PathSet,
    map: &CostMap,
    goal: &Goal,
    config: &PlannerConfig,
) -> Result<PlanOutcome> {
    config.validate()?;
    if pathset.is_empty() {
        return Err(invalid_arg("empty path set"));
    }
    let k = config.top_k.min(pathset.len());
    let ranked = top_k(&pathset.paths, map, k)?;
    let n = pathset.paths[0].len() as f64;
    let limit = config.lethal_fraction * n;
    if ranked[0].cost >= limit {
        return Err(Error::NoPath {
            best_cost: ranked[0].cost,
            limit,
        });
    }
    let costs: Vec<CostRecord> = ranked
        .iter()
        .map(|r| CostRecord {
            index: r.index,
            traversability: r.cost,
            goal: goal_cost(&pathset.paths[r.index], goal.direction),
        })
        .collect();

    if let Strategy::NoFusion { beta } = config.strategy {
        let mut best = 0;
        let mut best_cost = f64::INFINITY;
        for (i, r) in ranked.iter().enumerate() {
            let c = combined_cost(&pathset.paths[r.index], map, goal.direction, beta);
            if c < best_cost {
                best_cost = c;
                best = i;
            }
        }
        let selected = pathset.paths[ranked[best].index].clone();
        return Ok(PlanOutcome {
            path: selected.clone(),
            diagnostics: PlanDiagnostics {
                strategy: config.strategy.to_string(),
                k: None,
                silhouette_loss: None,
                representatives: Vec::new(),
                provenance: Vec::new(),
                selected_index: best,
                selected,
                costs,
            },
        });
    }

    let candidates: Vec<Path> = ranked
        .iter()
        .map(|r| pathset.paths[r.index].clone())
        .collect();
    let adaptive = adaptive_kmeans(&candidates, &config.fusion)?;
    let reps = if config.strategy.merges() {
        merge_centroids(
            &candidates,
            &adaptive.clustering,
            config.fusion.merge_threshold,
        )?
    } else {
        RepresentativeSet::unmerged(&adaptive.clustering)
    };
    let selected_index = match config.strategy {
        Strategy::Euclidean => select_euclidean(&reps.representatives, goal.point)?,
        _ => select_angular(&reps.representatives, goal.direction)?,
    };
    let selected = reps.representatives[selected_index].clone();
    Ok(PlanOutcome {
        path: selected.clone(),
        diagnostics: PlanDiagnostics {
            strategy: config.strategy.to_string(),
            k: Some(adaptive.clustering.k),
            silhouette_loss: adaptive.silhouette_loss,
            representatives: reps.representatives,
            provenance: reps.provenance,
            selected_index,
            selected,
            costs,
        },
    })
}
