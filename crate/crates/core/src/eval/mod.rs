//! Fusion quality metrics and benchmark sweeps.
//!
//! A [`FusionCase`] pairs a cost map with labelled corridor polylines in the
//! robot frame. Representatives are assigned to a corridor when a strict
//! majority of their waypoints lie inside it; merge events and selection
//! accuracy follow from that assignment.

mod suite;
mod sweep;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::costmap::{CostMap, GridSpec};
use crate::error::{invalid_arg, Error, Result};
use crate::fusion::{plan, Goal, PlanDiagnostics, PlannerConfig};
use crate::geometry::Point;
use crate::mask::Mask;
use crate::paths::{Path, PathSet};
use crate::sim::{render_observation, Branch, Noise, Perception, Pose, RobotState, World};

pub use suite::{
    build_suite, fork_suite, load_suite, write_suite, CaseSpec, ObservationConfig, SuiteEntry,
    SuiteFamily,
};
pub use sweep::{
    bench_csv, beta_sweep, beta_sweep_csv, beta_sweep_svg, pr_sweep, pr_sweep_csv, pr_sweep_svg,
    BetaPoint, PrPoint,
};

/// Intersection over union of the traversable pixels. Two empty masks
/// score 1.
pub fn iou(pred: &Mask, gt: &Mask) -> Result<f64> {
    if pred.dims() != gt.dims() {
        return Err(invalid_arg(format!(
            "mask dimensions differ: {:?} vs {:?}",
            pred.dims(),
            gt.dims()
        )));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&a, &b) in pred.data().iter().zip(gt.data()) {
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// One labelled planning problem, everything in the robot frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionCase {
    pub name: String,
    pub costmap: CostMap,
    pub branches: Vec<Branch>,
    pub correct_branch: usize,
    pub goal: Goal,
}

impl FusionCase {
    pub fn new(
        name: impl Into<String>,
        costmap: CostMap,
        branches: Vec<Branch>,
        correct_branch: usize,
        goal: Goal,
    ) -> Result<Self> {
        if correct_branch >= branches.len() {
            return Err(invalid_arg(format!(
                "correct branch {correct_branch} out of range for {} branches",
                branches.len()
            )));
        }
        Ok(FusionCase {
            name: name.into(),
            costmap,
            branches,
            correct_branch,
            goal,
        })
    }

    /// Observes `world` from `pose` and expresses labels and goal in the
    /// robot frame. The goal-correct branch comes from the world labels.
    #[allow(clippy::too_many_arguments)]
    pub fn from_world(
        name: impl Into<String>,
        world: &World,
        pose: Pose,
        goal: Point,
        camera: &CameraModel,
        perception: &Perception,
        noise: &Noise,
        grid: &GridSpec,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> Result<Self> {
        let correct = world
            .correct_branch()
            .ok_or_else(|| invalid_arg("world has no goal-correct branch"))?;
        let mask = render_observation(world, &RobotState::at(pose), camera, noise, rng);
        let costmap = perception.cost_map(camera, &mask, grid)?;
        let branches = world
            .branches
            .iter()
            .map(|b| Branch {
                polyline: b.polyline.iter().map(|&p| pose.to_robot(p)).collect(),
                width: b.width,
                goal_correct: b.goal_correct,
            })
            .collect();
        FusionCase::new(
            name,
            costmap,
            branches,
            correct,
            Goal::at(pose.to_robot(goal)),
        )
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }
}

/// Branches holding a strict majority of the path's waypoints.
pub fn membership(path: &Path, branches: &[Branch]) -> Vec<usize> {
    let n = path.len();
    branches
        .iter()
        .enumerate()
        .filter(|(_, b)| 2 * path.waypoints.iter().filter(|&&p| b.contains(p)).count() > n)
        .map(|(i, _)| i)
        .collect()
}

/// Merge-event tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvents {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl MergeEvents {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn add(&mut self, other: &MergeEvents) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    /// `tp / (tp + fp)`, undefined without positives.
    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `tp / (tp + fn)`, undefined without branch hits.
    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Merge events implied by the representatives in `diagnostics`.
///
/// A representative inside no corridor, or inside several, is a false
/// positive. Every corridor holding representatives yields one true positive
/// (or a true negative in a single-corridor case) plus one false negative per
/// extra representative. Plans without representatives yield no events.
pub fn classify_fusion(case: &FusionCase, diagnostics: &PlanDiagnostics) -> MergeEvents {
    classify_representatives(case, &diagnostics.representatives)
}

pub fn classify_representatives(case: &FusionCase, representatives: &[Path]) -> MergeEvents {
    let mut events = MergeEvents::default();
    let mut per_branch = vec![0usize; case.branches.len()];
    for rep in representatives {
        match membership(rep, &case.branches)[..] {
            [b] => per_branch[b] += 1,
            _ => events.fp += 1,
        }
    }
    let single = case.branches.len() == 1;
    for &count in &per_branch {
        if count == 0 {
            continue;
        }
        if single {
            events.tn += 1;
        } else {
            events.tp += 1;
        }
        events.fn_ += count - 1;
    }
    events
}

/// Whether `path` lies majority-inside the goal-correct corridor only.
pub fn selection_correct(case: &FusionCase, path: &Path) -> bool {
    membership(path, &case.branches) == [case.correct_branch]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub name: String,
    pub events: MergeEvents,
    pub selected_correct: bool,
    pub no_path: bool,
    pub representatives: usize,
    pub merges: usize,
    pub k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub strategy: String,
    pub cases: usize,
    pub events: MergeEvents,
    pub correct_selections: usize,
    pub no_path: usize,
    /// Absent when undefined.
    pub pip: Option<f64>,
    pub pir: Option<f64>,
    pub psa: f64,
    pub records: Vec<CaseRecord>,
}

impl MetricReport {
    pub fn from_records(strategy: impl Into<String>, records: Vec<CaseRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(invalid_arg("report needs at least one case"));
        }
        let mut events = MergeEvents::default();
        for r in &records {
            events.add(&r.events);
        }
        let correct = records.iter().filter(|r| r.selected_correct).count();
        Ok(MetricReport {
            strategy: strategy.into(),
            cases: records.len(),
            events,
            correct_selections: correct,
            no_path: records.iter().filter(|r| r.no_path).count(),
            pip: events.precision(),
            pir: events.recall(),
            psa: correct as f64 / records.len() as f64,
            records,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Plans one case and scores it. A no-path failure counts as a wrong
/// selection with no merge events.
pub fn evaluate_case(
    case: &FusionCase,
    paths: &PathSet,
    planner: &PlannerConfig,
) -> Result<CaseRecord> {
    match plan(paths, &case.costmap, &case.goal, planner) {
        Ok(outcome) => {
            let d = &outcome.diagnostics;
            Ok(CaseRecord {
                name: case.name.clone(),
                events: classify_fusion(case, d),
                selected_correct: selection_correct(case, &outcome.path),
                no_path: false,
                representatives: d.representatives.len(),
                merges: d.merge_count(),
                k: d.k,
            })
        }
        Err(Error::NoPath { .. }) => Ok(CaseRecord {
            name: case.name.clone(),
            events: MergeEvents::default(),
            selected_correct: false,
            no_path: true,
            representatives: 0,
            merges: 0,
            k: None,
        }),
        Err(e) => Err(e),
    }
}

/// Scores every case with one planner configuration. Cases run in
/// parallel; the report keeps case order.
pub fn run_fusion_bench(
    cases: &[FusionCase],
    paths: &PathSet,
    planner: &PlannerConfig,
) -> Result<MetricReport> {
    if cases.is_empty() {
        return Err(invalid_arg("benchmark needs at least one case"));
    }
    planner.validate()?;
    let records = cases
        .par_iter()
        .map(|c| evaluate_case(c, paths, planner))
        .collect::<Result<Vec<_>>>()?;
    MetricReport::from_records(planner.strategy.to_string(), records)
}

#[cfg(test)]
mod tests;
