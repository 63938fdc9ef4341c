use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    classify_representatives, run_fusion_bench, selection_correct, FusionCase, MergeEvents,
    MetricReport,
};
use crate::error::{invalid_arg, Result};
use crate::fusion::{
    adaptive_kmeans, merge_centroids, select_angular, select_euclidean, PlannerConfig, Strategy,
};
use crate::paths::{sample_paths, top_k, Path, PathSet, SamplerSpec};
use crate::render::{Chart, Series};

/// One merge threshold of the precision-recall sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub events: MergeEvents,
    pub merges: usize,
    pub representatives: usize,
    /// Undefined when no merge happened at this threshold.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub psa: f64,
}

/// Per case: the clustered top-K candidates, computed once for all thresholds.
struct Clustered {
    candidates: Vec<Path>,
    clustering: crate::fusion::Clustering,
}

fn cluster_case(
    case: &FusionCase,
    paths: &PathSet,
    planner: &PlannerConfig,
) -> Result<Option<Clustered>> {
    let k = planner.top_k.min(paths.len());
    let ranked = top_k(&paths.paths, &case.costmap, k)?;
    let limit = planner.lethal_fraction * paths.paths[0].len() as f64;
    if ranked[0].cost >= limit {
        return Ok(None);
    }
    let candidates: Vec<Path> = ranked
        .iter()
        .map(|r| paths.paths[r.index].clone())
        .collect();
    let adaptive = adaptive_kmeans(&candidates, &planner.fusion)?;
    Ok(Some(Clustered {
        candidates,
        clustering: adaptive.clustering,
    }))
}

/// Merge-threshold sweep. Clustering is shared across thresholds; only the
/// merge step and the selection change. Selection follows the planner's
/// strategy, with angular selection standing in for non-merging ones.
pub fn pr_sweep(
    cases: &[FusionCase],
    paths: &PathSet,
    planner: &PlannerConfig,
    thresholds: &[f64],
) -> Result<Vec<PrPoint>> {
    if cases.is_empty() || thresholds.is_empty() {
        return Err(invalid_arg("sweep needs cases and thresholds"));
    }
    if thresholds.windows(2).any(|w| !(w[0] <= w[1])) || thresholds.iter().any(|t| !(*t >= 0.0)) {
        return Err(invalid_arg("thresholds must be non-negative and ascending"));
    }
    planner.validate()?;
    let clustered = cases
        .par_iter()
        .map(|c| cluster_case(c, paths, planner))
        .collect::<Result<Vec<_>>>()?;
    thresholds
        .iter()
        .map(|&threshold| {
            let per_case = cases
                .par_iter()
                .zip(&clustered)
                .map(|(case, cl)| -> Result<(MergeEvents, usize, usize, bool)> {
                    let Some(cl) = cl else {
                        return Ok((MergeEvents::default(), 0, 0, false));
                    };
                    let reps = merge_centroids(&cl.candidates, &cl.clustering, threshold)?;
                    let events = classify_representatives(case, &reps.representatives);
                    let idx = match planner.strategy {
                        Strategy::Euclidean => {
                            select_euclidean(&reps.representatives, case.goal.point)?
                        }
                        _ => select_angular(&reps.representatives, case.goal.direction)?,
                    };
                    let hit = selection_correct(case, &reps.representatives[idx]);
                    Ok((events, reps.merge_count(), reps.len(), hit))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut events = MergeEvents::default();
            let (mut merges, mut representatives, mut hits) = (0, 0, 0);
            for (e, m, r, h) in per_case {
                events.add(&e);
                merges += m;
                representatives += r;
                hits += h as usize;
            }
            Ok(PrPoint {
                threshold,
                events,
                merges,
                representatives,
                precision: if merges == 0 {
                    None
                } else {
                    events.precision()
                },
                recall: events.recall(),
                psa: hits as f64 / cases.len() as f64,
            })
        })
        .collect()
}

/// No-fusion accuracy at one beta, over several path-set seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaPoint {
    pub beta: f64,
    pub psa_mean: f64,
    /// Standard error of the mean; zero with a single seed.
    pub psa_stderr: f64,
    pub psa: Vec<f64>,
}

/// No-fusion PSA per beta; one path set is sampled per seed and shared
/// across betas.
pub fn beta_sweep(
    cases: &[FusionCase],
    sampler: &SamplerSpec,
    planner: &PlannerConfig,
    betas: &[f64],
    seeds: &[u64],
) -> Result<Vec<BetaPoint>> {
    if betas.is_empty() || seeds.is_empty() {
        return Err(invalid_arg("beta sweep needs betas and seeds"));
    }
    let pathsets = seeds
        .iter()
        .map(|&s| sample_paths(sampler, s))
        .collect::<Result<Vec<_>>>()?;
    betas
        .iter()
        .map(|&beta| {
            let config = PlannerConfig {
                strategy: Strategy::NoFusion { beta },
                ..planner.clone()
            };
            let psa = pathsets
                .iter()
                .map(|ps| run_fusion_bench(cases, ps, &config).map(|r| r.psa))
                .collect::<Result<Vec<_>>>()?;
            let (mean, stderr) = mean_stderr(&psa);
            Ok(BetaPoint {
                beta,
                psa_mean: mean,
                psa_stderr: stderr,
                psa,
            })
        })
        .collect()
}

pub(super) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"))
}

pub fn pr_sweep_csv(points: &[PrPoint]) -> String {
    let mut out =
        String::from("threshold,precision,recall,psa,representatives,merges,tp,fp,fn,tn\n");
    for p in points {
        let e = &p.events;
        out.push_str(&format!(
            "{},{},{},{:.6},{},{},{},{},{},{}\n",
            p.threshold,
            opt(p.precision),
            opt(p.recall),
            p.psa,
            p.representatives,
            p.merges,
            e.tp,
            e.fp,
            e.fn_,
            e.tn
        ));
    }
    out
}

pub fn beta_sweep_csv(points: &[BetaPoint]) -> String {
    let mut out = String::from("beta,psa_mean,psa_stderr,seeds\n");
    for p in points {
        out.push_str(&format!(
            "{},{:.6},{:.6},{}\n",
            p.beta,
            p.psa_mean,
            p.psa_stderr,
            p.psa.len()
        ));
    }
    out
}

fn method_label(strategy: &str) -> String {
    match Strategy::parse(strategy) {
        Ok(Strategy::NoFusion { beta }) => format!("No Fusion (beta={beta})"),
        Ok(Strategy::KmeansOnly) => "K-means Only".into(),
        Ok(Strategy::Euclidean) => "K-means + Merge + Euclidean".into(),
        Ok(Strategy::Angular) => "K-means + Merge + Angular".into(),
        Err(_) => strategy.to_string(),
    }
}

/// Strategy comparison table, percentages with one decimal. Rows without
/// representatives (no fusion) show dashes for PIP and PIR.
pub fn bench_csv(reports: &[MetricReport]) -> String {
    let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.1}", 100.0 * x));
    let mut out = String::from("Method,PIP,PIR,PSA\n");
    for r in reports {
        let fused = !r.strategy.starts_with("nf");
        let (pip, pir) = if fused {
            (pct(r.pip), pct(r.pir))
        } else {
            ("-".into(), "-".into())
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            method_label(&r.strategy),
            pip,
            pir,
            pct(Some(r.psa))
        ));
    }
    out
}

/// Precision against recall, one marker per defined threshold.
pub fn pr_sweep_svg(points: &[PrPoint]) -> String {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| Some((p.recall?, p.precision?)))
        .collect();
    Chart {
        title: "Merge threshold: precision vs recall",
        x_label: "recall",
        y_label: "precision",
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        log_x: false,
    }
    .render(&[Series {
        label: "PIP / PIR",
        color: "#1f77b4",
        points: pts,
        errors: None,
    }])
}

/// Accuracy against beta on a log axis with standard-error bars, plus an
/// optional flat reference line (for example the fusion accuracy).
pub fn beta_sweep_svg(points: &[BetaPoint], reference: Option<(&str, f64)>) -> String {
    let lo = points.iter().map(|p| p.beta).fold(f64::INFINITY, f64::min);
    let hi = points
        .iter()
        .map(|p| p.beta)
        .fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo > 0.0 && hi > lo {
        (lo, hi)
    } else {
        (0.1, 10.0)
    };
    let mut series = vec![Series {
        label: "No Fusion",
        color: "#d62728",
        points: points
            .iter()
            .map(|p| (p.beta.max(lo), p.psa_mean))
            .collect(),
        errors: Some(points.iter().map(|p| p.psa_stderr).collect()),
    }];
    if let Some((label, y)) = reference {
        series.push(Series {
            label,
            color: "#2ca02c",
            points: vec![(lo, y), (hi, y)],
            errors: None,
        });
    }
    Chart {
        title: "No-fusion accuracy vs beta",
        x_label: "beta",
        y_label: "path selection accuracy",
        x_range: (lo, hi),
        y_range: (0.0, 1.0),
        log_x: true,
    }
    .render(&series)
}
