//! Path fusion: k-means over candidate paths, silhouette-based choice of k,
//! threshold merging of nearby centroids and goal-directed selection.
//!
//! Paths are compared waypoint by waypoint. For clustering each path is
//! embedded as the concatenation of its waypoints, so Lloyd iterations
//! minimize squared Euclidean distance in that 2n-dimensional space, while
//! silhouette scores and merging use [`path_distance`], the mean waypoint
//! distance.

mod plan;

pub use plan::{plan, CostRecord, Goal, PlanDiagnostics, PlanOutcome, PlannerConfig, Strategy};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_param, Result};
use crate::geometry::{angle_between, Point};
use crate::paths::Path;
use crate::seed::derive_seed;

/// Relative tolerance under which two selection scores count as tied.
const TIE_EPS: f64 = 1e-12;

/// Mean Euclidean distance between corresponding waypoints.
pub fn path_distance(a: &Path, b: &Path) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid_arg(format!(
            "path_distance needs equal waypoint counts ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let total: f64 = a
        .waypoints
        .iter()
        .zip(&b.waypoints)
        .map(|(p, q)| p.distance(*q))
        .sum();
    Ok(total / a.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub k: usize,
    /// Cluster id of each input path.
    pub assignments: Vec<usize>,
    /// Waypoint-wise mean of each cluster's members.
    pub centroids: Vec<Path>,
    /// Sum of squared member-to-centroid distances in the embedding.
    pub inertia: f64,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignments
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    pub k_max: usize,
    /// Centroids closer than this (mean waypoint distance, meters) merge.
    pub merge_threshold: f64,
    pub seed: u64,
    pub kmeans_restarts: usize,
    pub kmeans_max_iters: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            k_max: 6,
            merge_threshold: 0.75,
            seed: 0,
            kmeans_restarts: 8,
            kmeans_max_iters: 50,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 2 {
            return Err(invalid_param("k_max must be >= 2"));
        }
        if !(self.merge_threshold >= 0.0) {
            return Err(invalid_param("merge_threshold must be >= 0"));
        }
        if self.kmeans_restarts == 0 {
            return Err(invalid_param("kmeans_restarts must be >= 1"));
        }
        Ok(())
    }
}

fn embed(path: &Path) -> Vec<f64> {
    path.waypoints.iter().flat_map(|p| [p.x, p.z]).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_uniform(paths: &[Path]) -> Result<usize> {
    let n = paths
        .first()
        .ok_or_else(|| invalid_arg("no paths to cluster"))?
        .len();
    if paths.iter().any(|p| p.len() != n) {
        return Err(invalid_arg("all paths must have the same waypoint count"));
    }
    Ok(n)
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
fn seed_centers(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centers.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn means(points: &[Vec<f64>], assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        for v in s.iter_mut() {
            *v /= n as f64;
        }
    }
    sums
}

/// Moves the point farthest from its center (taken from a cluster that can
/// spare it) into each empty cluster.
fn repair_empty(points: &[Vec<f64>], assignments: &mut [usize], centers: &[Vec<f64>], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &c in assignments.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            let c = assignments[i];
            if sizes[c] < 2 {
                continue;
            }
            let d = sq_dist(p, &centers[c]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= number of points");
        assignments[i] = empty;
    }
}

fn lloyd(
    points: &[Vec<f64>],
    k: usize,
    max_iters: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<Vec<f64>>) {
    let mut centers = seed_centers(points, k, rng);
    let mut assignments = assign(points, &centers);
    repair_empty(points, &mut assignments, &centers, k);
    centers = means(points, &assignments, k);
    for _ in 0..max_iters {
        let mut next = assign(points, &centers);
        repair_empty(points, &mut next, &centers, k);
        let converged = next == assignments;
        assignments = next;
        centers = means(points, &assignments, k);
        if converged {
            break;
        }
    }
    (assignments, centers)
}

fn build_clustering(paths: &[Path], assignments: Vec<usize>, k: usize) -> Result<Clustering> {
    let points: Vec<Vec<f64>> = paths.iter().map(embed).collect();
    let centers = means(&points, &assignments, k);
    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &c)| sq_dist(p, &centers[c]))
        .sum();
    let mut centroids = Vec::with_capacity(k);
    for c in 0..k {
        centroids.push(Path::mean(
            assignments
                .iter()
                .zip(paths)
                .filter(|(&a, _)| a == c)
                .map(|(_, p)| p),
        )?);
    }
    Ok(Clustering {
        k,
        assignments,
        centroids,
        inertia,
    })
}

/// One Lloyd run per restart, each from its own k-means++ seeding.
pub fn kmeans_restarts(
    paths: &[Path],
    k: usize,
    seed: u64,
    restarts: usize,
    max_iters: usize,
) -> Result<Vec<Clustering>> {
    check_uniform(paths)?;
    if k == 0 || k > paths.len() {
        return Err(invalid_arg(format!(
            "k must lie in [1, {}], got {k}",
            paths.len()
        )));
    }
    let points: Vec<Vec<f64>> = paths.iter().map(embed).collect();
    (0..restarts.max(1))
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
            let (assignments, _) = lloyd(&points, k, max_iters, &mut rng);
            build_clustering(paths, assignments, k)
        })
        .collect()
}

/// Best-inertia clustering over `restarts` seeded Lloyd runs.
pub fn kmeans(
    paths: &[Path],
    k: usize,
    seed: u64,
    restarts: usize,
    max_iters: usize,
) -> Result<Clustering> {
    let runs = kmeans_restarts(paths, k, seed, restarts, max_iters)?;
    let mut best: Option<Clustering> = None;
    for c in runs {
        if best.as_ref().is_none_or(|b| c.inertia < b.inertia) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Pairwise [`path_distance`] matrix.
pub fn distance_matrix(paths: &[Path]) -> Result<Vec<Vec<f64>>> {
    let n = paths.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = path_distance(&paths[i], &paths[j])?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Ok(d)
}

/// Negative mean silhouette coefficient.
///
/// Members of singleton clusters score 0, as does any sample whose intra- and
/// nearest-cluster distances are both zero.
pub fn silhouette_loss(paths: &[Path], clustering: &Clustering) -> Result<f64> {
    if clustering.k < 2 {
        return Err(invalid_arg("silhouette needs at least 2 clusters"));
    }
    if clustering.assignments.len() != paths.len() {
        return Err(invalid_arg("clustering does not match path count"));
    }
    let sizes = clustering.sizes();
    if sizes.contains(&0) {
        return Err(invalid_arg("clustering has an empty cluster"));
    }
    let dist = distance_matrix(paths)?;
    let n = paths.len();
    let mut total = 0.0;
    let mut sums = vec![0.0; clustering.k];
    for i in 0..n {
        let own = clustering.assignments[i];
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            sums[clustering.assignments[j]] += dist[i][j];
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..clustering.k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(-total / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveClustering {
    pub clustering: Clustering,
    /// Loss of the chosen k; `None` on the single-cluster fallback.
    pub silhouette_loss: Option<f64>,
    /// Set when too few paths were given to score any k >= 2.
    pub fallback: bool,
    /// `(k, loss)` for every k tried.
    pub losses: Vec<(usize, f64)>,
}

/// Runs k-means for every k in `[2, min(k_max, N - 1)]` and keeps the one with
/// the lowest silhouette loss, preferring smaller k on ties.
pub fn adaptive_kmeans(paths: &[Path], config: &FusionConfig) -> Result<AdaptiveClustering> {
    config.validate()?;
    check_uniform(paths)?;
    if paths.len() < 3 {
        let clustering = build_clustering(paths, vec![0; paths.len()], 1)?;
        return Ok(AdaptiveClustering {
            clustering,
            silhouette_loss: None,
            fallback: true,
            losses: Vec::new(),
        });
    }
    let k_hi = config.k_max.min(paths.len() - 1);
    let runs: Vec<(Clustering, f64)> = (2..=k_hi)
        .into_par_iter()
        .map(|k| {
            let c = kmeans(
                paths,
                k,
                derive_seed(config.seed, k as u64),
                config.kmeans_restarts,
                config.kmeans_max_iters,
            )?;
            let loss = silhouette_loss(paths, &c)?;
            Ok((c, loss))
        })
        .collect::<Result<_>>()?;
    let losses = runs.iter().map(|(c, l)| (c.k, *l)).collect();
    let mut best = 0;
    for (i, (_, loss)) in runs.iter().enumerate() {
        if *loss < runs[best].1 - TIE_EPS {
            best = i;
        }
    }
    let (clustering, loss) = runs.into_iter().nth(best).expect("k range is non-empty");
    Ok(AdaptiveClustering {
        clustering,
        silhouette_loss: Some(loss),
        fallback: false,
        losses,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeSet {
    pub representatives: Vec<Path>,
    /// Cluster ids folded into each representative, ascending.
    pub provenance: Vec<Vec<usize>>,
}

impl RepresentativeSet {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Number of pairwise cluster unions performed.
    pub fn merge_count(&self) -> usize {
        self.provenance.iter().map(|g| g.len() - 1).sum()
    }

    /// Each cluster centroid as its own representative.
    pub fn unmerged(clustering: &Clustering) -> Self {
        RepresentativeSet {
            representatives: clustering.centroids.clone(),
            provenance: (0..clustering.k).map(|c| vec![c]).collect(),
        }
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Single-linkage merge of centroids within `merge_threshold`.
///
/// A zero threshold disables merging. Each merged group is represented by the
/// waypoint-wise mean of all member paths of its clusters.
pub fn merge_centroids(
    paths: &[Path],
    clustering: &Clustering,
    merge_threshold: f64,
) -> Result<RepresentativeSet> {
    let k = clustering.k;
    let mut parent: Vec<usize> = (0..k).collect();
    if merge_threshold > 0.0 {
        for i in 0..k {
            for j in i + 1..k {
                let d = path_distance(&clustering.centroids[i], &clustering.centroids[j])?;
                if d <= merge_threshold {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; k];
    for c in 0..k {
        let root = find(&mut parent, c);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(c);
    }
    let mut representatives = Vec::with_capacity(groups.len());
    for group in &groups {
        if let [only] = group[..] {
            representatives.push(clustering.centroids[only].clone());
            continue;
        }
        let members = clustering
            .assignments
            .iter()
            .zip(paths)
            .filter(|(c, _)| group.contains(c))
            .map(|(_, p)| p);
        representatives.push(Path::mean(members)?);
    }
    Ok(RepresentativeSet {
        representatives,
        provenance: groups,
    })
}

/// Representative whose heading is closest in angle to the goal direction.
pub fn select_angular(representatives: &[Path], goal_direction: Point) -> Result<usize> {
    match representatives.len() {
        0 => Err(invalid_arg("no representatives to select from")),
        1 => Ok(0),
        _ => {
            let score = |p: &Path| {
                let h = p.heading();
                if h.norm() > 0.0 {
                    angle_between(h, goal_direction)
                } else {
                    std::f64::consts::PI
                }
            };
            Ok(argmin_by(representatives, score))
        }
    }
}

/// Representative whose endpoint is closest to the goal point.
pub fn select_euclidean(representatives: &[Path], goal_point: Point) -> Result<usize> {
    if representatives.is_empty() {
        return Err(invalid_arg("no representatives to select from"));
    }
    Ok(argmin_by(representatives, |p| {
        p.endpoint().distance(goal_point)
    }))
}

fn argmin_by(paths: &[Path], score: impl Fn(&Path) -> f64) -> usize {
    let mut best = 0;
    let mut best_score = score(&paths[0]);
    for (i, p) in paths.iter().enumerate().skip(1) {
        let s = score(p);
        if s < best_score - TIE_EPS * best_score.abs().max(1.0) {
            best = i;
            best_score = s;
        }
    }
    best
}

#[cfg(test)]
mod tests;
