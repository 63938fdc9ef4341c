use super::Strategy;
use super::*;
use crate::costmap::{CostMap, GridSpec};
use crate::geometry::distance_to_polyline;
use crate::paths::{sample_paths, PathKind, SamplerSpec};
use crate::Error;
use proptest::prelude::*;
use rand::Rng;

fn line(end: Point, n: usize) -> Path {
    Path::new(
        PathKind::Linear,
        (0..n).map(|i| end * (i as f64 / (n - 1) as f64)).collect(),
    )
    .unwrap()
}

fn shifted(p: &Path, by: Point) -> Path {
    Path::new(p.kind, p.waypoints.iter().map(|&w| w + by).collect()).unwrap()
}

/// Paths fanned around each bundle bearing with small angular jitter.
fn bundles(bearings: &[f64], per: usize, jitter: f64, seed: u64) -> Vec<Path> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &b in bearings {
        for _ in 0..per {
            let t = b + rng.gen_range(-jitter..=jitter);
            out.push(line(Point::from_bearing(t) * 3.5, 10));
        }
    }
    out
}

// ---- independent oracles -------------------------------------------------

fn oracle_silhouette(paths: &[Path], assignments: &[usize], k: usize) -> f64 {
    let d = |i: usize, j: usize| -> f64 {
        let a = &paths[i].waypoints;
        let b = &paths[j].waypoints;
        a.iter()
            .zip(b)
            .map(|(p, q)| ((p.x - q.x).powi(2) + (p.z - q.z).powi(2)).sqrt())
            .sum::<f64>()
            / a.len() as f64
    };
    let clusters: Vec<Vec<usize>> = (0..k)
        .map(|c| (0..paths.len()).filter(|&i| assignments[i] == c).collect())
        .collect();
    let mut total = 0.0;
    for i in 0..paths.len() {
        let own = &clusters[assignments[i]];
        if own.len() < 2 {
            continue;
        }
        let a: f64 = own
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| d(i, j))
            .sum::<f64>()
            / (own.len() - 1) as f64;
        let mut b = f64::INFINITY;
        for (c, members) in clusters.iter().enumerate() {
            if c == assignments[i] {
                continue;
            }
            let m = members.iter().map(|&j| d(i, j)).sum::<f64>() / members.len() as f64;
            b = b.min(m);
        }
        let s = if a.max(b) == 0.0 {
            0.0
        } else {
            (b - a) / a.max(b)
        };
        total += s;
    }
    -total / paths.len() as f64
}

/// Plain Lloyd from fixed initial centers on flattened paths.
fn oracle_lloyd(points: &[Vec<f64>], init: &[usize]) -> Option<f64> {
    let k = init.len();
    let mut centers: Vec<Vec<f64>> = init.iter().map(|&i| points[i].clone()).collect();
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..200 {
        let next: Vec<usize> = points
            .iter()
            .map(|p| {
                (0..k)
                    .min_by(|&a, &b| sq(p, &centers[a]).total_cmp(&sq(p, &centers[b])))
                    .unwrap()
            })
            .collect();
        if next == labels {
            break;
        }
        labels = next;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == c)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                return None;
            }
            for (d, v) in center.iter_mut().enumerate() {
                *v = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    Some(
        points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| sq(p, &centers[l]))
            .sum(),
    )
}

fn oracle_single_linkage(d: &[Vec<f64>], threshold: f64) -> usize {
    let n = d.len();
    let mut comp: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if d[i][j] <= threshold && comp[i] != comp[j] {
                    let (lo, hi) = (comp[i].min(comp[j]), comp[i].max(comp[j]));
                    comp.iter_mut().filter(|c| **c == hi).for_each(|c| *c = lo);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut ids = comp.clone();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

// ---- path_distance ---------------------------------------------------------

#[test]
fn path_distance_cases() {
    let a = line(Point::new(0.5, 3.0), 8);
    assert_eq!(path_distance(&a, &a).unwrap(), 0.0);
    let b = shifted(&a, Point::new(1.0, 0.0));
    assert!((path_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    assert!(matches!(
        path_distance(&a, &line(Point::new(0.0, 1.0), 7)),
        Err(Error::InvalidArgument(_))
    ));
}

proptest! {
    #[test]
    fn path_distance_is_a_metric(seed in 0u64..5000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut random_path = || {
            Path::new(PathKind::Mean, (0..6).map(|_| Point::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.0..4.0))).collect()).unwrap()
        };
        let (a, b, c) = (random_path(), random_path(), random_path());
        let ab = path_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, path_distance(&b, &a).unwrap());
        prop_assert!(ab > 0.0);
        prop_assert!(ab <= path_distance(&a, &c).unwrap() + path_distance(&c, &b).unwrap() + 1e-12);
    }
}

// ---- kmeans ------------------------------------------------------------------

#[test]
fn single_cluster_centroid_is_global_mean() {
    let paths = bundles(&[-0.5, 0.0, 0.4], 4, 0.1, 1);
    let c = kmeans(&paths, 1, 3, 4, 50).unwrap();
    assert_eq!(c.k, 1);
    assert!(c.assignments.iter().all(|&a| a == 0));
    let mean = Path::mean(&paths).unwrap();
    for (p, q) in c.centroids[0].waypoints.iter().zip(&mean.waypoints) {
        assert!(p.distance(*q) < 1e-12);
    }
}

#[test]
fn identical_groups_separate_with_zero_inertia() {
    let a = line(Point::new(-2.0, 2.5), 10);
    let b = line(Point::new(2.0, 2.5), 10);
    let paths = vec![a.clone(), b.clone(), a.clone(), b.clone(), a, b];
    let c = kmeans(&paths, 2, 9, 8, 50).unwrap();
    assert!(c.inertia < 1e-20);
    assert_eq!(c.assignments[0], c.assignments[2]);
    assert_eq!(c.assignments[1], c.assignments[3]);
    assert_ne!(c.assignments[0], c.assignments[1]);
}

#[test]
fn kmeans_rejects_bad_k() {
    let paths = bundles(&[0.0], 3, 0.1, 2);
    assert!(matches!(
        kmeans(&paths, 4, 0, 1, 10),
        Err(Error::InvalidArgument(_))
    ));
    assert!(kmeans(&paths, 0, 0, 1, 10).is_err());
}

#[test]
fn kmeans_matches_exhaustive_seeding_oracle() {
    let paths = bundles(&[-0.6, 0.05, 0.6], 4, 0.25, 42);
    assert_eq!(paths.len(), 12);
    let points: Vec<Vec<f64>> = paths
        .iter()
        .map(|p| p.waypoints.iter().flat_map(|w| [w.x, w.z]).collect())
        .collect();
    let mut best = f64::INFINITY;
    for i in 0..12 {
        for j in i + 1..12 {
            for l in j + 1..12 {
                if let Some(inertia) = oracle_lloyd(&points, &[i, j, l]) {
                    best = best.min(inertia);
                }
            }
        }
    }
    let runs = kmeans_restarts(&paths, 3, 5, 8, 50).unwrap();
    let chosen = kmeans(&paths, 3, 5, 8, 50).unwrap();
    assert!(runs.iter().all(|r| chosen.inertia <= r.inertia));
    assert!(
        (chosen.inertia - best).abs() < 1e-9,
        "{} vs oracle {best}",
        chosen.inertia
    );
}

#[test]
fn kmeans_is_deterministic_and_valid() {
    let set = sample_paths(&SamplerSpec::default(), 4).unwrap();
    let a = kmeans(&set.paths[..40], 5, 17, 8, 50).unwrap();
    let b = kmeans(&set.paths[..40], 5, 17, 8, 50).unwrap();
    assert_eq!(a, b);
    assert!(a.sizes().iter().all(|&s| s > 0));
    for c in 0..a.k {
        let mean = Path::mean(a.members(c).map(|i| &set.paths[i])).unwrap();
        assert_eq!(mean.waypoints, a.centroids[c].waypoints);
    }
}

#[test]
fn duplicates_still_fill_every_cluster() {
    let a = line(Point::new(0.0, 3.0), 5);
    let paths = vec![a.clone(), a.clone(), a.clone(), a];
    let c = kmeans(&paths, 3, 0, 2, 10).unwrap();
    assert!(c.sizes().iter().all(|&s| s > 0));
}

// ---- silhouette -------------------------------------------------------------

#[test]
fn silhouette_separated_clusters() {
    let paths = bundles(&[-0.7, 0.7], 6, 0.02, 3);
    let c = kmeans(&paths, 2, 1, 4, 50).unwrap();
    let loss = silhouette_loss(&paths, &c).unwrap();
    let oracle = oracle_silhouette(&paths, &c.assignments, 2);
    assert!((loss - oracle).abs() < 1e-12);
    assert!(loss < -0.9, "{loss}");
}

#[test]
fn silhouette_identical_paths_is_zero() {
    let a = line(Point::new(0.3, 3.0), 6);
    let paths = vec![a.clone(), a.clone(), a.clone(), a];
    let c = build_clustering(&paths, vec![0, 1, 0, 1], 2).unwrap();
    assert_eq!(silhouette_loss(&paths, &c).unwrap(), 0.0);
}

#[test]
fn silhouette_zero_spread_is_minus_one() {
    let base = line(Point::new(0.0, 3.0), 6);
    let mut paths = Vec::new();
    for off in [
        Point::new(-2.0, 0.0),
        Point::new(2.0, 0.0),
        Point::new(0.0, 2.0 * 3f64.sqrt()),
    ] {
        for _ in 0..3 {
            paths.push(shifted(&base, off));
        }
    }
    let c = build_clustering(&paths, vec![0, 0, 0, 1, 1, 1, 2, 2, 2], 3).unwrap();
    assert!((silhouette_loss(&paths, &c).unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn silhouette_requires_two_clusters() {
    let paths = bundles(&[0.0], 4, 0.1, 1);
    let c = kmeans(&paths, 1, 0, 1, 10).unwrap();
    assert!(matches!(
        silhouette_loss(&paths, &c),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn singleton_members_score_zero() {
    let paths = bundles(&[-0.8, 0.0, 0.8], 1, 0.0, 1);
    let c = build_clustering(&paths, vec![0, 1, 1], 2).unwrap();
    let loss = silhouette_loss(&paths, &c).unwrap();
    assert!((loss - oracle_silhouette(&paths, &c.assignments, 2)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn silhouette_agrees_with_oracle(seed in 0u64..100_000, n in 3usize..30, k in 2usize..6) {
        prop_assume!(k <= n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let paths: Vec<Path> = (0..n)
            .map(|_| line(Point::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.5..4.0)), 8))
            .collect();
        let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.gen_range(0..k) }).collect();
        labels.rotate_left(seed as usize % n);
        let c = build_clustering(&paths, labels, k).unwrap();
        let loss = silhouette_loss(&paths, &c).unwrap();
        prop_assert!((loss - oracle_silhouette(&paths, &c.assignments, k)).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&loss));
    }
}

// ---- adaptive k -------------------------------------------------------------

fn oracle_best_k(paths: &[Path], cfg: &FusionConfig) -> usize {
    let hi = cfg.k_max.min(paths.len() - 1);
    let mut best = (2, f64::INFINITY);
    for k in 2..=hi {
        let c = kmeans(
            paths,
            k,
            derive_seed(cfg.seed, k as u64),
            cfg.kmeans_restarts,
            cfg.kmeans_max_iters,
        )
        .unwrap();
        let l = oracle_silhouette(paths, &c.assignments, k);
        if l < best.1 - 1e-12 {
            best = (k, l);
        }
    }
    best.0
}

#[test]
fn adaptive_picks_two_bundles() {
    let paths = bundles(&[-0.6, 0.6], 8, 0.05, 8);
    let cfg = FusionConfig::default();
    let a = adaptive_kmeans(&paths, &cfg).unwrap();
    assert_eq!(a.clustering.k, 2);
    assert_eq!(oracle_best_k(&paths, &cfg), 2);
    assert_eq!(a.losses.len(), 5);
}

#[test]
fn adaptive_picks_three_bundles() {
    let paths = bundles(&[-0.7, 0.0, 0.7], 6, 0.05, 9);
    let cfg = FusionConfig::default();
    let a = adaptive_kmeans(&paths, &cfg).unwrap();
    assert_eq!(a.clustering.k, 3);
    assert_eq!(oracle_best_k(&paths, &cfg), 3);
}

#[test]
fn adaptive_with_three_paths_uses_k_two() {
    let paths = bundles(&[-0.5, 0.0, 0.5], 1, 0.0, 1);
    let a = adaptive_kmeans(&paths, &FusionConfig::default()).unwrap();
    assert_eq!(a.clustering.k, 2);
    assert!(!a.fallback);
}

#[test]
fn adaptive_falls_back_below_three_paths() {
    let paths = bundles(&[-0.5, 0.5], 1, 0.0, 1);
    let a = adaptive_kmeans(&paths, &FusionConfig::default()).unwrap();
    assert!(a.fallback);
    assert_eq!(a.clustering.k, 1);
    assert_eq!(a.silhouette_loss, None);
}

#[test]
fn adaptive_parallel_matches_sequential() {
    let set = sample_paths(&SamplerSpec::default(), 2).unwrap();
    let cfg = FusionConfig::default();
    let a = adaptive_kmeans(&set.paths[..32], &cfg).unwrap();
    for (k, loss) in &a.losses {
        let c = kmeans(
            &set.paths[..32],
            *k,
            derive_seed(cfg.seed, *k as u64),
            8,
            50,
        )
        .unwrap();
        assert_eq!(*loss, silhouette_loss(&set.paths[..32], &c).unwrap());
    }
}

// ---- merging ----------------------------------------------------------------

fn one_per_cluster(paths: &[Path]) -> Clustering {
    build_clustering(paths, (0..paths.len()).collect(), paths.len()).unwrap()
}

#[test]
fn zero_threshold_keeps_centroids() {
    let paths = bundles(&[-0.6, 0.0, 0.6], 5, 0.2, 4);
    let c = kmeans(&paths, 4, 0, 4, 50).unwrap();
    let reps = merge_centroids(&paths, &c, 0.0).unwrap();
    assert_eq!(reps.representatives, c.centroids);
    assert_eq!(reps.merge_count(), 0);
}

#[test]
fn infinite_threshold_gives_global_mean() {
    let paths = bundles(&[-0.6, 0.0, 0.6], 5, 0.2, 4);
    let c = kmeans(&paths, 4, 0, 4, 50).unwrap();
    let reps = merge_centroids(&paths, &c, f64::INFINITY).unwrap();
    assert_eq!(reps.len(), 1);
    assert_eq!(reps.provenance[0], vec![0, 1, 2, 3]);
    let mean = Path::mean(&paths).unwrap();
    for (p, q) in reps.representatives[0]
        .waypoints
        .iter()
        .zip(&mean.waypoints)
    {
        assert!(p.distance(*q) < 1e-12);
    }
}

#[test]
fn distance_triple_merges_into_two() {
    let base = line(Point::new(0.0, 3.0), 5);
    let b = (4.0f64 - 0.3125 * 0.3125).sqrt();
    let paths = vec![
        base.clone(),
        shifted(&base, Point::new(0.4, 0.0)),
        shifted(&base, Point::new(-0.3125, b)),
    ];
    let c = one_per_cluster(&paths);
    let d = distance_matrix(&c.centroids).unwrap();
    assert!((d[0][1] - 0.4).abs() < 1e-12);
    assert!((d[0][2] - 2.0).abs() < 1e-12);
    assert!((d[1][2] - 2.1).abs() < 1e-12);
    let reps = merge_centroids(&paths, &c, 0.5).unwrap();
    assert_eq!(reps.len(), oracle_single_linkage(&d, 0.5));
    assert_eq!(reps.len(), 2);
    assert_eq!(reps.provenance, vec![vec![0, 1], vec![2]]);
}

#[test]
fn merged_representative_weights_by_membership() {
    let left = line(Point::new(-1.0, 3.0), 5);
    let right = line(Point::new(-0.8, 3.0), 5);
    let paths = vec![left.clone(), left.clone(), left, right];
    let c = build_clustering(&paths, vec![0, 0, 0, 1], 2).unwrap();
    let reps = merge_centroids(&paths, &c, 1.0).unwrap();
    assert_eq!(reps.len(), 1);
    assert!((reps.representatives[0].endpoint().x + 0.95).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn representative_count_monotone_in_threshold(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let paths: Vec<Path> = (0..12)
            .map(|_| line(Point::from_bearing(rng.gen_range(-1.0..1.0)) * 3.5, 8))
            .collect();
        let c = kmeans(&paths, 6, seed, 2, 30).unwrap();
        let d = distance_matrix(&c.centroids).unwrap();
        let mut last = usize::MAX;
        for t in [0.0, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2] {
            let reps = merge_centroids(&paths, &c, t).unwrap();
            prop_assert!(reps.len() <= last);
            if t > 0.0 {
                prop_assert_eq!(reps.len(), oracle_single_linkage(&d, t));
            }
            last = reps.len();
            let rd = distance_matrix(&reps.representatives).unwrap();
            for i in 0..rd.len() {
                for j in i + 1..rd.len() {
                    // groups are closed under single linkage; their means may
                    // still drift closer than the threshold, so only check
                    // centroid-level closure
                    let gi = &reps.provenance[i];
                    let gj = &reps.provenance[j];
                    for &a in gi {
                        for &b in gj {
                            prop_assert!(t == 0.0 || d[a][b] > t);
                        }
                    }
                }
            }
        }
    }
}

// ---- selection --------------------------------------------------------------

#[test]
fn angular_single_representative_is_returned() {
    let reps = vec![line(Point::new(0.0, 3.0), 5)];
    assert_eq!(select_angular(&reps, Point::new(0.0, -1.0)).unwrap(), 0);
    assert!(select_angular(&[], Point::new(0.0, 1.0)).is_err());
}

#[test]
fn angular_prefers_smaller_angle_and_lower_index_on_ties() {
    let deg = |d: f64| Point::from_bearing(d.to_radians()) * 3.0;
    let reps = vec![line(deg(30.0), 5), line(deg(-10.0), 5)];
    assert_eq!(select_angular(&reps, Point::new(0.0, 1.0)).unwrap(), 1);
    let tied = vec![line(deg(20.0), 5), line(deg(-20.0), 5)];
    assert_eq!(select_angular(&tied, Point::new(0.0, 1.0)).unwrap(), 0);
    let tied = vec![line(deg(-20.0), 5), line(deg(20.0), 5)];
    assert_eq!(select_angular(&tied, Point::new(0.0, 1.0)).unwrap(), 0);
}

#[test]
fn euclidean_selection_cases() {
    let reps = vec![
        line(Point::new(1.0, 3.0), 5),
        line(Point::new(-2.0, 3.0), 5),
    ];
    assert_eq!(select_euclidean(&reps, Point::new(0.0, 10.0)).unwrap(), 0);
    assert_eq!(select_euclidean(&reps, Point::new(-2.0, 3.0)).unwrap(), 1);
    let sym = vec![
        line(Point::new(1.0, 3.0), 5),
        line(Point::new(-1.0, 3.0), 5),
    ];
    assert_eq!(select_euclidean(&sym, Point::new(0.0, 5.0)).unwrap(), 0);
}

proptest! {
    #[test]
    fn angular_selection_is_scale_invariant(seed in 0u64..10_000, scale in 0.05f64..20.0, g in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reps: Vec<Path> = (0..5)
            .map(|_| line(Point::from_bearing(rng.gen_range(-1.2..1.2)) * 3.0, 6))
            .collect();
        let scaled: Vec<Path> = reps
            .iter()
            .map(|p| Path::new(p.kind, p.waypoints.iter().map(|&w| w * scale).collect()).unwrap())
            .collect();
        let goal = Point::from_bearing(g);
        prop_assert_eq!(select_angular(&reps, goal).unwrap(), select_angular(&scaled, goal).unwrap());
    }
}

// ---- plan -------------------------------------------------------------------

fn free_map() -> CostMap {
    CostMap::filled(GridSpec::default(), 0.0).unwrap()
}

/// Two corridors leaving the origin at the given bearings, all else lethal.
fn fork_map(bearings: [f64; 2], width: f64) -> (CostMap, [Vec<Point>; 2]) {
    let mut map = free_map();
    let polys = bearings.map(|b| vec![Point::ORIGIN, Point::from_bearing(b) * 8.0]);
    let walls: Vec<_> = map
        .indices()
        .filter(|&i| {
            let c = map.cell_center(i);
            polys
                .iter()
                .all(|p| distance_to_polyline(c, p) > width / 2.0)
        })
        .collect();
    map.set_cells(&walls, 1.0).unwrap();
    (map, polys)
}

/// Open ground as seen by a forward camera: free inside a +-30 degree wedge,
/// unknown elsewhere.
fn open_field_map() -> CostMap {
    let mut map = CostMap::new(GridSpec::default()).unwrap();
    let visible: Vec<_> = map
        .indices()
        .filter(|&i| map.cell_center(i).bearing().abs() <= 30f64.to_radians())
        .collect();
    map.set_cells(&visible, 0.0).unwrap();
    map
}

#[test]
fn open_field_goal_ahead() {
    // mirror the sampled set so the scene is left/right symmetric
    let mut set = sample_paths(&SamplerSpec::default(), 0).unwrap();
    let mirrored: Vec<Path> = set
        .paths
        .iter()
        .map(|p| {
            Path::new(
                p.kind,
                p.waypoints.iter().map(|w| Point::new(-w.x, w.z)).collect(),
            )
            .unwrap()
        })
        .collect();
    set.paths.extend(mirrored);
    let goal = Goal::from_bearing(0.0, 20.0);
    for strategy in [Strategy::Angular, Strategy::Euclidean] {
        let mut cfg = PlannerConfig {
            strategy,
            top_k: set.len(),
            ..PlannerConfig::default()
        };
        cfg.fusion.merge_threshold = f64::INFINITY;
        let out = plan(&set, &open_field_map(), &goal, &cfg).unwrap();
        let bearing = out.path.heading().bearing().to_degrees();
        assert!(bearing.abs() <= 5.0, "{strategy}: {bearing}");
    }
}

#[test]
fn fork_angular_follows_goal_branch() {
    let left = -35f64.to_radians();
    let (map, polys) = fork_map([left, 35f64.to_radians()], 1.4);
    let set = sample_paths(&SamplerSpec::default(), 1).unwrap();
    let goal = Goal::from_bearing(left, 30.0);
    let out = plan(&set, &map, &goal, &PlannerConfig::default()).unwrap();
    let inside = out
        .path
        .waypoints
        .iter()
        .filter(|&&w| distance_to_polyline(w, &polys[0]) <= 0.7)
        .count();
    assert!(
        inside * 2 > out.path.len(),
        "only {inside} waypoints in the left branch"
    );
    assert!(out.path.endpoint().x < 0.0);
    assert!(out.diagnostics.representatives.len() >= 2);
}

#[test]
fn fully_lethal_map_has_no_path() {
    let set = sample_paths(&SamplerSpec::default(), 0).unwrap();
    let map = CostMap::filled(GridSpec::default(), 1.0).unwrap();
    let err = plan(
        &set,
        &map,
        &Goal::from_bearing(0.0, 5.0),
        &PlannerConfig::default(),
    );
    assert!(matches!(err, Err(Error::NoPath { .. })));
}

#[test]
fn plan_is_deterministic() {
    let (map, _) = fork_map([-0.5, 0.6], 1.2);
    let set = sample_paths(&SamplerSpec::default(), 3).unwrap();
    let goal = Goal::from_bearing(0.2, 10.0);
    let a = plan(&set, &map, &goal, &PlannerConfig::default()).unwrap();
    let b = plan(&set, &map, &goal, &PlannerConfig::default()).unwrap();
    assert_eq!(a.diagnostics.to_json(), b.diagnostics.to_json());
}

#[test]
fn zero_threshold_angular_equals_kmeans_only() {
    let (map, _) = fork_map([-0.5, 0.6], 1.2);
    let set = sample_paths(&SamplerSpec::default(), 3).unwrap();
    let goal = Goal::from_bearing(-0.3, 10.0);
    let mut cfg = PlannerConfig::default();
    cfg.fusion.merge_threshold = 0.0;
    let merged = plan(&set, &map, &goal, &cfg).unwrap();
    cfg.strategy = Strategy::KmeansOnly;
    let km = plan(&set, &map, &goal, &cfg).unwrap();
    let external = select_angular(&km.diagnostics.representatives, goal.direction).unwrap();
    assert_eq!(merged.path, km.diagnostics.representatives[external]);
    assert_eq!(merged.path, km.path);
}

#[test]
fn no_fusion_minimizes_combined_cost() {
    let (map, _) = fork_map([-0.5, 0.6], 1.2);
    let set = sample_paths(&SamplerSpec::default(), 3).unwrap();
    let goal = Goal::from_bearing(0.1, 10.0);
    for beta in [0.0, 1.0, 10.0] {
        let cfg = PlannerConfig {
            strategy: Strategy::NoFusion { beta },
            ..PlannerConfig::default()
        };
        let out = plan(&set, &map, &goal, &cfg).unwrap();
        let best = out
            .diagnostics
            .costs
            .iter()
            .map(|c| c.traversability + beta * c.goal)
            .fold(f64::INFINITY, f64::min);
        let chosen = &out.diagnostics.costs[out.diagnostics.selected_index];
        assert_eq!(chosen.traversability + beta * chosen.goal, best);
        assert_eq!(out.diagnostics.k, None);
    }
}

#[test]
fn strategy_parsing() {
    assert_eq!(
        Strategy::parse("nf:0.5").unwrap(),
        Strategy::NoFusion { beta: 0.5 }
    );
    assert_eq!(Strategy::parse("angular").unwrap(), Strategy::Angular);
    assert_eq!(Strategy::parse("es").unwrap(), Strategy::Euclidean);
    assert_eq!(Strategy::parse("km").unwrap(), Strategy::KmeansOnly);
    assert!(Strategy::parse("nf:-1").is_err());
    assert!(Strategy::parse("bogus").is_err());
    assert_eq!(Strategy::NoFusion { beta: 10.0 }.to_string(), "nf:10");
}
