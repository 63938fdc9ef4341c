use proptest::prelude::*;
use rand::SeedableRng;

use super::*;
use crate::costmap::CostMap;
use crate::fusion::Strategy;
use crate::paths::{sample_paths, PathKind, SamplerSpec};
use crate::sim::{synthesize_world, ScenarioKind, WorldParams};

fn mask(w: usize, h: usize, on: impl Fn(usize, usize) -> bool) -> Mask {
    let mut m = Mask::new(w, h);
    for v in 0..h {
        for u in 0..w {
            m.set(u, v, on(u, v));
        }
    }
    m
}

#[test]
fn iou_reference_values() {
    let full = mask(4, 4, |_, _| true);
    let left = mask(4, 4, |u, _| u < 2);
    let right = mask(4, 4, |u, _| u >= 2);
    assert_eq!(iou(&full, &full).unwrap(), 1.0);
    assert_eq!(iou(&left, &right).unwrap(), 0.0);
    assert_eq!(iou(&left, &full).unwrap(), 0.5);
    let empty = Mask::new(4, 4);
    assert_eq!(iou(&empty, &empty).unwrap(), 1.0);
    assert!(iou(&full, &Mask::new(4, 5)).is_err());
}

proptest! {
    #[test]
    fn iou_is_symmetric_and_one_only_when_equal(
        a in proptest::collection::vec(any::<bool>(), 24),
        b in proptest::collection::vec(any::<bool>(), 24),
    ) {
        let (ma, mb) = (Mask::from_vec(6, 4, a).unwrap(), Mask::from_vec(6, 4, b).unwrap());
        let x = iou(&ma, &mb).unwrap();
        prop_assert_eq!(x, iou(&mb, &ma).unwrap());
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert_eq!(x == 1.0, ma == mb);
    }
}

fn straight(bearing_deg: f64, length: f64) -> Path {
    let end = Point::from_bearing(bearing_deg.to_radians()) * length;
    Path::new(
        PathKind::Linear,
        (0..20).map(|k| end * (k as f64 / 19.0)).collect(),
    )
    .unwrap()
}

/// Two corridors leaving the origin at -30 and +30 degrees, 1.6 m wide.
fn fork_labels() -> Vec<Branch> {
    [-30f64, 30.0]
        .iter()
        .enumerate()
        .map(|(i, &deg)| Branch {
            polyline: vec![Point::ORIGIN, Point::from_bearing(deg.to_radians()) * 10.0],
            width: 1.6,
            goal_correct: i == 1,
        })
        .collect()
}

fn labelled_case(branches: Vec<Branch>, correct: usize) -> FusionCase {
    let costmap = CostMap::filled(GridSpec::default(), 0.0).unwrap();
    FusionCase::new(
        "t",
        costmap,
        branches,
        correct,
        Goal::from_bearing(0.5, 10.0),
    )
    .unwrap()
}

#[test]
fn case_rejects_out_of_range_branch() {
    let costmap = CostMap::filled(GridSpec::default(), 0.0).unwrap();
    assert!(FusionCase::new(
        "t",
        costmap,
        fork_labels(),
        2,
        Goal::at(Point::new(0.0, 5.0))
    )
    .is_err());
}

#[test]
fn membership_needs_a_strict_majority() {
    let branch = vec![Branch {
        polyline: vec![Point::ORIGIN, Point::new(0.0, 10.0)],
        width: 1.0,
        goal_correct: true,
    }];
    // waypoints 0..=9 inside, 10..=19 outside: exactly half
    let mut wp: Vec<Point> = (0..10).map(|k| Point::new(0.0, k as f64 * 0.1)).collect();
    wp.extend((10..20).map(|k| Point::new(2.0, k as f64 * 0.1)));
    let half = Path::new(PathKind::Linear, wp.clone()).unwrap();
    assert!(membership(&half, &branch).is_empty());
    wp[10] = Point::new(0.0, 1.0);
    let majority = Path::new(PathKind::Linear, wp).unwrap();
    assert_eq!(membership(&majority, &branch), [0]);
}

#[test]
fn classify_reference_examples() {
    let case = labelled_case(fork_labels(), 1);
    let one_each = [straight(-30.0, 3.5), straight(30.0, 3.5)];
    assert_eq!(
        classify_representatives(&case, &one_each),
        MergeEvents {
            tp: 2,
            ..Default::default()
        }
    );
    let straddle = [straight(0.0, 3.5)];
    assert_eq!(
        classify_representatives(&case, &straddle),
        MergeEvents {
            fp: 1,
            ..Default::default()
        }
    );
    let split = [
        straight(-30.0, 3.5),
        straight(27.0, 3.5),
        straight(33.0, 3.5),
    ];
    assert_eq!(
        classify_representatives(&case, &split),
        MergeEvents {
            tp: 2,
            fn_: 1,
            ..Default::default()
        }
    );
    let nowhere = [straight(90.0, 3.5)];
    assert_eq!(classify_representatives(&case, &nowhere).fp, 1);
    assert!(selection_correct(&case, &straight(30.0, 3.5)));
    assert!(!selection_correct(&case, &straight(-30.0, 3.5)));
}

#[test]
fn single_corridor_contributes_true_negatives() {
    let corridor = vec![Branch {
        polyline: vec![Point::ORIGIN, Point::new(0.0, 10.0)],
        width: 2.0,
        goal_correct: true,
    }];
    let case = labelled_case(corridor, 0);
    let reps = [straight(-3.0, 3.5), straight(3.0, 3.5)];
    assert_eq!(
        classify_representatives(&case, &reps),
        MergeEvents {
            tn: 1,
            fn_: 1,
            ..Default::default()
        }
    );
}

#[test]
fn precision_and_recall_are_flagged_when_undefined() {
    let none = MergeEvents {
        tn: 3,
        ..Default::default()
    };
    assert_eq!(none.precision(), None);
    assert_eq!(none.recall(), None);
    let e = MergeEvents {
        tp: 3,
        fp: 1,
        fn_: 3,
        tn: 0,
    };
    assert_eq!(e.precision(), Some(0.75));
    assert_eq!(e.recall(), Some(0.5));
}

proptest! {
    /// Every representative yields exactly one event.
    #[test]
    fn events_reconcile_with_representatives(bearings in proptest::collection::vec(-80.0f64..80.0, 1..8)) {
        let case = labelled_case(fork_labels(), 0);
        let reps: Vec<Path> = bearings.iter().map(|&b| straight(b, 3.5)).collect();
        prop_assert_eq!(classify_representatives(&case, &reps).total(), reps.len());
    }
}

fn fork_world_case(goal_branch: usize) -> FusionCase {
    let params = WorldParams {
        goal_branch: Some(goal_branch),
        ..WorldParams::default()
    };
    let world = synthesize_world(ScenarioKind::Fork, &params, 0).unwrap();
    let pose = Pose::new(0.0, params.stem_length - 0.5, std::f64::consts::FRAC_PI_2);
    let obs = ObservationConfig::default();
    let camera = obs.camera.build().unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    FusionCase::from_world(
        format!("fork{goal_branch}"),
        &world,
        pose,
        world.goal,
        &camera,
        &obs.perception,
        &Noise::default(),
        &obs.grid,
        &mut rng,
    )
    .unwrap()
}

fn corridor_case(i: u64) -> FusionCase {
    let world = synthesize_world(ScenarioKind::Corridor, &WorldParams::default(), i).unwrap();
    let obs = ObservationConfig::default();
    let camera = obs.camera.build().unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(i);
    let pose = Pose::new(0.0, i as f64 * 0.5, std::f64::consts::FRAC_PI_2);
    FusionCase::from_world(
        format!("corridor{i}"),
        &world,
        pose,
        world.goal,
        &camera,
        &obs.perception,
        &Noise::default(),
        &obs.grid,
        &mut rng,
    )
    .unwrap()
}

fn default_paths() -> PathSet {
    sample_paths(&SamplerSpec::default(), 0).unwrap()
}

#[test]
fn clean_symmetric_forks_score_perfectly() {
    let cases = [fork_world_case(0), fork_world_case(1)];
    assert_eq!(
        cases[0].branches[0].polyline[0],
        cases[1].branches[0].polyline[0]
    );
    let report = run_fusion_bench(&cases, &default_paths(), &PlannerConfig::default()).unwrap();
    assert_eq!(report.psa, 1.0);
    assert_eq!(report.pip, Some(1.0));
    assert_eq!(report.pir, Some(1.0));
    assert_eq!(report.correct_selections, 2);
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["events"]["fn"], 0);
}

#[test]
fn report_counts_reconcile_with_records() {
    let cases = [fork_world_case(0), corridor_case(0), fork_world_case(1)];
    let report = run_fusion_bench(&cases, &default_paths(), &PlannerConfig::default()).unwrap();
    let sum = report
        .records
        .iter()
        .fold(MergeEvents::default(), |mut acc, r| {
            acc.add(&r.events);
            acc
        });
    assert_eq!(sum, report.events);
    assert_eq!(
        report.events.total(),
        report
            .records
            .iter()
            .map(|r| r.representatives)
            .sum::<usize>()
    );
    assert_eq!(report.events.tn, 1);
    let names: Vec<_> = report.records.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["fork0", "corridor0", "fork1"]);
}

#[test]
fn blocked_view_counts_as_wrong_without_events() {
    let mut case = fork_world_case(0);
    case.costmap = CostMap::filled(GridSpec::default(), 1.0).unwrap();
    let record = evaluate_case(&case, &default_paths(), &PlannerConfig::default()).unwrap();
    assert!(record.no_path && !record.selected_correct);
    assert_eq!(record.events.total(), 0);
    assert!(run_fusion_bench(&[], &default_paths(), &PlannerConfig::default()).is_err());
}

#[test]
fn pr_sweep_limits() {
    let cases = [fork_world_case(0), fork_world_case(1), corridor_case(1)];
    let paths = default_paths();
    let planner = PlannerConfig::default();
    let points = pr_sweep(&cases, &paths, &planner, &[0.0, 0.5, 1.0, 2.0, 1e9]).unwrap();
    let ks: usize = run_fusion_bench(
        &cases,
        &paths,
        &PlannerConfig {
            strategy: Strategy::KmeansOnly,
            ..planner.clone()
        },
    )
    .unwrap()
    .records
    .iter()
    .map(|r| r.k.unwrap())
    .sum();
    assert_eq!(points[0].representatives, ks);
    assert_eq!(points[0].merges, 0);
    assert_eq!(points[0].precision, None);
    for pair in points.windows(2) {
        assert!(pair[1].representatives <= pair[0].representatives);
    }
    let total = points.last().unwrap();
    assert_eq!(total.representatives, cases.len());
    // the two fork cases collapse to one straddling representative each
    assert_eq!(total.events.fp, 2);
    assert!(total.precision.unwrap() < 0.5);
    assert!(pr_sweep(&cases, &paths, &planner, &[1.0, 0.5]).is_err());
    assert!(pr_sweep(&cases, &paths, &planner, &[-1.0]).is_err());
}

#[test]
fn beta_sweep_on_single_corridors_is_perfect() {
    let cases: Vec<_> = (0..3).map(corridor_case).collect();
    let betas = [0.1, 1.0, 10.0];
    let points = beta_sweep(
        &cases,
        &SamplerSpec::default(),
        &PlannerConfig::default(),
        &betas,
        &[0, 1],
    )
    .unwrap();
    assert_eq!(points.len(), 3);
    for p in &points {
        assert_eq!(p.psa_mean, 1.0);
        assert_eq!(p.psa_stderr, 0.0);
        assert_eq!(p.psa.len(), 2);
    }
    let single = beta_sweep(
        &cases,
        &SamplerSpec::default(),
        &PlannerConfig::default(),
        &[1.0],
        &[3],
    )
    .unwrap();
    assert_eq!(single.len(), 1);
    assert!(beta_sweep(
        &cases,
        &SamplerSpec::default(),
        &PlannerConfig::default(),
        &[],
        &[0]
    )
    .is_err());
}

#[test]
fn standard_error_matches_hand_computation() {
    // sample sd of (0.5, 0.7, 0.9) is 0.2; stderr = 0.2 / sqrt(3)
    let (mean, se) = sweep::mean_stderr(&[0.5, 0.7, 0.9]);
    assert!((mean - 0.7).abs() < 1e-12);
    assert!((se - 0.2 / 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn reports_are_deterministic() {
    let entries = fork_suite(6, 11).unwrap();
    let obs = ObservationConfig::default();
    let a = build_suite(&entries, &obs).unwrap();
    let b = build_suite(&entries, &obs).unwrap();
    assert_eq!(a, b);
    let paths = default_paths();
    let planner = PlannerConfig::default();
    assert_eq!(
        run_fusion_bench(&a, &paths, &planner).unwrap(),
        run_fusion_bench(&b, &paths, &planner).unwrap()
    );
    let sampler = SamplerSpec::default();
    assert_eq!(
        beta_sweep(&a, &sampler, &planner, &[0.5, 2.0], &[0, 1]).unwrap(),
        beta_sweep(&b, &sampler, &planner, &[0.5, 2.0], &[0, 1]).unwrap()
    );
}

#[test]
fn suite_cases_depend_only_on_seed_and_index() {
    let short = fork_suite(5, 3).unwrap();
    let long = fork_suite(40, 3).unwrap();
    assert_eq!(short[..], long[..5]);
    assert_ne!(fork_suite(5, 4).unwrap(), short);
    for fam in [SuiteFamily::Fork, SuiteFamily::Decoy, SuiteFamily::Corridor] {
        assert!(long.iter().any(|e| e.family == fam), "{fam:?} missing");
    }
}

#[test]
fn suite_round_trips_through_files() {
    let entries = fork_suite(4, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_suite(dir.path(), &entries).unwrap();
    let obs = ObservationConfig::default();
    let loaded = load_suite(dir.path(), &obs).unwrap();
    assert_eq!(loaded, build_suite(&entries, &obs).unwrap());
    let empty = tempfile::tempdir().unwrap();
    assert!(load_suite(empty.path(), &obs).is_err());
}

#[test]
fn csv_layouts() {
    let e = MergeEvents {
        tp: 3,
        fp: 1,
        fn_: 2,
        tn: 0,
    };
    let pr = pr_sweep_csv(&[PrPoint {
        threshold: 0.5,
        events: e,
        merges: 0,
        representatives: 6,
        precision: None,
        recall: e.recall(),
        psa: 0.5,
    }]);
    assert_eq!(
        pr,
        "threshold,precision,recall,psa,representatives,merges,tp,fp,fn,tn\n\
         0.5,undefined,0.600000,0.500000,6,0,3,1,2,0\n"
    );
    let beta = beta_sweep_csv(&[BetaPoint {
        beta: 2.0,
        psa_mean: 0.25,
        psa_stderr: 0.0,
        psa: vec![0.25],
    }]);
    assert_eq!(
        beta,
        "beta,psa_mean,psa_stderr,seeds\n2,0.250000,0.000000,1\n"
    );
    let record = CaseRecord {
        name: "a".into(),
        events: e,
        selected_correct: true,
        no_path: false,
        representatives: 6,
        merges: 0,
        k: Some(6),
    };
    let fused = MetricReport::from_records("angular", vec![record.clone()]).unwrap();
    let nf = MetricReport::from_records("nf:1", vec![record]).unwrap();
    assert_eq!(
        bench_csv(&[fused, nf]),
        "Method,PIP,PIR,PSA\nK-means + Merge + Angular,75.0,60.0,100.0\nNo Fusion (beta=1),-,-,100.0\n"
    );
}

#[test]
fn sweep_charts_render() {
    let svg = beta_sweep_svg(
        &[
            BetaPoint {
                beta: 0.1,
                psa_mean: 0.4,
                psa_stderr: 0.05,
                psa: vec![],
            },
            BetaPoint {
                beta: 10.0,
                psa_mean: 0.6,
                psa_stderr: 0.0,
                psa: vec![],
            },
        ],
        Some(("angular", 0.9)),
    );
    assert!(svg.starts_with("<svg") && svg.contains("angular"));
}
