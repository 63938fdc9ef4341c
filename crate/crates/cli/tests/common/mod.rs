#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pathfuse_core::camera::CameraSpec;
use pathfuse_core::sim::{
    render_observation, ExplicitWorld, Noise, Pose, RobotState, ScenarioKind, World, WorldParams,
    WorldSpec,
};
use pathfuse_core::{CellIndex, CostMap, GridSpec, Mask, Point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn pathfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathfuse"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

pub fn corridor_spec(width: f64, seed: u64) -> WorldSpec {
    WorldSpec {
        scenario_kind: ScenarioKind::Corridor,
        params: serde_json::to_value(WorldParams {
            width,
            length: 20.0,
            ..WorldParams::default()
        })
        .unwrap(),
        seed,
    }
}

pub fn write_calib(dir: &Path) -> PathBuf {
    let path = dir.join("calib.json");
    write_json(&path, &CameraSpec::default());
    path
}

/// Noise-free view down a 2 m corridor from its entrance.
pub fn write_corridor_mask(dir: &Path) -> PathBuf {
    let world = World::from_spec(&corridor_spec(2.0, 0)).unwrap();
    let camera = CameraSpec::default().build().unwrap();
    let state = RobotState::at(Pose::new(0.0, 0.0, FRAC_PI_2));
    let mask = render_observation(
        &world,
        &state,
        &camera,
        &Noise::off(),
        &mut ChaCha8Rng::seed_from_u64(0),
    );
    let path = dir.join("corridor.pgm");
    mask.save(&path).unwrap();
    path
}

/// Pinhole with a horizontal half-angle of about 63 degrees, wide enough to
/// see the whole sampling fan.
pub fn write_wide_calib(dir: &Path) -> PathBuf {
    let path = dir.join("wide.json");
    write_json(&path, &wide_camera());
    path
}

pub fn wide_camera() -> CameraSpec {
    CameraSpec {
        fx: 80.0,
        fy: 80.0,
        ..CameraSpec::default()
    }
}

pub fn write_dark_mask(dir: &Path) -> PathBuf {
    let (w, h) = wide_camera().build().unwrap().dims();
    let path = dir.join("dark.pgm");
    Mask::new(w, h).save(&path).unwrap();
    path
}

pub fn write_corridor_world(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join(format!("corridor{seed}.json"));
    write_json(&path, &corridor_spec(2.0, seed));
    path
}

/// Start inside a 0.8 m free disk walled in by lethal cells; goal 4 m out.
pub fn write_ring_world(dir: &Path) -> PathBuf {
    let spec = GridSpec {
        resolution: 0.1,
        width: 100,
        height: 100,
        origin: Point::new(-5.0, -5.0),
        unknown_cost: 1.0,
    };
    let mut map = CostMap::filled(spec.clone(), 1.0).unwrap();
    for row in 0..spec.height {
        for col in 0..spec.width {
            let idx = CellIndex::new(col, row);
            if map.cell_center(idx).norm() < 0.8 {
                map.set(idx, 0.0).unwrap();
            }
        }
    }
    map.save(&dir.join("ring.txt")).unwrap();
    let path = dir.join("ring.json");
    write_json(
        &path,
        &ExplicitWorld {
            grid: "ring.txt".into(),
            branches: vec![],
            start: Pose::new(0.0, 0.0, FRAC_PI_2),
            goal: Point::new(0.0, 4.0),
        },
    );
    path
}

/// Straight-corridor cases: one branch, so every strategy selects it.
pub fn write_corridor_suite(dir: &Path, n: u64) -> PathBuf {
    let suite = dir.join("single");
    std::fs::create_dir_all(suite.join("worlds")).unwrap();
    for i in 0..n {
        let name = format!("c{i:02}");
        write_json(
            &suite.join(format!("worlds/{name}.json")),
            &corridor_spec(1.6 + 0.2 * i as f64, i),
        );
        let case = serde_json::json!({
            "name": name,
            "world": format!("worlds/{name}.json"),
            "pose": {"x": 0.0, "z": 0.5 * i as f64, "theta": FRAC_PI_2},
            "seed": i,
        });
        write_json(&suite.join(format!("{name}.json")), &case);
    }
    suite
}

pub fn gen_suite(dir: &Path, count: usize, seed: u64) -> PathBuf {
    let suite = dir.join(format!("forks{seed}"));
    let out = pathfuse(&[
        "--seed",
        &seed.to_string(),
        "gen-suite",
        "--out",
        s(&suite),
        "--count",
        &count.to_string(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    suite
}
