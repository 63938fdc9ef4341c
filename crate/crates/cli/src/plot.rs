use pathfuse_core::render::{Svg, Viewport};
use pathfuse_core::{CellIndex, CostMap, Goal, PathSet, PlanOutcome, Point};

const WIDTH: f64 = 480.0;

fn gray(cost: f64) -> String {
    let v = (255.0 * (1.0 - cost)).round() as u8;
    format!("#{v:02x}{v:02x}{v:02x}")
}

/// Cost map in gray, top-K candidates thin, representatives blue, the
/// selected path red and the goal direction as a green ray.
pub fn plan_svg(map: &CostMap, paths: &PathSet, outcome: &PlanOutcome, goal: &Goal) -> String {
    let spec = map.spec();
    let vp = Viewport::fit(spec.origin, spec.max_corner(), WIDTH);
    let mut svg = Svg::new(vp.width, vp.height);
    let cell = vp.scale() * spec.resolution;
    // one rectangle per run of equal, non-free cells in a row
    for row in 0..spec.height {
        let mut col = 0;
        while col < spec.width {
            let cost = map.get(CellIndex::new(col, row)).unwrap_or(1.0);
            let mut end = col + 1;
            while end < spec.width && map.get(CellIndex::new(end, row)) == Some(cost) {
                end += 1;
            }
            if cost > 0.0 {
                let (x, y) = vp.px(map.cell_corner(CellIndex::new(col, row)));
                svg.rect(
                    x,
                    y - cell,
                    cell * (end - col) as f64,
                    cell,
                    &gray(cost),
                    None,
                );
            }
            col = end;
        }
    }
    let draw = |svg: &mut Svg, pts: &[Point], color: &str, width: f64| {
        let px: Vec<_> = pts.iter().map(|&p| vp.px(p)).collect();
        svg.polyline(&px, color, width, false);
    };
    let d = &outcome.diagnostics;
    for c in &d.costs {
        draw(&mut svg, &paths.paths[c.index].waypoints, "#c8b070", 0.6);
    }
    for rep in &d.representatives {
        draw(&mut svg, &rep.waypoints, "#3070d0", 1.6);
    }
    draw(&mut svg, &outcome.path.waypoints, "#d03030", 2.4);
    let reach = (spec.max_corner().z - spec.origin.z) * 0.9;
    svg.line(
        vp.px(Point::ORIGIN),
        vp.px(goal.direction * reach),
        "#2a9d2a",
        1.0,
    );
    svg.circle(vp.px(Point::ORIGIN), 4.0, "#f0a020", Some("black"));
    svg.text(
        (6.0, 14.0),
        12.0,
        "start",
        &format!(
            "{} k={} reps={}",
            d.strategy,
            d.k.map_or_else(|| "-".into(), |k| k.to_string()),
            d.representatives.len()
        ),
    );
    svg.finish()
}
