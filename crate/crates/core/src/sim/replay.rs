use super::mission::SimLog;
use super::world::World;
use crate::costmap::LETHAL;
use crate::geometry::Point;
use crate::render::{Svg, Viewport};

const FRAME_WIDTH: f64 = 480.0;
/// Side of the square blocks the truth grid is drawn with, in cells.
const BLOCK: usize = 5;

/// One SVG frame per logged step: obstacles, route trace so far,
/// representatives and the selected path.
pub fn replay(log: &SimLog, world: Option<&World>) -> Vec<String> {
    if log.steps.is_empty() {
        return Vec::new();
    }
    let (min, max) = match world {
        Some(w) => w.extent(),
        None => trace_bounds(log),
    };
    let vp = Viewport::fit(min, max, FRAME_WIDTH);
    let background = world.map(|w| obstacle_blocks(w, &vp));
    let trace: Vec<(f64, f64)> = log
        .steps
        .iter()
        .map(|s| vp.px(s.state.pose.position()))
        .collect();
    log.steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let mut svg = Svg::new(vp.width, vp.height);
            if let Some(blocks) = &background {
                for &(x, y, w, h) in blocks {
                    svg.rect(x, y, w, h, "#555555", None);
                }
            }
            if let Some(w) = world {
                for b in &w.branches {
                    let pts: Vec<_> = b.polyline.iter().map(|&p| vp.px(p)).collect();
                    let color = if b.goal_correct { "#2a9d2a" } else { "#b0b0b0" };
                    svg.polyline(&pts, color, 1.0, true);
                }
                svg.circle(vp.px(w.goal), 1.0 * vp.scale(), "none", Some("#2a9d2a"));
            }
            for rep in &step.representatives {
                let pts: Vec<_> = rep.iter().map(|&p| vp.px(p)).collect();
                svg.polyline(&pts, "#4a7fd0", 1.2, false);
            }
            if let Some(sel) = &step.selected {
                let pts: Vec<_> = sel.iter().map(|&p| vp.px(p)).collect();
                svg.polyline(&pts, "#d03030", 2.4, false);
            }
            svg.polyline(&trace[..=i], "#222222", 1.0, false);
            let pose = step.state.pose;
            let here = vp.px(pose.position());
            svg.circle(here, 4.0, "#f0a020", Some("black"));
            let nose =
                vp.px(pose.position() + Point::new(pose.theta.cos(), pose.theta.sin()) * 0.6);
            svg.line(here, nose, "black", 1.5);
            svg.text(
                (6.0, 14.0),
                11.0,
                "start",
                &format!(
                    "step {} t={:.2}s reached {}",
                    step.step, step.time, step.reached
                ),
            );
            svg.finish()
        })
        .collect()
}

fn trace_bounds(log: &SimLog) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let points = log.steps.iter().flat_map(|s| {
        std::iter::once(s.state.pose.position())
            .chain(s.selected.iter().flatten().copied())
            .chain(s.representatives.iter().flatten().copied())
    });
    for p in points {
        lo = Point::new(lo.x.min(p.x), lo.z.min(p.z));
        hi = Point::new(hi.x.max(p.x), hi.z.max(p.z));
    }
    let pad = Point::new(1.0, 1.0);
    (lo - pad, hi + pad)
}

/// Lethal truth cells drawn as coarse blocks, merged into horizontal runs.
fn obstacle_blocks(world: &World, vp: &Viewport) -> Vec<(f64, f64, f64, f64)> {
    let map = &world.truth;
    let spec = map.spec();
    let res = spec.resolution * BLOCK as f64;
    let cols = spec.width.div_ceil(BLOCK);
    let rows = spec.height.div_ceil(BLOCK);
    let lethal = |bc: usize, br: usize| {
        let mut n = 0;
        let mut total = 0;
        for row in br * BLOCK..((br + 1) * BLOCK).min(spec.height) {
            for col in bc * BLOCK..((bc + 1) * BLOCK).min(spec.width) {
                total += 1;
                if map.cells()[row * spec.width + col] >= LETHAL {
                    n += 1;
                }
            }
        }
        2 * n > total
    };
    let mut out = Vec::new();
    for br in 0..rows {
        let mut bc = 0;
        while bc < cols {
            if !lethal(bc, br) {
                bc += 1;
                continue;
            }
            let start = bc;
            while bc < cols && lethal(bc, br) {
                bc += 1;
            }
            let lo = spec.origin + Point::new(start as f64 * res, br as f64 * res);
            let hi = spec.origin + Point::new(bc as f64 * res, (br + 1) as f64 * res);
            let (x0, y1) = vp.px(lo);
            let (x1, y0) = vp.px(hi);
            out.push((x0, y0, x1 - x0, y1 - y0));
        }
    }
    out
}
