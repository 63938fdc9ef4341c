//! Minimal SVG writer shared by replay frames and report plots.

use std::fmt::Write as _;

use crate::geometry::Point;

/// Maps a world-space box onto a pixel canvas with `z` pointing up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewport {
    pub min: Point,
    pub max: Point,
    pub width: f64,
    pub height: f64,
}

impl Viewport {
    /// Fits `[min, max]` into a canvas `width` pixels wide, preserving aspect.
    pub fn fit(min: Point, max: Point, width: f64) -> Self {
        let span_x = (max.x - min.x).max(1e-9);
        let span_z = (max.z - min.z).max(1e-9);
        Viewport {
            min,
            max,
            width,
            height: width * span_z / span_x,
        }
    }

    pub fn px(&self, p: Point) -> (f64, f64) {
        let sx = self.width / (self.max.x - self.min.x).max(1e-9);
        let sz = self.height / (self.max.z - self.min.z).max(1e-9);
        ((p.x - self.min.x) * sx, (self.max.z - p.z) * sz)
    }

    pub fn scale(&self) -> f64 {
        self.width / (self.max.x - self.min.x).max(1e-9)
    }
}

pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

fn f(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        let mut svg = Svg {
            width,
            height,
            body: String::new(),
        };
        svg.rect(0.0, 0.0, width, height, "white", None);
        svg
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: Option<&str>) {
        let stroke = stroke
            .map(|s| format!(r#" stroke="{s}""#))
            .unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"{stroke}/>"#,
            f(x),
            f(y),
            f(w),
            f(h)
        );
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{stroke}" stroke-width="{}"/>"#,
            f(a.0),
            f(a.1),
            f(b.0),
            f(b.1),
            f(width)
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64, dashed: bool) {
        if points.is_empty() {
            return;
        }
        let pts: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{},{}", f(*x), f(*y)))
            .collect();
        let dash = if dashed {
            r#" stroke-dasharray="4 3""#
        } else {
            ""
        };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{}"{dash}/>"#,
            pts.join(" "),
            f(width)
        );
    }

    pub fn circle(&mut self, c: (f64, f64), r: f64, fill: &str, stroke: Option<&str>) {
        let stroke = stroke
            .map(|s| format!(r#" stroke="{s}""#))
            .unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}"{stroke}/>"#,
            f(c.0),
            f(c.1),
            f(r)
        );
    }

    pub fn text(&mut self, at: (f64, f64), size: f64, anchor: &str, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="{}" text-anchor="{anchor}">{}</text>"#,
            f(at.0),
            f(at.1),
            f(size),
            escape(text)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n{}</svg>\n",
            self.body,
            w = f(self.width),
            h = f(self.height)
        )
    }
}

/// One labelled series of an x/y chart.
pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Symmetric error bar per point.
    pub errors: Option<Vec<f64>>,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub log_x: bool,
}

impl Chart<'_> {
    pub fn render(&self, series: &[Series<'_>]) -> String {
        let (w, h) = (520.0, 380.0);
        let (left, right, top, bottom) = (64.0, 20.0, 36.0, 52.0);
        let tx = |x: f64| -> f64 {
            let (lo, hi, x) = if self.log_x {
                (self.x_range.0.ln(), self.x_range.1.ln(), x.ln())
            } else {
                (self.x_range.0, self.x_range.1, x)
            };
            left + (x - lo) / (hi - lo).max(1e-12) * (w - left - right)
        };
        let ty = |y: f64| -> f64 {
            let (lo, hi) = self.y_range;
            h - bottom - (y - lo) / (hi - lo).max(1e-12) * (h - top - bottom)
        };
        let mut svg = Svg::new(w, h);
        svg.text((w / 2.0, 22.0), 15.0, "middle", self.title);
        svg.line((left, h - bottom), (w - right, h - bottom), "black", 1.0);
        svg.line((left, top), (left, h - bottom), "black", 1.0);
        for i in 0..=4 {
            let y = self.y_range.0 + (self.y_range.1 - self.y_range.0) * i as f64 / 4.0;
            svg.line((left - 4.0, ty(y)), (left, ty(y)), "black", 1.0);
            svg.text((left - 7.0, ty(y) + 4.0), 11.0, "end", &format!("{y:.2}"));
        }
        let ticks: Vec<f64> = if self.log_x {
            let mut t = Vec::new();
            let mut v = 10f64.powf(self.x_range.0.log10().floor());
            while v <= self.x_range.1 * 1.0001 {
                if v >= self.x_range.0 * 0.9999 {
                    t.push(v);
                }
                v *= 10.0;
            }
            t
        } else {
            (0..=4)
                .map(|i| self.x_range.0 + (self.x_range.1 - self.x_range.0) * i as f64 / 4.0)
                .collect()
        };
        for x in ticks {
            svg.line((tx(x), h - bottom), (tx(x), h - bottom + 4.0), "black", 1.0);
            svg.text((tx(x), h - bottom + 17.0), 11.0, "middle", &format!("{x}"));
        }
        svg.text((w / 2.0, h - 12.0), 12.0, "middle", self.x_label);
        svg.text((16.0, h / 2.0), 12.0, "middle", self.y_label);
        for (i, s) in series.iter().enumerate() {
            let pts: Vec<(f64, f64)> = s.points.iter().map(|&(x, y)| (tx(x), ty(y))).collect();
            svg.polyline(&pts, s.color, 1.8, false);
            for (j, &p) in pts.iter().enumerate() {
                svg.circle(p, 3.0, s.color, None);
                if let Some(e) = s.errors.as_ref().and_then(|e| e.get(j)) {
                    let (x, y) = s.points[j];
                    svg.line((tx(x), ty(y - e)), (tx(x), ty(y + e)), s.color, 1.0);
                }
            }
            let ly = top + 14.0 + 16.0 * i as f64;
            svg.line(
                (w - right - 110.0, ly - 4.0),
                (w - right - 92.0, ly - 4.0),
                s.color,
                2.0,
            );
            svg.text((w - right - 88.0, ly), 11.0, "start", s.label);
        }
        svg.finish()
    }
}
