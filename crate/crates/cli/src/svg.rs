//! Minimal hand-written SVG plots. Output is deterministic: no timestamps,
//! fixed precision, stable element order.

use std::fmt::Write;

use streamplan_core::geometry::{Point, Rect};
use streamplan_core::meshgen::ChannelGrid;
use streamplan_core::MotionSpace;

const WIDTH: f64 = 1000.0;
const MARGIN: f64 = 20.0;

/// World-to-canvas transform with the y axis pointing up.
struct Frame {
    bounds: Rect,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(bounds: Rect) -> Self {
        let scale = (WIDTH - 2.0 * MARGIN) / bounds.width();
        let height = bounds.height() * scale + 2.0 * MARGIN;
        Self { bounds, scale, height }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (
            MARGIN + (p.x - self.bounds.xmin) * self.scale,
            self.height - MARGIN - (p.y - self.bounds.ymin) * self.scale,
        )
    }

    fn points(&self, pts: &[Point]) -> String {
        let mut s = String::new();
        for (i, &p) in pts.iter().enumerate() {
            let (x, y) = self.map(p);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.3},{y:.3}");
        }
        s
    }
}

struct Doc {
    body: String,
    width: f64,
    height: f64,
}

impl Doc {
    fn new(width: f64, height: f64) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<rect x="0" y="0" width="{width:.3}" height="{height:.3}" fill="white"/>"#
        );
        Self { body, width, height }
    }

    fn polyline(&mut self, frame: &Frame, pts: &[Point], stroke: &str, width: f64, extra: &str) {
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{extra}/>"#,
            frame.points(pts)
        );
    }

    fn polygon(&mut self, frame: &Frame, pts: &[Point], fill: &str, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{fill}" stroke="{stroke}" stroke-width="1"/>"#,
            frame.points(pts)
        );
    }

    fn circle(&mut self, frame: &Frame, p: Point, r: f64, fill: &str) {
        let (x, y) = frame.map(p);
        let _ = writeln!(self.body, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{r}" fill="{fill}"/>"#);
    }

    fn text(&mut self, x: f64, y: f64, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.3}" y="{y:.3}" font-family="sans-serif" font-size="12">{s}</text>"#
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.3} {h:.3}\">\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

fn space_doc(space: &MotionSpace) -> (Doc, Frame) {
    let frame = Frame::new(space.bounds);
    let mut doc = Doc::new(WIDTH, frame.height);
    doc.polygon(&frame, &space.bounds.corners(), "none", "black");
    for o in &space.obstacles {
        doc.polygon(&frame, &o.polygon, "#bbbbbb", "#555555");
    }
    (doc, frame)
}

/// Potential lines (constant column) in red, stream lines (constant row) in
/// black, over the obstacle outlines.
pub fn grid_svg(space: &MotionSpace, grids: &[ChannelGrid]) -> String {
    let (mut doc, frame) = space_doc(space);
    for g in grids {
        for i in 0..g.columns() {
            let line: Vec<Point> = (0..g.rows()).map(|k| g.position(i, k)).collect();
            doc.polyline(&frame, &line, "red", 0.6, "");
        }
        for k in 0..g.rows() {
            let line: Vec<Point> = (0..g.columns()).map(|i| g.position(i, k)).collect();
            doc.polyline(&frame, &line, "black", 0.6, "");
        }
    }
    doc.finish()
}

/// Sandwich path in blue, optional baseline in orange, forbidden nodes as
/// yellow dots.
pub fn plan_svg(space: &MotionSpace, forbidden: &[Point], sandwich: &[Point], baseline: Option<&[Point]>) -> String {
    let (mut doc, frame) = space_doc(space);
    for &p in forbidden {
        doc.circle(&frame, p, 2.0, "#e6c200");
    }
    if let Some(b) = baseline {
        doc.polyline(&frame, b, "#e07000", 2.0, "");
    }
    doc.polyline(&frame, sandwich, "#1f4fd0", 2.0, "");
    if let (Some(&s), Some(&g)) = (sandwich.first(), sandwich.last()) {
        doc.circle(&frame, s, 4.0, "green");
        doc.circle(&frame, g, 4.0, "red");
    }
    doc.finish()
}

/// Desired waypoints dashed, their quadrangles in grey, actual positions in
/// green.
pub fn track_svg(space: &MotionSpace, quads: &[[Point; 4]], desired: &[Point], actual: &[Point]) -> String {
    let (mut doc, frame) = space_doc(space);
    for q in quads {
        doc.polygon(&frame, q, "none", "#999999");
    }
    doc.polyline(&frame, desired, "black", 1.0, r#" stroke-dasharray="4 3""#);
    doc.polyline(&frame, actual, "green", 1.5, "");
    doc.finish()
}

/// One panel per input component against the step index.
pub fn controls_svg(series: &[(&str, Vec<f64>)]) -> String {
    let panel_h = 160.0;
    let height = MARGIN + series.len() as f64 * (panel_h + MARGIN);
    let mut doc = Doc::new(WIDTH, height);
    for (n, (label, values)) in series.iter().enumerate() {
        let top = MARGIN + n as f64 * (panel_h + MARGIN);
        let (lo, hi) = values
            .iter()
            .fold((0.0f64, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let steps = values.len().saturating_sub(1).max(1) as f64;
        let left = 60.0;
        let plot_w = WIDTH - left - MARGIN;
        let y_of = |v: f64| top + panel_h - (v - lo) / span * panel_h;
        let _ = writeln!(
            doc.body,
            r#"<rect x="{left:.3}" y="{top:.3}" width="{plot_w:.3}" height="{panel_h:.3}" fill="none" stroke="black" stroke-width="0.5"/>"#
        );
        let zero = y_of(0.0);
        let _ = writeln!(
            doc.body,
            r##"<line x1="{left:.3}" y1="{zero:.3}" x2="{:.3}" y2="{zero:.3}" stroke="#aaaaaa" stroke-width="0.5"/>"##,
            left + plot_w
        );
        let mut pts = String::new();
        for (k, &v) in values.iter().enumerate() {
            if k > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{:.3},{:.3}", left + k as f64 / steps * plot_w, y_of(v));
        }
        let _ = writeln!(
            doc.body,
            r##"<polyline points="{pts}" fill="none" stroke="#1f4fd0" stroke-width="1"/>"##
        );
        doc.text(5.0, top + 14.0, label);
        doc.text(5.0, top + 30.0, &format!("{hi:.3e}"));
        doc.text(5.0, top + panel_h, &format!("{lo:.3e}"));
    }
    doc.finish()
}
