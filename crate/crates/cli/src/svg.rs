//! Two-dimensional scatter of a cover: points as gray triangles, box
//! outlines, and box centers as black squares.

use std::fmt::Write as _;

use sizecover_core::cover::ParamPoint;

use crate::error::{PipelineError, Result};
use crate::report::RunReport;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 60.0;

struct Frame {
    lo: [f64; 2],
    span: [f64; 2],
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.lo[0]) / self.span[0] * (SIZE - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        SIZE - MARGIN - (v - self.lo[1]) / self.span[1] * (SIZE - 2.0 * MARGIN)
    }
}

fn frame(report: &RunReport, points: &[ParamPoint]) -> Frame {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut extend = |p: [f64; 2]| {
        for j in 0..2 {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    };
    for p in points {
        extend([p.coords[0], p.coords[1]]);
    }
    for b in &report.boxes {
        let (c, s) = (&b.center, &b.side_lengths);
        extend([c[0] - s[0] / 2.0, c[1] - s[1] / 2.0]);
        extend([c[0] + s[0] / 2.0, c[1] + s[1] / 2.0]);
    }
    let mut span = [0.0; 2];
    for j in 0..2 {
        if !lo[j].is_finite() {
            lo[j] = 0.0;
            hi[j] = 1.0;
        }
        let width = (hi[j] - lo[j]).max(report.tolerances[j]);
        lo[j] -= 0.05 * width;
        span[j] = 1.1 * width;
    }
    Frame { lo, span }
}

/// SVG document for a d = 2 report and the points it was computed on.
pub fn render_svg(report: &RunReport, points: &[ParamPoint]) -> Result<String> {
    if report.dim() != 2 || points.iter().any(|p| p.dim() != 2) {
        return Err(PipelineError::Usage(format!("SVG plots need d = 2, got d = {}", report.dim())));
    }
    let f = frame(report, points);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{w}" height="{w}" fill="none" stroke="#999"/>"##,
        w = SIZE - 2.0 * MARGIN
    );
    let names: Vec<&str> = report.measurements.iter().map(String::as_str).collect();
    let (nx, ny) = (names.first().copied().unwrap_or("m0"), names.get(1).copied().unwrap_or("m1"));
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{} [m]</text>"#,
        SIZE / 2.0,
        SIZE - MARGIN / 3.0,
        escape(nx)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14" transform="rotate(-90 {:.2} {:.2})">{} [m]</text>"#,
        MARGIN / 3.0,
        SIZE / 2.0,
        MARGIN / 3.0,
        SIZE / 2.0,
        escape(ny)
    );
    for p in points {
        let (x, y) = (f.x(p.coords[0]), f.y(p.coords[1]));
        let _ = writeln!(
            out,
            r##"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="#888"/>"##,
            x,
            y - 4.0,
            x - 3.5,
            y + 2.5,
            x + 3.5,
            y + 2.5
        );
    }
    for b in &report.boxes {
        let (c, s) = (&b.center, &b.side_lengths);
        let (x0, x1) = (f.x(c[0] - s[0] / 2.0), f.x(c[0] + s[0] / 2.0));
        let (y0, y1) = (f.y(c[1] + s[1] / 2.0), f.y(c[1] - s[1] / 2.0));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y1 - y0
        );
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="black"/>"#,
            f.x(c[0]) - 3.0,
            f.y(c[1]) - 3.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
