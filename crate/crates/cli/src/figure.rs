//! The edge set of `G` drawn in the square `I × J`.

use std::fmt::Write;

use imatch_core::{AlgebraicPoint, SchreierGraph};
use serde::{Deserialize, Serialize};

const MARGIN: f64 = 60.0;
const SCALE: f64 = 400.0;
const METADATA_OPEN: &str = "<metadata id=\"exact-geometry\"><![CDATA[";
const METADATA_CLOSE: &str = "]]></metadata>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FigurePoint {
    pub label: String,
    pub x: AlgebraicPoint,
    pub y: AlgebraicPoint,
}

/// Exact geometry behind the SVG, embedded in its metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FigureData {
    pub alpha: String,
    /// Closed: the first point is repeated at the end.
    pub polygon: Vec<FigurePoint>,
    /// `+1` or `−1` per polygon edge, `None` when not unit slope.
    pub slopes: Vec<Option<i8>>,
    /// Expected corners that do not appear on the polygon.
    pub missing_corners: Vec<String>,
    /// Polygon vertices that are not expected corners.
    pub unexpected_vertices: Vec<String>,
}

impl FigureData {
    pub fn is_faithful(&self) -> bool {
        self.polygon.len() == 5
            && self.polygon.first() == self.polygon.last()
            && self.slopes.iter().all(Option::is_some)
            && self.missing_corners.is_empty()
            && self.unexpected_vertices.is_empty()
    }
}

/// `(label, x, y)` for the four corners `(0,2α)`, `(α,α)`, `(1,1)`, `(1−α,1+α)`.
pub fn expected_corners() -> [(&'static str, AlgebraicPoint, AlgebraicPoint); 4] {
    let p = AlgebraicPoint::from_ints;
    [
        ("(0,2α)", p(0, 0), p(0, 2)),
        ("(α,α)", p(0, 1), p(0, 1)),
        ("(1,1)", p(1, 0), p(1, 0)),
        ("(1−α,1+α)", p(1, -1), p(1, 1)),
    ]
}

pub fn figure_data(graph: &SchreierGraph) -> FigureData {
    let corners = expected_corners();
    let label = |x: &AlgebraicPoint, y: &AlgebraicPoint| {
        corners
            .iter()
            .find(|(_, cx, cy)| cx == x && cy == y)
            .map(|(l, _, _)| l.to_string())
    };
    let raw = graph.edge_polygon();
    let polygon: Vec<FigurePoint> = raw
        .iter()
        .map(|(x, y)| FigurePoint {
            label: label(x, y).unwrap_or_else(|| format!("({x},{y})")),
            x: x.clone(),
            y: y.clone(),
        })
        .collect();
    let slopes = raw
        .windows(2)
        .map(|w| {
            let dx = &w[1].0 - &w[0].0;
            let dy = &w[1].1 - &w[0].1;
            if dx == AlgebraicPoint::zero() {
                None
            } else if dy == dx {
                Some(1)
            } else if dy == -dx.clone() {
                Some(-1)
            } else {
                None
            }
        })
        .collect();
    let missing_corners = corners
        .iter()
        .filter(|(_, x, y)| !raw.iter().any(|(px, py)| px == x && py == y))
        .map(|(l, _, _)| l.to_string())
        .collect();
    let unexpected_vertices = raw
        .iter()
        .filter(|(x, y)| label(x, y).is_none())
        .map(|(x, y)| format!("({x},{y})"))
        .collect();
    FigureData {
        alpha: graph.ctx().spec().to_string(),
        polygon,
        slopes,
        missing_corners,
        unexpected_vertices,
    }
}

pub fn render_svg(graph: &SchreierGraph, data: &FigureData) -> String {
    let ctx = graph.ctx();
    let top = 1.0 + ctx.alpha_f64();
    let sx = |x: &AlgebraicPoint| MARGIN + SCALE * ctx.to_f64(x);
    let sy = |y: &AlgebraicPoint| MARGIN + SCALE * (top - ctx.to_f64(y));
    let size = 2.0 * MARGIN + SCALE;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let json = serde_json::to_string(data).expect("figure data serializes");
    let _ = writeln!(s, "{METADATA_OPEN}{json}{METADATA_CLOSE}");
    let _ = writeln!(s, r#"<title>Edges of G in I × J, α = {}</title>"#, data.alpha);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SCALE}" height="{SCALE}" fill="none" stroke="rgb(153,153,153)" stroke-width="1"/>"#
    );
    let points: Vec<String> = data
        .polygon
        .iter()
        .map(|p| format!("{:.6},{:.6}", sx(&p.x), sy(&p.y)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="rgb(221,232,245)" stroke="rgb(31,78,140)" stroke-width="2"/>"#,
        points.join(" ")
    );
    for p in &data.polygon[..data.polygon.len().saturating_sub(1)] {
        let (x, y) = (sx(&p.x), sy(&p.y));
        let _ = writeln!(s, r#"<circle cx="{x:.6}" cy="{y:.6}" r="3" fill="rgb(31,78,140)"/>"#);
        let anchor = if ctx.to_f64(&p.x) > 0.5 { "end" } else { "start" };
        let dx = if anchor == "end" { -8.0 } else { 8.0 };
        let _ = writeln!(
            s,
            r#"<text x="{:.6}" y="{:.6}" font-family="serif" font-size="16" text-anchor="{anchor}">{}</text>"#,
            x + dx,
            y - 6.0,
            p.label
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.6}" y="{:.6}" font-family="serif" font-size="18" text-anchor="middle">I</text>"#,
        MARGIN + SCALE / 2.0,
        MARGIN + SCALE + 36.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.6}" y="{:.6}" font-family="serif" font-size="18" text-anchor="middle">J</text>"#,
        MARGIN - 36.0,
        MARGIN + SCALE / 2.0
    );
    s.push_str("</svg>\n");
    s
}

/// Reads the exact geometry back out of a rendered SVG.
pub fn parse_metadata(svg: &str) -> Option<FigureData> {
    let start = svg.find(METADATA_OPEN)? + METADATA_OPEN.len();
    let end = start + svg[start..].find(METADATA_CLOSE)?;
    serde_json::from_str(&svg[start..end]).ok()
}
