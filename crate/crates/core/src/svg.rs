//! Byte-stable SVG serialization.
//!
//! Every numeric attribute is printed with exactly two decimals and
//! elements appear in scene order, so a scene always serializes to the
//! same bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon, ShapeKind, CAPSULE_CAP_SEGMENTS};
use crate::scene::{PlacedShape, Scene, ShapeStyle};

/// Option-panel cell side after scaling.
pub const PANEL_CELL: f64 = 224.0;
pub const PANEL_GUTTER: f64 = 16.0;
/// Height of the band holding a cell's label.
pub const PANEL_LABEL_BAND: f64 = 24.0;
pub const LABEL_FONT_SIZE: f64 = 18.0;
pub const OPTION_LABELS: [&str; 4] = ["1", "2", "3", "4"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvgDoc {
    pub text: String,
    pub width: u32,
    pub height: u32,
}

/// Two-decimal fixed point with negative zero folded to zero.
pub fn fmt2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn header(out: &mut String, w: f64, h: f64) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0.00 0.00 {w} {h}\">",
        w = fmt2(w),
        h = fmt2(h)
    );
}

fn paint_attrs(style: &ShapeStyle) -> String {
    format!(
        "fill=\"{}\" stroke=\"{}\" stroke-width=\"{}\"",
        style.fill.svg(),
        style.stroke.svg(),
        fmt2(style.stroke_width)
    )
}

fn points_attr(vs: &[Point]) -> String {
    vs.iter()
        .map(|p| format!("{},{}", fmt2(p.x), fmt2(p.y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn as_native_circle(p: &Polygon) -> Option<(Point, f64)> {
    if p.kind() != ShapeKind::Circle || p.len() < 32 {
        return None;
    }
    let c = p.centroid();
    let r = p.vertices()[0].distance(c);
    p.vertices()
        .iter()
        .all(|v| (v.distance(c) - r).abs() < 1e-6)
        .then_some((c, r))
}

/// Recognizes an unstretched stadium built by `geometry::capsule`; returns
/// (center, straight length, cap radius, rotation in degrees).
fn as_native_capsule(p: &Polygon) -> Option<(Point, f64, f64, f64)> {
    let k = CAPSULE_CAP_SEGMENTS;
    if p.kind() != ShapeKind::Capsule || p.len() != 2 * k + 2 {
        return None;
    }
    let v = p.vertices();
    let cap = |s: usize| {
        let c = v[s].lerp(v[s + k], 0.5);
        let r = v[s].distance(c);
        v[s..=s + k]
            .iter()
            .all(|q| (q.distance(c) - r).abs() < 1e-6)
            .then_some((c, r))
    };
    let (c1, r1) = cap(0)?;
    let (c2, r2) = cap(k + 1)?;
    if (r1 - r2).abs() > 1e-6 {
        return None;
    }
    let axis = c1 - c2;
    let length = axis.norm();
    if length <= 1e-9 {
        return None;
    }
    Some((c1.lerp(c2, 0.5), length, r1, axis.y.atan2(axis.x).to_degrees()))
}

fn polygon_element(out: &mut String, indent: &str, poly: &Polygon, style: &ShapeStyle, noise: bool) {
    let attrs = paint_attrs(style);
    let class = if noise { " class=\"noise\"" } else { "" };
    if poly.kind() == ShapeKind::Line {
        let v = poly.vertices();
        let _ = writeln!(
            out,
            "{indent}<line{class} x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\"/>",
            fmt2(v[0].x),
            fmt2(v[0].y),
            fmt2(v[1].x),
            fmt2(v[1].y),
            style.stroke.svg(),
            fmt2(style.stroke_width)
        );
    } else if let Some((c, r)) = as_native_circle(poly) {
        let _ = writeln!(
            out,
            "{indent}<circle{class} cx=\"{}\" cy=\"{}\" r=\"{}\" {attrs}/>",
            fmt2(c.x),
            fmt2(c.y),
            fmt2(r)
        );
    } else if let Some((c, len, r, rot)) = as_native_capsule(poly) {
        let _ = writeln!(
            out,
            "{indent}<rect{class} x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" rx=\"{r}\" ry=\"{r}\" transform=\"rotate({} {} {})\" {attrs}/>",
            fmt2(c.x - len / 2.0 - r),
            fmt2(c.y - r),
            fmt2(len + 2.0 * r),
            fmt2(2.0 * r),
            fmt2(rot),
            fmt2(c.x),
            fmt2(c.y),
            r = fmt2(r),
        );
    } else {
        let _ = writeln!(
            out,
            "{indent}<polygon{class} points=\"{}\" {attrs}/>",
            points_attr(poly.vertices())
        );
    }
}

fn shape_elements(out: &mut String, indent: &str, shape: &PlacedShape) {
    polygon_element(out, indent, &shape.polygon, &shape.style, shape.noise);
    for inner in shape.inner_copies() {
        polygon_element(out, indent, &inner, &shape.style, shape.noise);
    }
}

fn scene_body(out: &mut String, indent: &str, scene: &Scene) {
    let _ = writeln!(
        out,
        "{indent}<rect x=\"0.00\" y=\"0.00\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
        fmt2(scene.canvas.width),
        fmt2(scene.canvas.height),
        scene.background.svg()
    );
    for shape in &scene.shapes {
        shape_elements(out, indent, shape);
    }
}

pub fn render_scene(scene: &Scene) -> SvgDoc {
    let mut text = String::new();
    header(&mut text, scene.canvas.width, scene.canvas.height);
    scene_body(&mut text, "  ", scene);
    text.push_str("</svg>\n");
    SvgDoc {
        text,
        width: scene.canvas.width.round() as u32,
        height: scene.canvas.height.round() as u32,
    }
}

fn label(out: &mut String, x: f64, band_top: f64, text: &str) {
    let _ = writeln!(
        out,
        "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"{}\" text-anchor=\"middle\">{text}</text>",
        fmt2(x),
        fmt2(band_top + LABEL_FONT_SIZE),
        fmt2(LABEL_FONT_SIZE)
    );
}

fn cell(out: &mut String, x: f64, y: f64, side: f64, scene: &Scene) {
    let scale = side / scene.canvas.width.max(scene.canvas.height);
    let _ = writeln!(
        out,
        "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"gray\" stroke-width=\"1.00\"/>",
        fmt2(x),
        fmt2(y),
        fmt2(side),
        fmt2(side)
    );
    let _ = writeln!(
        out,
        "  <g transform=\"translate({} {}) scale({})\">",
        fmt2(x),
        fmt2(y),
        fmt2(scale)
    );
    scene_body(out, "    ", scene);
    out.push_str("  </g>\n");
}

/// Origin of option cell `i` (0-based) in the 2x2 grid.
pub fn option_cell_origin(i: usize) -> (f64, f64) {
    let col = (i % 2) as f64;
    let row = (i / 2) as f64;
    let x = PANEL_GUTTER + col * (PANEL_CELL + PANEL_GUTTER);
    let first_row_top = PANEL_GUTTER + PANEL_LABEL_BAND + PANEL_CELL + PANEL_GUTTER;
    let y = first_row_top + row * (PANEL_LABEL_BAND + PANEL_CELL + PANEL_GUTTER) + PANEL_LABEL_BAND;
    (x, y)
}

pub fn panel_size() -> (f64, f64) {
    let w = 2.0 * PANEL_CELL + 3.0 * PANEL_GUTTER;
    let h = 4.0 * PANEL_GUTTER + 3.0 * (PANEL_LABEL_BAND + PANEL_CELL);
    (w, h)
}

/// Target on top, the four options below in a labeled 2x2 grid.
pub fn render_option_panel(target: &Scene, options: &[Scene]) -> Result<SvgDoc> {
    if options.len() != 4 {
        return Err(Error::invalid(format!(
            "option panel needs exactly 4 options, got {}",
            options.len()
        )));
    }
    let (w, h) = panel_size();
    let mut text = String::new();
    header(&mut text, w, h);
    let _ = writeln!(
        text,
        "  <rect x=\"0.00\" y=\"0.00\" width=\"{}\" height=\"{}\" fill=\"white\"/>",
        fmt2(w),
        fmt2(h)
    );
    let tx = (w - PANEL_CELL) / 2.0;
    label(&mut text, w / 2.0, PANEL_GUTTER, "Target");
    cell(&mut text, tx, PANEL_GUTTER + PANEL_LABEL_BAND, PANEL_CELL, target);
    for (i, (opt, name)) in options.iter().zip(OPTION_LABELS).enumerate() {
        let (x, y) = option_cell_origin(i);
        label(&mut text, x + PANEL_CELL / 2.0, y - PANEL_LABEL_BAND, name);
        cell(&mut text, x, y, PANEL_CELL, opt);
    }
    text.push_str("</svg>\n");
    Ok(SvgDoc {
        text,
        width: w as u32,
        height: h as u32,
    })
}

/// Labeled tiles in rows of `columns`, each drawn at its native size.
pub fn render_tiles(tiles: &[(String, &Scene)], columns: usize) -> Result<SvgDoc> {
    if tiles.is_empty() || columns == 0 {
        return Err(Error::invalid("render_tiles needs at least one tile and column"));
    }
    let side = tiles
        .iter()
        .map(|(_, s)| s.canvas.width.max(s.canvas.height))
        .fold(0.0, f64::max);
    let cols = columns.min(tiles.len());
    let rows = tiles.len().div_ceil(cols);
    let w = cols as f64 * side + (cols + 1) as f64 * PANEL_GUTTER;
    let h = rows as f64 * (side + PANEL_LABEL_BAND) + (rows + 1) as f64 * PANEL_GUTTER;
    let mut text = String::new();
    header(&mut text, w, h);
    let _ = writeln!(
        text,
        "  <rect x=\"0.00\" y=\"0.00\" width=\"{}\" height=\"{}\" fill=\"white\"/>",
        fmt2(w),
        fmt2(h)
    );
    for (i, (name, scene)) in tiles.iter().enumerate() {
        let x = PANEL_GUTTER + (i % cols) as f64 * (side + PANEL_GUTTER);
        let top = PANEL_GUTTER + (i / cols) as f64 * (side + PANEL_LABEL_BAND + PANEL_GUTTER);
        label(&mut text, x + side / 2.0, top, name);
        cell(&mut text, x, top + PANEL_LABEL_BAND, side, scene);
    }
    text.push_str("</svg>\n");
    Ok(SvgDoc {
        text,
        width: w.round() as u32,
        height: h.round() as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry;
    use crate::scene::{Canvas, ShapeStyle};

    fn drawables(doc: &SvgDoc) -> usize {
        doc.text
            .lines()
            .filter(|l| {
                let l = l.trim_start();
                ["<rect", "<circle", "<polygon", "<polyline", "<line"]
                    .iter()
                    .any(|t| l.starts_with(t))
            })
            .count()
    }

    fn three_shape_scene() -> Scene {
        let mut s = Scene::empty(Canvas::default());
        let tri = geometry::regular_polygon(3, Point::new(100.0, 100.0), 30.0, 0.0).unwrap();
        let hex = geometry::regular_polygon(6, Point::new(300.0, 100.0), 30.0, 0.0).unwrap();
        let c = geometry::circle(Point::new(200.0, 300.0), 30.0).unwrap();
        for p in [tri, hex, c] {
            s.shapes.push(PlacedShape::new(p, ShapeStyle::outline()));
        }
        s
    }

    #[test]
    fn empty_scene_has_background_only() {
        let doc = render_scene(&Scene::empty(Canvas::default()));
        assert_eq!(drawables(&doc), 1);
        assert!(doc.text.contains("fill=\"white\""));
        assert!(doc.text.ends_with("</svg>\n"));
    }

    #[test]
    fn three_shapes_four_elements() {
        let s = three_shape_scene();
        let doc = render_scene(&s);
        assert_eq!(drawables(&doc), 4);
        assert_eq!(doc, render_scene(&s));
        assert!(doc.text.contains("<circle cx=\"200.00\" cy=\"300.00\" r=\"30.00\""));
    }

    #[test]
    fn fmt2_folds_negative_zero() {
        assert_eq!(fmt2(-0.001), "0.00");
        assert_eq!(fmt2(1.005), "1.00");
        assert_eq!(fmt2(-2.5), "-2.50");
    }

    #[test]
    fn capsule_renders_natively() {
        let mut s = Scene::empty(Canvas::default());
        let cap = geometry::capsule(Point::new(200.0, 200.0), 40.0, 15.0, 30.0).unwrap();
        s.shapes.push(PlacedShape::new(cap, ShapeStyle::outline()));
        let doc = render_scene(&s);
        assert!(doc.text.contains("rx=\"15.00\""), "{}", doc.text);
        assert!(doc.text.contains("rotate(30.00 200.00 200.00)"));
        assert!(doc.text.contains("width=\"70.00\" height=\"30.00\""));
    }

    #[test]
    fn stretched_circle_falls_back_to_polygon() {
        let mut s = Scene::empty(Canvas::default());
        let c = geometry::circle(Point::new(200.0, 200.0), 20.0).unwrap();
        let t = geometry::Transform::stretch(1.4).unwrap();
        s.shapes.push(PlacedShape::new(geometry::apply_transform(&c, &t), ShapeStyle::outline()));
        let doc = render_scene(&s);
        assert!(doc.text.contains("<polygon"));
        assert!(!doc.text.contains("<circle"));
    }

    #[test]
    fn panel_layout() {
        let s = three_shape_scene();
        let opts = vec![s.clone(), s.clone(), s.clone(), s.clone()];
        let doc = render_option_panel(&s, &opts).unwrap();
        assert_eq!(doc.width as f64, 2.0 * PANEL_CELL + 3.0 * PANEL_GUTTER);
        for l in OPTION_LABELS {
            let needle = format!(">{l}</text>");
            assert_eq!(doc.text.matches(&needle).count(), 1);
        }
        let groups: Vec<String> = doc
            .text
            .split("<g transform=")
            .skip(2)
            .map(|g| g.split_once('\n').unwrap().1.split("</g>").next().unwrap().to_string())
            .collect();
        assert_eq!(groups.len(), 4);
        assert!(groups.windows(2).all(|w| w[0] == w[1]));
        assert!(render_option_panel(&s, &opts[..3]).is_err());
    }

    #[test]
    fn only_allowed_elements() {
        let s = three_shape_scene();
        let doc = render_option_panel(&s, &[s.clone(), s.clone(), s.clone(), s.clone()]).unwrap();
        let allowed = ["svg", "g", "rect", "circle", "polygon", "polyline", "line", "text"];
        for tag in doc.text.split('<').skip(2) {
            let name = tag
                .trim_start_matches('/')
                .split(|c: char| c.is_whitespace() || c == '>' || c == '/')
                .next()
                .unwrap();
            assert!(allowed.contains(&name), "unexpected element {name}");
        }
    }
}
