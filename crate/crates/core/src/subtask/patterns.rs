//! Composed primitive patterns and single-primitive alterations, shared by
//! the form-constancy and figure-ground subtasks.

use crate::error::{Error, Result};
use crate::geometry::{self, apply_transform, Point, Polygon, ShapeKind, Transform};
use crate::rng::SplitMix64;
use crate::scene::{place_prototypes, Canvas, PlacedShape, Scene, ShapeStyle, DEFAULT_CANVAS};
use crate::task::{Alteration, Change};

/// Pattern building blocks. `Rectangle` stands for an axis-aligned square.
pub const PRIMITIVES: [ShapeKind; 4] = [
    ShapeKind::Circle,
    ShapeKind::Rectangle,
    ShapeKind::Line,
    ShapeKind::Triangle,
];

/// Smallest |cos| of a line's angle to the x axis for an aspect stretch to
/// count as a visible change.
const MIN_LINE_STRETCH_COS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternConfig {
    pub count: usize,
    /// Circumradius range of each primitive, pixels.
    pub size_range: (f64, f64),
    pub d_sep: f64,
    /// Margin used while placing, wider than the drawing margin so that
    /// enlarged distractor primitives stay on the canvas.
    pub placement_margin: f64,
}

/// A primitive of circumradius `size`. Lines are `2 * size` long.
pub fn primitive(kind: ShapeKind, center: Point, size: f64, rotation_deg: f64) -> Result<Polygon> {
    match kind {
        ShapeKind::Circle => geometry::circle(center, size),
        ShapeKind::Rectangle => geometry::regular_polygon(4, center, size, 45.0 + rotation_deg),
        ShapeKind::Line => geometry::line_segment(center, 2.0 * size, rotation_deg),
        ShapeKind::Triangle => geometry::regular_polygon(3, center, size, rotation_deg),
        other => Err(Error::invalid(format!("{other} is not a pattern primitive"))),
    }
}

/// Places `config.count` random primitives. The returned scene uses the
/// standard 448 px canvas and records the separation it was placed with.
pub fn make_pattern(config: &PatternConfig, seed: u64) -> Result<Scene> {
    if config.count == 0 {
        return Err(Error::invalid("a pattern needs at least one primitive"));
    }
    let mut rng = SplitMix64::new(seed).child(0);
    let mut kinds: Vec<ShapeKind> = (0..config.count).map(|_| *rng.choose(&PRIMITIVES)).collect();
    if kinds.iter().all(|&k| k == ShapeKind::Circle) {
        // Keep at least one primitive whose rotation is visible.
        kinds[0] = ShapeKind::Triangle;
    }
    let prototypes = kinds
        .iter()
        .map(|&k| {
            let size = rng.uniform(config.size_range.0, config.size_range.1);
            let poly = primitive(k, Point::default(), size, rng.uniform(0.0, 360.0))?;
            Ok(PlacedShape::new(poly, ShapeStyle::outline()))
        })
        .collect::<Result<Vec<_>>>()?;
    let placing = Canvas::new(DEFAULT_CANVAS.width, DEFAULT_CANVAS.height, config.placement_margin);
    let mut scene = place_prototypes(&prototypes, config.d_sep, placing, SplitMix64::new(seed).child(1).next_u64())?;
    scene.canvas = DEFAULT_CANVAS;
    Ok(scene)
}

/// Change families, before parameters are attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChangeKind {
    Scale(f64),
    Rotate(f64),
    Stretch(f64),
    Substitute,
}

/// Circumradius about the centroid; for lines, half the length.
pub fn primitive_size(p: &Polygon) -> f64 {
    p.circumradius()
}

/// Whether applying `kind` to `shape` produces a visible change.
pub fn eligible(shape: &PlacedShape, kind: ChangeKind) -> bool {
    let p = &shape.polygon;
    match kind {
        ChangeKind::Scale(a) => (a - 1.0).abs() > 1e-9,
        ChangeKind::Rotate(t) => {
            p.kind() != ShapeKind::Circle && (t.rem_euclid(360.0)).abs() > 1e-9
        }
        ChangeKind::Stretch(b) => {
            if (b - 1.0).abs() <= 1e-9 {
                return false;
            }
            if p.kind() == ShapeKind::Line {
                let v = p.vertices();
                let d = v[1] - v[0];
                (d.x / d.norm()).abs() >= MIN_LINE_STRETCH_COS
            } else {
                true
            }
        }
        ChangeKind::Substitute => true,
    }
}

/// Applies a concrete change to one primitive.
pub fn apply_change(shape: &PlacedShape, change: &Change) -> Result<PlacedShape> {
    let p = &shape.polygon;
    let poly = match *change {
        Change::Scale(a) => apply_transform(p, &Transform::scaling(a)?),
        Change::Rotate(t) => apply_transform(p, &Transform::rotation(t)?),
        Change::Stretch(b) => apply_transform(p, &Transform::stretch(b)?),
        Change::Substitute { from, to } => {
            if from != p.kind() {
                return Err(Error::invalid(format!(
                    "substitution expects a {from}, found a {}",
                    p.kind()
                )));
            }
            primitive(to, p.centroid(), primitive_size(p), 0.0)?
        }
    };
    Ok(PlacedShape {
        polygon: poly,
        ..shape.clone()
    })
}

/// Picks an eligible primitive for `kind` and applies it; falls back to a
/// substitution when nothing is eligible. Returns the altered scene.
pub fn alter(
    pattern: &Scene,
    kind: ChangeKind,
    rng: &mut SplitMix64,
) -> Result<(Scene, Alteration)> {
    let candidates: Vec<usize> = (0..pattern.shapes.len())
        .filter(|&i| !pattern.shapes[i].noise && eligible(&pattern.shapes[i], kind))
        .collect();
    let (kind, candidates) = if candidates.is_empty() {
        let all = (0..pattern.shapes.len())
            .filter(|&i| !pattern.shapes[i].noise)
            .collect();
        (ChangeKind::Substitute, all)
    } else {
        (kind, candidates)
    };
    let index = *rng.choose(&candidates);
    let shape = &pattern.shapes[index];
    let change = match kind {
        ChangeKind::Scale(a) => Change::Scale(a),
        ChangeKind::Rotate(t) => Change::Rotate(t),
        ChangeKind::Stretch(b) => Change::Stretch(b),
        ChangeKind::Substitute => {
            let others: Vec<ShapeKind> = PRIMITIVES
                .iter()
                .copied()
                .filter(|&k| k != shape.kind())
                .collect();
            Change::Substitute {
                from: shape.kind(),
                to: *rng.choose(&others),
            }
        }
    };
    let mut altered = pattern.clone();
    altered.shapes[index] = apply_change(shape, &change)?;
    altered.d_sep = None;
    Ok((
        altered,
        Alteration {
            primitive: index,
            change,
        },
    ))
}

/// Four options: an exact copy of `pattern` at a uniformly drawn slot and
/// one altered copy per entry of `changes` elsewhere, in order.
pub fn build_options(
    pattern: &Scene,
    changes: &[ChangeKind; 3],
    rng: &mut SplitMix64,
) -> Result<(Vec<Scene>, u8, Vec<Option<Alteration>>)> {
    let correct = rng.below(4) as usize;
    let mut options = Vec::with_capacity(4);
    let mut alterations = Vec::with_capacity(4);
    let mut next = changes.iter();
    for slot in 0..4 {
        if slot == correct {
            let mut copy = pattern.clone();
            copy.d_sep = None;
            options.push(copy);
            alterations.push(None);
        } else {
            let kind = *next.next().expect("three distractors");
            let (scene, alt) = alter(pattern, kind, rng)?;
            options.push(scene);
            alterations.push(Some(alt));
        }
    }
    Ok((options, correct as u8 + 1, alterations))
}

/// Largest vertex distance between two equally shaped vertex lists, or
/// infinity when the shapes differ in kind or size.
pub fn vertex_distance(a: &Polygon, b: &Polygon) -> f64 {
    if a.kind() != b.kind() || a.len() != b.len() {
        return f64::INFINITY;
    }
    a.vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q)| p.distance(*q))
        .fold(0.0, f64::max)
}

/// Largest per-primitive vertex distance between the figure shapes of two
/// scenes; infinity when they do not correspond.
pub fn figure_distance(a: &Scene, b: &Scene) -> f64 {
    let fa: Vec<&PlacedShape> = a.figure_shapes().collect();
    let fb: Vec<&PlacedShape> = b.figure_shapes().collect();
    if fa.len() != fb.len() {
        return f64::INFINITY;
    }
    fa.iter()
        .zip(&fb)
        .map(|(x, y)| vertex_distance(&x.polygon, &y.polygon))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> PatternConfig {
        PatternConfig {
            count: 4,
            size_range: (30.0, 55.0),
            d_sep: 24.0,
            placement_margin: 40.0,
        }
    }

    #[test]
    fn rotation_change_is_exact() {
        let pattern = make_pattern(&config(), 11).unwrap();
        let mut rng = SplitMix64::new(3);
        let (altered, alt) = alter(&pattern, ChangeKind::Rotate(50.0), &mut rng).unwrap();
        assert_eq!(alt.change, Change::Rotate(50.0));
        let before = &pattern.shapes[alt.primitive].polygon;
        let after = &altered.shapes[alt.primitive].polygon;
        let c = before.centroid();
        for (p, q) in before.vertices().iter().zip(after.vertices()) {
            let turned = p.rotated_about(c, 50.0);
            assert!(turned.distance(*q) < 1e-9);
        }
    }

    #[test]
    fn options_have_one_exact_copy() {
        for seed in 0..40 {
            let pattern = make_pattern(&config(), seed).unwrap();
            let mut rng = SplitMix64::new(seed ^ 77);
            let kinds = [ChangeKind::Scale(1.1), ChangeKind::Rotate(5.0), ChangeKind::Stretch(0.8)];
            let (opts, correct, alts) = build_options(&pattern, &kinds, &mut rng).unwrap();
            let exact: Vec<usize> = (0..4)
                .filter(|&i| figure_distance(&opts[i], &pattern) < 1e-6)
                .collect();
            assert_eq!(exact, vec![correct as usize - 1]);
            assert!(alts[correct as usize - 1].is_none());
        }
    }

    #[test]
    fn circles_are_never_rotated() {
        let c = PlacedShape::new(primitive(ShapeKind::Circle, Point::new(50.0, 50.0), 20.0, 0.0).unwrap(), ShapeStyle::outline());
        assert!(!eligible(&c, ChangeKind::Rotate(25.0)));
        assert!(eligible(&c, ChangeKind::Stretch(1.4)));
        let vertical = PlacedShape::new(primitive(ShapeKind::Line, Point::new(50.0, 50.0), 20.0, 90.0).unwrap(), ShapeStyle::outline());
        assert!(!eligible(&vertical, ChangeKind::Stretch(1.4)));
    }
}
