//! Seeded shape placement and the ground-truth scene record.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    self, apply_transform, max_penetration, sat_signed_separation, Bounds, Point, Polygon,
    ShapeKind, Transform,
};
use crate::rng::SplitMix64;

/// Per-shape attempt budget before placement gives up.
pub const MAX_ATTEMPTS: usize = 10_000;

/// Radius factor between successive concentric star copies.
pub const CONCENTRIC_SHRINK: f64 = 0.55;

pub const DEFAULT_CANVAS: Canvas = Canvas {
    width: 448.0,
    height: 448.0,
    margin: 8.0,
};

/// Outer-radius range used when a subtask does not override it.
pub const DEFAULT_SIZE_RANGE: (f64, f64) = (24.0, 56.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedColor {
    Red,
    Green,
    Blue,
    Orange,
    Purple,
    Black,
    Gray,
    Yellow,
    White,
}

/// The eight shape colors; white is reserved for backgrounds.
pub const PALETTE: [NamedColor; 8] = [
    NamedColor::Red,
    NamedColor::Green,
    NamedColor::Blue,
    NamedColor::Orange,
    NamedColor::Purple,
    NamedColor::Black,
    NamedColor::Gray,
    NamedColor::Yellow,
];

impl NamedColor {
    pub fn name(self) -> &'static str {
        match self {
            NamedColor::Red => "red",
            NamedColor::Green => "green",
            NamedColor::Blue => "blue",
            NamedColor::Orange => "orange",
            NamedColor::Purple => "purple",
            NamedColor::Black => "black",
            NamedColor::Gray => "gray",
            NamedColor::Yellow => "yellow",
            NamedColor::White => "white",
        }
    }
}

impl fmt::Display for NamedColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fill or stroke paint. `Gray` carries an sRGB level and is only used by
/// the letter stimuli, whose contrast is graded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paint {
    None,
    Named(NamedColor),
    Gray(u8),
}

impl Paint {
    pub fn svg(&self) -> String {
        match self {
            Paint::None => "none".to_string(),
            Paint::Named(c) => c.name().to_string(),
            Paint::Gray(v) => format!("#{v:02x}{v:02x}{v:02x}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeStyle {
    pub fill: Paint,
    pub stroke: Paint,
    pub stroke_width: f64,
}

impl ShapeStyle {
    pub const DEFAULT_STROKE: f64 = 2.0;

    /// Black border, transparent interior.
    pub fn outline() -> Self {
        Self {
            fill: Paint::None,
            stroke: Paint::Named(NamedColor::Black),
            stroke_width: Self::DEFAULT_STROKE,
        }
    }

    pub fn solid(color: NamedColor) -> Self {
        Self {
            fill: Paint::Named(color),
            stroke: Paint::Named(color),
            stroke_width: Self::DEFAULT_STROKE,
        }
    }

    pub fn filled(paint: Paint) -> Self {
        Self {
            fill: paint,
            stroke: Paint::None,
            stroke_width: 0.0,
        }
    }

    pub fn fill_color(&self) -> Option<NamedColor> {
        match self.fill {
            Paint::Named(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedShape {
    pub polygon: Polygon,
    pub style: ShapeStyle,
    /// Nested inner copies (stars only).
    pub concentric_depth: u32,
    /// Background clutter, excluded from counts and separation invariants.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub noise: bool,
}

impl PlacedShape {
    pub fn new(polygon: Polygon, style: ShapeStyle) -> Self {
        Self {
            polygon,
            style,
            concentric_depth: 0,
            noise: false,
        }
    }

    pub fn noise(polygon: Polygon, style: ShapeStyle) -> Self {
        Self {
            noise: true,
            ..Self::new(polygon, style)
        }
    }

    pub fn kind(&self) -> ShapeKind {
        self.polygon.kind()
    }

    /// Inner concentric copies, outermost first.
    pub fn inner_copies(&self) -> Vec<Polygon> {
        (1..=self.concentric_depth)
            .map(|level| {
                let t = Transform::scaling(CONCENTRIC_SHRINK.powi(level as i32))
                    .expect("shrink factor is positive");
                apply_transform(&self.polygon, &t)
            })
            .collect()
    }

    /// How many shapes of its kind this entry contributes to a count.
    pub fn multiplicity(&self) -> usize {
        1 + self.concentric_depth as usize
    }

    /// Closed outline used for overlap tests.
    pub fn footprint(&self) -> Polygon {
        self.polygon.solid(self.style.stroke_width.max(1.0))
    }

    pub fn transformed(&self, t: &Transform) -> PlacedShape {
        PlacedShape {
            polygon: apply_transform(&self.polygon, t),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
}

impl Canvas {
    pub fn new(width: f64, height: f64, margin: f64) -> Self {
        Self {
            width,
            height,
            margin,
        }
    }

    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }
}

impl Default for Canvas {
    fn default() -> Self {
        DEFAULT_CANVAS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub canvas: Canvas,
    pub background: Paint,
    pub shapes: Vec<PlacedShape>,
    pub seed: u64,
    /// Separation constraint the placement honored; `None` for hand-laid
    /// scenes (grids, glyphs, outline fragments).
    pub d_sep: Option<f64>,
}

impl Scene {
    pub fn empty(canvas: Canvas) -> Self {
        Self {
            canvas,
            background: Paint::Named(NamedColor::White),
            shapes: Vec::new(),
            seed: 0,
            d_sep: None,
        }
    }

    pub fn figure_shapes(&self) -> impl Iterator<Item = &PlacedShape> {
        self.shapes.iter().filter(|s| !s.noise)
    }

    /// Checks the bounds and separation invariants; returns the first
    /// violation found.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let c = &self.canvas;
        let figures: Vec<&PlacedShape> = self.figure_shapes().collect();
        for (i, s) in figures.iter().enumerate() {
            let b = s.polygon.bounds();
            let tol = 1e-6;
            if b.min.x < c.margin - tol
                || b.min.y < c.margin - tol
                || b.max.x > c.width - c.margin + tol
                || b.max.y > c.height - c.margin + tol
            {
                return Err(format!("shape {i} leaves the canvas margins"));
            }
            if s.concentric_depth > 0 && s.kind() != ShapeKind::Star {
                return Err(format!("shape {i} is concentric but not a star"));
            }
        }
        let Some(d_sep) = self.d_sep else {
            return Ok(());
        };
        for i in 0..figures.len() {
            for j in i + 1..figures.len() {
                let (a, b) = (figures[i].footprint(), figures[j].footprint());
                if d_sep >= 0.0 {
                    let s = sat_signed_separation(&a.convex_hull(), &b.convex_hull())
                        .map_err(|e| e.to_string())?;
                    if s < d_sep - 1e-6 {
                        return Err(format!("shapes {i},{j} separated by {s} < {d_sep}"));
                    }
                } else {
                    let p = max_penetration(&a, &b).map_err(|e| e.to_string())?;
                    if p > -d_sep + 0.5 {
                        return Err(format!("shapes {i},{j} penetrate by {p} > {}", -d_sep));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Request for one shape in [`place_shapes`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    /// Outer radius in pixels.
    pub size: f64,
    pub style: ShapeStyle,
    pub concentric_depth: u32,
    pub rotation_deg: f64,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, size: f64, style: ShapeStyle) -> Self {
        Self {
            kind,
            size,
            style,
            concentric_depth: 0,
            rotation_deg: 0.0,
        }
    }

    pub fn rotated(mut self, deg: f64) -> Self {
        self.rotation_deg = deg;
        self
    }

    pub fn concentric(mut self, depth: u32) -> Self {
        self.concentric_depth = depth;
        self
    }
}

/// Builds a shape of `kind` whose outer extent from `center` is `size`.
pub fn make_shape(kind: ShapeKind, center: Point, size: f64, rotation_deg: f64) -> Result<Polygon> {
    match kind {
        ShapeKind::Rectangle => geometry::rectangle(center, 1.6 * size, size, rotation_deg),
        ShapeKind::Triangle => geometry::regular_polygon(3, center, size, rotation_deg),
        ShapeKind::Circle => geometry::circle(center, size),
        ShapeKind::Pentagon => geometry::regular_polygon(5, center, size, rotation_deg),
        ShapeKind::Hexagon => geometry::regular_polygon(6, center, size, rotation_deg),
        ShapeKind::Octagon => geometry::regular_polygon(8, center, size, rotation_deg),
        ShapeKind::Star => geometry::star_polygon(5, size, size / 2.0, center, rotation_deg),
        ShapeKind::Capsule => geometry::capsule(center, size, size / 2.0, rotation_deg),
        ShapeKind::Cross => geometry::cross(center, size, 0.3 * size, rotation_deg),
        ShapeKind::Line => geometry::line_segment(center, 2.0 * size, rotation_deg),
    }
}

/// Overlap geometry of an accepted shape, computed once.
struct Occupant {
    footprint: Polygon,
    hull: Polygon,
    bounds: Bounds,
}

impl Occupant {
    fn of(shape: &PlacedShape) -> Self {
        let footprint = shape.footprint();
        let hull = footprint.convex_hull();
        let bounds = footprint.bounds();
        Self {
            footprint,
            hull,
            bounds,
        }
    }
}

fn axis_gap(a: &Bounds, b: &Bounds) -> f64 {
    let gx = (b.min.x - a.max.x).max(a.min.x - b.max.x);
    let gy = (b.min.y - a.max.y).max(a.min.y - b.max.y);
    gx.max(gy)
}

fn fits(candidate: &Occupant, placed: &[Occupant], d_sep: f64) -> Result<bool> {
    for other in placed {
        let gap = axis_gap(&candidate.bounds, &other.bounds);
        let ok = if d_sep >= 0.0 {
            // A bounding-box gap is a lower bound on the Euclidean gap.
            gap >= d_sep || sat_signed_separation(&candidate.hull, &other.hull)? >= d_sep
        } else {
            gap >= 0.0 || max_penetration(&candidate.footprint, &other.footprint)? <= -d_sep
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rejection-sampling placement. Shape `i` draws from child stream `i` of
/// the seed, so results depend only on `(specs, d_sep, canvas, seed)`.
pub fn place_shapes(specs: &[ShapeSpec], d_sep: f64, canvas: Canvas, seed: u64) -> Result<Scene> {
    let prototypes = specs
        .iter()
        .map(|spec| {
            let polygon = make_shape(spec.kind, Point::default(), spec.size, spec.rotation_deg)?;
            Ok(PlacedShape {
                polygon,
                style: spec.style,
                concentric_depth: spec.concentric_depth,
                noise: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    place_prototypes(&prototypes, d_sep, canvas, seed)
}

/// Places ready-made shapes by translating each one; the same contract as
/// [`place_shapes`] for callers that build custom geometry. Prototype
/// positions are irrelevant, only their shape is used.
pub fn place_prototypes(
    prototypes: &[PlacedShape],
    d_sep: f64,
    canvas: Canvas,
    seed: u64,
) -> Result<Scene> {
    if prototypes.is_empty() {
        return Err(Error::invalid("placement needs at least one shape"));
    }
    if !d_sep.is_finite() {
        return Err(Error::invalid("d_sep must be finite"));
    }
    let root = SplitMix64::new(seed);
    let mut placed: Vec<PlacedShape> = Vec::with_capacity(prototypes.len());
    let mut occupants: Vec<Occupant> = Vec::with_capacity(prototypes.len());
    for (i, proto) in prototypes.iter().enumerate() {
        let mut rng = root.child(i as u64);
        let b = proto.polygon.bounds();
        let (x_lo, x_hi) = (canvas.margin - b.min.x, canvas.width - canvas.margin - b.max.x);
        let (y_lo, y_hi) = (canvas.margin - b.min.y, canvas.height - canvas.margin - b.max.y);
        if x_lo > x_hi || y_lo > y_hi {
            return Err(Error::invalid(format!(
                "shape #{i} ({}, {:.1}x{:.1}) does not fit the canvas",
                proto.kind(),
                b.width(),
                b.height()
            )));
        }
        let base = Occupant::of(proto);
        let mut accepted = None;
        for _ in 0..MAX_ATTEMPTS {
            let at = Point::new(rng.uniform(x_lo, x_hi), rng.uniform(y_lo, y_hi));
            let occupant = Occupant {
                footprint: base.footprint.translated(at),
                hull: base.hull.translated(at),
                bounds: Bounds {
                    min: base.bounds.min + at,
                    max: base.bounds.max + at,
                },
            };
            if fits(&occupant, &occupants, d_sep)? {
                accepted = Some((proto.polygon.translated(at), occupant));
                break;
            }
        }
        match accepted {
            Some((polygon, occupant)) => {
                placed.push(PlacedShape {
                    polygon,
                    ..proto.clone()
                });
                occupants.push(occupant);
            }
            None => {
                return Err(Error::GenerationFailure {
                    spec_index: i,
                    attempts: MAX_ATTEMPTS,
                })
            }
        }
    }
    Ok(Scene {
        canvas,
        background: Paint::Named(NamedColor::White),
        shapes: placed,
        seed,
        d_sep: Some(d_sep),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeQuery {
    pub kind: ShapeKind,
    pub color: Option<NamedColor>,
}

impl ShapeQuery {
    pub fn kind(kind: ShapeKind) -> Self {
        Self { kind, color: None }
    }

    pub fn colored(kind: ShapeKind, color: NamedColor) -> Self {
        Self {
            kind,
            color: Some(color),
        }
    }

    pub fn matches(&self, shape: &PlacedShape) -> bool {
        !shape.noise
            && shape.kind() == self.kind
            && self.color.is_none_or(|c| shape.style.fill_color() == Some(c))
    }
}

/// Number of shapes matching `query`; a concentric star counts once per ring.
pub fn count_matching(scene: &Scene, query: &ShapeQuery) -> usize {
    scene
        .shapes
        .iter()
        .filter(|s| query.matches(s))
        .map(PlacedShape::multiplicity)
        .sum()
}
