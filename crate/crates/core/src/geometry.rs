//! Shape construction, affine transforms and convex separation.
//!
//! Canvas frame: origin top-left, +y down. Angles are in degrees and grow
//! clockwise on screen (the usual `(cos θ, sin θ)` parameterization in a
//! y-down frame). "Counter-clockwise" vertex order means positive shoelace
//! area in raw coordinates.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for geometric equality, in pixels.
pub const GEOM_EPS: f64 = 1e-9;

/// Segment count used when a circle is approximated for geometry.
pub const CIRCLE_SEGMENTS: usize = 64;

/// Segments per semicircular cap of a capsule.
pub const CAPSULE_CAP_SEGMENTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(center: Point, radius: f64, angle_deg: f64) -> Self {
        let a = angle_deg.to_radians();
        Point::new(center.x + radius * a.cos(), center.y + radius * a.sin())
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Rotate about `pivot` by `deg` degrees.
    pub fn rotated_about(self, pivot: Point, deg: f64) -> Point {
        let (s, c) = deg.to_radians().sin_cos();
        let d = self - pivot;
        Point::new(pivot.x + d.x * c - d.y * s, pivot.y + d.x * s + d.y * c)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Rectangle,
    Triangle,
    Circle,
    Pentagon,
    Hexagon,
    Octagon,
    Star,
    Capsule,
    Cross,
    Line,
}

impl ShapeKind {
    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Rectangle => "rectangle",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Circle => "circle",
            ShapeKind::Pentagon => "pentagon",
            ShapeKind::Hexagon => "hexagon",
            ShapeKind::Octagon => "octagon",
            ShapeKind::Star => "star",
            ShapeKind::Capsule => "capsule",
            ShapeKind::Cross => "cross",
            ShapeKind::Line => "line",
        }
    }

    pub fn plural(self) -> &'static str {
        match self {
            ShapeKind::Rectangle => "rectangles",
            ShapeKind::Triangle => "triangles",
            ShapeKind::Circle => "circles",
            ShapeKind::Pentagon => "pentagons",
            ShapeKind::Hexagon => "hexagons",
            ShapeKind::Octagon => "octagons",
            ShapeKind::Star => "stars",
            ShapeKind::Capsule => "capsules",
            ShapeKind::Cross => "crosses",
            ShapeKind::Line => "lines",
        }
    }

    pub fn is_closed(self) -> bool {
        self != ShapeKind::Line
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    kind: ShapeKind,
    vertices: Vec<Point>,
}

impl Polygon {
    /// Validates finiteness, vertex count and that no two consecutive
    /// vertices coincide (cyclically, for closed kinds).
    pub fn new(kind: ShapeKind, vertices: Vec<Point>) -> Result<Self> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("polygon has non-finite vertex"));
        }
        if kind.is_closed() {
            if vertices.len() < 3 {
                return Err(Error::invalid(format!(
                    "{kind} needs at least 3 vertices, got {}",
                    vertices.len()
                )));
            }
        } else if vertices.len() != 2 {
            return Err(Error::invalid("line needs exactly 2 vertices"));
        }
        let n = vertices.len();
        let pairs = if kind.is_closed() { n } else { n - 1 };
        for i in 0..pairs {
            if vertices[i].distance(vertices[(i + 1) % n]) <= GEOM_EPS {
                return Err(Error::invalid(format!("repeated consecutive vertex at {i}")));
            }
        }
        Ok(Self { kind, vertices })
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub(crate) fn with_kind(mut self, kind: ShapeKind) -> Self {
        self.kind = kind;
        self
    }

    /// Edges as vertex pairs; closed kinds wrap around.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        let count = if self.kind.is_closed() { n } else { n - 1 };
        (0..count).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace signed area; positive for counter-clockwise order.
    pub fn signed_area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        if self.kind.is_closed() {
            self.signed_area().abs()
        } else {
            0.0
        }
    }

    /// Area centroid for closed kinds, midpoint for lines.
    pub fn centroid(&self) -> Point {
        let v = &self.vertices;
        let a = self.signed_area();
        if !self.kind.is_closed() || a.abs() < 1e-12 {
            let sum = v.iter().fold(Point::default(), |acc, &p| acc + p);
            return sum * (1.0 / v.len() as f64);
        }
        let n = v.len();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let (p, q) = (v[i], v[(i + 1) % n]);
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn bounds(&self) -> Bounds {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Bounds { min, max }
    }

    pub fn translated(&self, by: Point) -> Polygon {
        Polygon {
            kind: self.kind,
            vertices: self.vertices.iter().map(|&p| p + by).collect(),
        }
    }

    /// Largest vertex distance from the centroid.
    pub fn circumradius(&self) -> f64 {
        let c = self.centroid();
        self.vertices
            .iter()
            .map(|p| p.distance(c))
            .fold(0.0, f64::max)
    }

    pub fn is_convex(&self) -> bool {
        if !self.kind.is_closed() {
            return false;
        }
        let v = &self.vertices;
        let n = v.len();
        let orient = self.signed_area().signum();
        (0..n).all(|i| {
            let e1 = v[(i + 1) % n] - v[i];
            let e2 = v[(i + 2) % n] - v[(i + 1) % n];
            e1.cross(e2) * orient >= -1e-9
        })
    }

    /// Convex hull (Andrew's monotone chain), kind preserved.
    pub fn convex_hull(&self) -> Polygon {
        let mut pts = self.vertices.clone();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup_by(|a, b| a.distance(*b) <= GEOM_EPS);
        if pts.len() < 3 {
            return self.clone();
        }
        let mut hull: Vec<Point> = Vec::with_capacity(pts.len() * 2);
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
                Box::new(pts.iter())
            } else {
                Box::new(pts.iter().rev())
            };
            for &p in iter {
                while hull.len() >= start + 2 {
                    let a = hull[hull.len() - 2];
                    let b = hull[hull.len() - 1];
                    if (b - a).cross(p - b) <= 1e-12 {
                        hull.pop();
                    } else {
                        break;
                    }
                }
                hull.push(p);
            }
            hull.pop();
        }
        Polygon {
            kind: self.kind,
            vertices: hull,
        }
    }

    /// Convex decomposition: the polygon itself when convex, otherwise a
    /// triangle fan around the centroid (valid for the star-shaped kinds
    /// used here: star, cross).
    pub fn convex_pieces(&self) -> Vec<Polygon> {
        if self.is_convex() {
            return vec![self.clone()];
        }
        let c = self.centroid();
        let v = &self.vertices;
        let n = v.len();
        (0..n)
            .filter_map(|i| {
                let tri = vec![c, v[i], v[(i + 1) % n]];
                (shoelace(&tri).abs() > 1e-12).then(|| Polygon {
                    kind: ShapeKind::Triangle,
                    vertices: tri,
                })
            })
            .collect()
    }

    /// Closed polygon usable for overlap tests. Lines become a rectangle of
    /// the given thickness; closed kinds are returned unchanged.
    pub fn solid(&self, line_thickness: f64) -> Polygon {
        if self.kind.is_closed() {
            return self.clone();
        }
        let (a, b) = (self.vertices[0], self.vertices[1]);
        let d = b - a;
        let len = d.norm();
        let n = Point::new(-d.y / len, d.x / len) * (line_thickness / 2.0);
        Polygon {
            kind: ShapeKind::Rectangle,
            vertices: vec![a - n, b - n, b + n, a + n],
        }
        .oriented()
    }

    fn oriented(mut self) -> Polygon {
        if self.signed_area() < 0.0 {
            self.vertices.reverse();
        }
        self
    }
}

fn shoelace(v: &[Point]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() / 2.0
}

/// Scale, rotation and aspect change applied about a polygon's centroid,
/// followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    scale: f64,
    rotation_deg: f64,
    aspect: f64,
    translation: Point,
}

impl Transform {
    pub fn new(scale: f64, rotation_deg: f64, aspect: f64, translation: Point) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("scale must be > 0, got {scale}")));
        }
        if !(aspect > 0.0 && aspect.is_finite()) {
            return Err(Error::invalid(format!("aspect must be > 0, got {aspect}")));
        }
        if !rotation_deg.is_finite() || !translation.is_finite() {
            return Err(Error::invalid("transform has non-finite component"));
        }
        Ok(Self {
            scale,
            rotation_deg,
            aspect,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation_deg: 0.0,
            aspect: 1.0,
            translation: Point::default(),
        }
    }

    pub fn scaling(scale: f64) -> Result<Self> {
        Self::new(scale, 0.0, 1.0, Point::default())
    }

    pub fn rotation(deg: f64) -> Result<Self> {
        Self::new(1.0, deg, 1.0, Point::default())
    }

    pub fn stretch(aspect: f64) -> Result<Self> {
        Self::new(1.0, 0.0, aspect, Point::default())
    }

    pub fn translation(by: Point) -> Result<Self> {
        Self::new(1.0, 0.0, 1.0, by)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation_deg(&self) -> f64 {
        self.rotation_deg
    }

    pub fn aspect(&self) -> f64 {
        self.aspect
    }

    pub fn offset(&self) -> Point {
        self.translation
    }
}

/// Maps every vertex by aspect stretch along x, uniform scale, rotation
/// (all about the centroid), then translation. The kind tag is preserved.
pub fn apply_transform(p: &Polygon, t: &Transform) -> Polygon {
    let c = p.centroid();
    let vertices = p
        .vertices
        .iter()
        .map(|&v| {
            // Skip the identity steps so that they are bit-exact.
            let mut q = v;
            if t.aspect != 1.0 || t.scale != 1.0 {
                let d = v - c;
                q = c + Point::new(d.x * t.aspect, d.y) * t.scale;
            }
            if t.rotation_deg != 0.0 {
                q = q.rotated_about(c, t.rotation_deg);
            }
            q + t.translation
        })
        .collect();
    Polygon {
        kind: p.kind,
        vertices,
    }
    .oriented()
}

fn kind_for_sides(n: usize) -> ShapeKind {
    match n {
        3 => ShapeKind::Triangle,
        4 => ShapeKind::Rectangle,
        5 => ShapeKind::Pentagon,
        6 => ShapeKind::Hexagon,
        8 => ShapeKind::Octagon,
        _ => ShapeKind::Circle,
    }
}

/// Regular `n`-gon; with zero rotation the first vertex points up.
pub fn regular_polygon(n: usize, center: Point, radius: f64, rotation_deg: f64) -> Result<Polygon> {
    if n < 3 {
        return Err(Error::invalid(format!("regular polygon needs n >= 3, got {n}")));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid(format!("radius must be > 0, got {radius}")));
    }
    let vertices = (0..n)
        .map(|i| Point::polar(center, radius, -90.0 + rotation_deg + 360.0 * i as f64 / n as f64))
        .collect();
    Polygon::new(kind_for_sides(n), vertices)
}

/// `points`-pointed star alternating outer and inner vertices, outer first.
pub fn star_polygon(
    points: usize,
    outer_r: f64,
    inner_r: f64,
    center: Point,
    rotation_deg: f64,
) -> Result<Polygon> {
    if points < 3 {
        return Err(Error::invalid(format!("star needs >= 3 points, got {points}")));
    }
    if !(inner_r > 0.0 && inner_r < outer_r) {
        return Err(Error::invalid(format!(
            "star radii must satisfy 0 < inner ({inner_r}) < outer ({outer_r})"
        )));
    }
    let n = 2 * points;
    let vertices = (0..n)
        .map(|j| {
            let r = if j % 2 == 0 { outer_r } else { inner_r };
            Point::polar(center, r, -90.0 + rotation_deg + 360.0 * j as f64 / n as f64)
        })
        .collect();
    Polygon::new(ShapeKind::Star, vertices)
}

pub fn circle(center: Point, radius: f64) -> Result<Polygon> {
    Ok(regular_polygon(CIRCLE_SEGMENTS, center, radius, 0.0)?.with_kind(ShapeKind::Circle))
}

pub fn rectangle(center: Point, width: f64, height: f64, rotation_deg: f64) -> Result<Polygon> {
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::invalid("rectangle sides must be > 0"));
    }
    let (hw, hh) = (width / 2.0, height / 2.0);
    let vertices = [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)]
        .iter()
        .map(|&(x, y)| (center + Point::new(x, y)).rotated_about(center, rotation_deg))
        .collect();
    Polygon::new(ShapeKind::Rectangle, vertices)
}

/// Stadium: a `length`-long straight section capped by semicircles of
/// `radius`. The long axis lies along x before rotation.
pub fn capsule(center: Point, length: f64, radius: f64, rotation_deg: f64) -> Result<Polygon> {
    if !(length > 0.0 && radius > 0.0) {
        return Err(Error::invalid("capsule length and radius must be > 0"));
    }
    let half = length / 2.0;
    let right = center + Point::new(half, 0.0);
    let left = center - Point::new(half, 0.0);
    let k = CAPSULE_CAP_SEGMENTS;
    let mut vertices = Vec::with_capacity(2 * k + 2);
    for j in 0..=k {
        vertices.push(Point::polar(right, radius, -90.0 + 180.0 * j as f64 / k as f64));
    }
    for j in 0..=k {
        vertices.push(Point::polar(left, radius, 90.0 + 180.0 * j as f64 / k as f64));
    }
    let vertices = vertices
        .into_iter()
        .map(|p| p.rotated_about(center, rotation_deg))
        .collect();
    Polygon::new(ShapeKind::Capsule, vertices)
}

/// Plus sign with arms reaching `arm` from the center and half-width `half_width`.
pub fn cross(center: Point, arm: f64, half_width: f64, rotation_deg: f64) -> Result<Polygon> {
    if !(half_width > 0.0 && half_width < arm) {
        return Err(Error::invalid("cross needs 0 < half_width < arm"));
    }
    let (a, w) = (arm, half_width);
    let raw = [
        (a, -w),
        (a, w),
        (w, w),
        (w, a),
        (-w, a),
        (-w, w),
        (-a, w),
        (-a, -w),
        (-w, -w),
        (-w, -a),
        (w, -a),
        (w, -w),
    ];
    let vertices = raw
        .iter()
        .map(|&(x, y)| (center + Point::new(x, y)).rotated_about(center, rotation_deg))
        .collect();
    Polygon::new(ShapeKind::Cross, vertices)
}

/// Segment of `length` centered at `center`, horizontal before rotation.
pub fn line_segment(center: Point, length: f64, rotation_deg: f64) -> Result<Polygon> {
    if !(length > 0.0) {
        return Err(Error::invalid("line length must be > 0"));
    }
    let h = Point::new(length / 2.0, 0.0);
    Polygon::new(
        ShapeKind::Line,
        vec![
            (center - h).rotated_about(center, rotation_deg),
            (center + h).rotated_about(center, rotation_deg),
        ],
    )
}

fn project(p: &Polygon, axis: Point) -> (f64, f64) {
    p.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let d = v.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(a + ab * t)
}

fn boundary_distance(a: &Polygon, b: &Polygon) -> f64 {
    let one_way = |x: &Polygon, y: &Polygon| {
        x.vertices
            .iter()
            .flat_map(|&p| y.edges().map(move |(s, e)| point_segment_distance(p, s, e)))
            .fold(f64::INFINITY, f64::min)
    };
    one_way(a, b).min(one_way(b, a))
}

/// Signed separation of two convex polygons.
///
/// Positive: the Euclidean gap when they are disjoint. Negative: minus the
/// length of the minimum translation that separates them (the smallest
/// overlap over all edge-normal axes). Zero at touching.
pub fn sat_signed_separation(a: &Polygon, b: &Polygon) -> Result<f64> {
    for p in [a, b] {
        if p.area() <= 1e-12 {
            return Err(Error::invalid(format!(
                "degenerate {} with zero area in separation test",
                p.kind
            )));
        }
    }
    let mut best = f64::NEG_INFINITY;
    for poly in [a, b] {
        for (s, e) in poly.edges() {
            let d = e - s;
            let len = d.norm();
            let axis = Point::new(-d.y / len, d.x / len);
            let (amin, amax) = project(a, axis);
            let (bmin, bmax) = project(b, axis);
            let gap = (bmin - amax).max(amin - bmax);
            best = best.max(gap);
        }
    }
    if best > 0.0 {
        // Edge normals can under-report vertex-to-vertex gaps; the exact
        // Euclidean distance between disjoint convex sets is the boundary
        // distance.
        Ok(boundary_distance(a, b))
    } else {
        Ok(best)
    }
}

/// Deepest interpenetration between two (possibly non-convex) solids,
/// measured piecewise over their convex decompositions. Zero when apart.
pub fn max_penetration(a: &Polygon, b: &Polygon) -> Result<f64> {
    let pa = a.convex_pieces();
    let pb = b.convex_pieces();
    let mut worst = 0.0f64;
    for x in &pa {
        for y in &pb {
            let s = sat_signed_separation(x, y)?;
            worst = worst.max(-s);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(cx: f64, cy: f64) -> Polygon {
        rectangle(Point::new(cx, cy), 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn square_rotated_45_is_axis_aligned() {
        let sq = regular_polygon(4, Point::default(), 10.0, 45.0).unwrap();
        let s = 10.0 / 2f64.sqrt();
        let v = sq.vertices();
        assert!((v[0].x - s).abs() < 1e-9 && (v[0].y + s).abs() < 1e-9);
        for (p, q) in sq.edges() {
            let d = q - p;
            assert!(d.x.abs() < 1e-9 || d.y.abs() < 1e-9);
            assert!((d.norm() - 10.0 * 2f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn triangle_vertex_angles() {
        let t = regular_polygon(3, Point::default(), 10.0, 0.0).unwrap();
        for (v, deg) in t.vertices().iter().zip([-90.0f64, 30.0, 150.0]) {
            let want = Point::polar(Point::default(), 10.0, deg);
            assert!(v.distance(want) < 1e-9);
        }
    }

    #[test]
    fn regular_polygon_rejects_bad_args() {
        assert!(regular_polygon(2, Point::default(), 1.0, 0.0).is_err());
        assert!(regular_polygon(5, Point::default(), 0.0, 0.0).is_err());
        assert!(regular_polygon(5, Point::default(), -3.0, 0.0).is_err());
    }

    #[test]
    fn regular_vertices_on_circle() {
        for n in 3..20 {
            let c = Point::new(3.0, -7.0);
            let p = regular_polygon(n, c, 12.5, 17.0).unwrap();
            assert_eq!(p.len(), n);
            assert!(p.vertices().iter().all(|v| (v.distance(c) - 12.5).abs() < 1e-9));
            assert!(p.signed_area() > 0.0);
        }
    }

    #[test]
    fn star_shape() {
        let c = Point::new(50.0, 50.0);
        let s = star_polygon(5, 20.0, 10.0, c, 0.0).unwrap();
        assert_eq!(s.len(), 10);
        let top = s.vertices()[0];
        assert!((top.x - 50.0).abs() < 1e-9 && (top.y - 30.0).abs() < 1e-9);
        assert!(star_polygon(5, 10.0, 10.0, c, 0.0).is_err());
        assert!(star_polygon(5, 10.0, 12.0, c, 0.0).is_err());
        assert!(!s.is_convex());
        assert!(s.convex_hull().is_convex());
        assert_eq!(s.convex_hull().len(), 5);
    }

    #[test]
    fn identity_and_full_turn() {
        let p = star_polygon(6, 30.0, 12.0, Point::new(5.0, 9.0), 11.0).unwrap();
        assert_eq!(apply_transform(&p, &Transform::identity()), p);
        let turned = apply_transform(&p, &Transform::rotation(360.0).unwrap());
        for (a, b) in p.vertices().iter().zip(turned.vertices()) {
            assert!(a.distance(*b) < 1e-9);
        }
    }

    #[test]
    fn scale_doubles_centroid_distances() {
        let p = regular_polygon(7, Point::new(1.0, 2.0), 5.0, 3.0).unwrap();
        let c = p.centroid();
        let q = apply_transform(&p, &Transform::scaling(2.0).unwrap());
        let qc = q.centroid();
        for (a, b) in p.vertices().iter().zip(q.vertices()) {
            assert!((b.distance(qc) - 2.0 * a.distance(c)).abs() < 1e-9);
        }
    }

    #[test]
    fn aspect_scales_x_only() {
        let p = rectangle(Point::new(10.0, 10.0), 4.0, 6.0, 0.0).unwrap();
        let q = apply_transform(&p, &Transform::new(1.5, 0.0, 2.0, Point::default()).unwrap());
        let (bp, bq) = (p.bounds(), q.bounds());
        assert!((bq.width() - bp.width() * 3.0).abs() < 1e-9);
        assert!((bq.height() - bp.height() * 1.5).abs() < 1e-9);
    }

    #[test]
    fn transform_rejects_nonpositive() {
        assert!(Transform::new(0.0, 0.0, 1.0, Point::default()).is_err());
        assert!(Transform::new(1.0, 0.0, -1.0, Point::default()).is_err());
    }

    #[test]
    fn sat_axis_aligned_gap() {
        let d = sat_signed_separation(&unit_square(0.0, 0.0), &unit_square(3.0, 0.0)).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sat_coincident_squares() {
        let d = sat_signed_separation(&unit_square(0.0, 0.0), &unit_square(0.0, 0.0)).unwrap();
        assert!((d + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sat_touching_is_zero() {
        let d = sat_signed_separation(&unit_square(0.0, 0.0), &unit_square(1.0, 0.0)).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn sat_diagonal_gap_is_euclidean() {
        let d = sat_signed_separation(&unit_square(0.0, 0.0), &unit_square(3.0, 3.0)).unwrap();
        assert!((d - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sat_rejects_degenerate() {
        let line = line_segment(Point::default(), 4.0, 0.0).unwrap();
        assert!(sat_signed_separation(&line, &unit_square(0.0, 0.0)).is_err());
        let thick = line.solid(2.0);
        assert!(sat_signed_separation(&thick, &unit_square(0.0, 0.0)).is_ok());
    }

    #[test]
    fn polygon_validation() {
        let p = Point::new(1.0, 1.0);
        assert!(Polygon::new(ShapeKind::Triangle, vec![p, p, Point::default()]).is_err());
        assert!(Polygon::new(ShapeKind::Triangle, vec![p, Point::default()]).is_err());
        assert!(Polygon::new(ShapeKind::Line, vec![p, Point::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn star_and_cross_pieces_are_convex() {
        let s = star_polygon(5, 20.0, 8.0, Point::default(), 0.0).unwrap();
        let x = cross(Point::default(), 20.0, 6.0, 30.0).unwrap();
        for shape in [s, x] {
            let pieces = shape.convex_pieces();
            assert!(pieces.len() > 1);
            assert!(pieces.iter().all(Polygon::is_convex));
            let total: f64 = pieces.iter().map(Polygon::area).sum();
            assert!((total - shape.area()).abs() < 1e-6);
        }
    }

    #[test]
    fn capsule_and_circle_are_fine_polygons() {
        let c = capsule(Point::default(), 30.0, 10.0, 20.0).unwrap();
        assert!(c.len() >= 32 && c.is_convex());
        let area = 30.0 * 20.0 + std::f64::consts::PI * 100.0;
        assert!((c.area() - area).abs() / area < 0.01);
        let o = circle(Point::default(), 10.0).unwrap();
        assert_eq!(o.kind(), ShapeKind::Circle);
        assert_eq!(o.len(), CIRCLE_SEGMENTS);
    }
}
