//! Visual closure: pick the partial outline that completes to the target.
//!
//! The correct option deletes `k` edges and halves `l` more; each
//! distractor is the correct option with `m` drawn vertices displaced by
//! `delta * R`.

use crate::error::{Error, Result};
use crate::geometry::{self, line_segment, Point, ShapeKind};
use crate::prompts;
use crate::rng::SplitMix64;
use crate::scene::{NamedColor, Paint, PlacedShape, Scene, ShapeStyle, DEFAULT_CANVAS};
use crate::svg::render_option_panel;
use crate::task::{
    param_f64, param_i64, Answer, EdgeState, InstanceRecord, OutlineFigure, ParamMap, ParamValue,
    Subtask,
};
use crate::TaskInstance;

pub const KINDS: [ShapeKind; 7] = [
    ShapeKind::Capsule,
    ShapeKind::Star,
    ShapeKind::Hexagon,
    ShapeKind::Circle,
    ShapeKind::Pentagon,
    ShapeKind::Rectangle,
    ShapeKind::Triangle,
];

pub const RADIUS_RANGE: (f64, f64) = (120.0, 180.0);
pub const OUTLINE_STROKE: f64 = 3.0;
const CIRCLE_SIDES: usize = 16;
const CAPSULE_CAP_STEPS: usize = 4;
const DIRECTION_TRIES: usize = 64;
const EDGE_TRIES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub full_edges_removed: usize,
    pub partial_edges_removed: usize,
    pub edges_distorted: usize,
    /// Vertex displacement as a fraction of the target circumradius.
    pub distortion_factor: f64,
}

impl Params {
    pub fn from_map(m: &ParamMap) -> Result<Self> {
        let count = |name: &str| -> Result<usize> {
            let v = param_i64(m, name)?;
            usize::try_from(v).map_err(|_| Error::invalid(format!("{name} must be >= 0, got {v}")))
        };
        let delta = param_f64(m, "distortion_factor")?;
        if !(0.0..=0.5).contains(&delta) {
            return Err(Error::invalid(format!("distortion_factor must be in [0, 0.5], got {delta}")));
        }
        Ok(Self {
            full_edges_removed: count("full_edges_removed")?,
            partial_edges_removed: count("partial_edges_removed")?,
            edges_distorted: count("edges_distorted")?,
            distortion_factor: delta,
        })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("full_edges_removed".into(), ParamValue::Int(self.full_edges_removed as i64));
        m.insert(
            "partial_edges_removed".into(),
            ParamValue::Int(self.partial_edges_removed as i64),
        );
        m.insert("edges_distorted".into(), ParamValue::Int(self.edges_distorted as i64));
        m.insert("distortion_factor".into(), ParamValue::Float(self.distortion_factor));
        m
    }
}

/// Vertex loop of a coarse closed outline with circumradius `radius`.
pub fn outline_vertices(kind: ShapeKind, center: Point, radius: f64, rot: f64) -> Result<Vec<Point>> {
    let poly = match kind {
        ShapeKind::Triangle => geometry::regular_polygon(3, center, radius, rot)?,
        ShapeKind::Pentagon => geometry::regular_polygon(5, center, radius, rot)?,
        ShapeKind::Hexagon => geometry::regular_polygon(6, center, radius, rot)?,
        ShapeKind::Circle => geometry::regular_polygon(CIRCLE_SIDES, center, radius, rot)?,
        ShapeKind::Star => geometry::star_polygon(5, radius, radius / 2.0, center, rot)?,
        ShapeKind::Rectangle => {
            let h = 2.0 * radius / (1.0f64 + 1.6 * 1.6).sqrt();
            geometry::rectangle(center, 1.6 * h, h, rot)?
        }
        ShapeKind::Capsule => {
            let (half, r) = (radius / 2.0, radius / 2.0);
            let right = center + Point::new(half, 0.0);
            let left = center - Point::new(half, 0.0);
            let k = CAPSULE_CAP_STEPS;
            let mut v = Vec::with_capacity(2 * k + 2);
            for j in 0..=k {
                v.push(Point::polar(right, r, -90.0 + 180.0 * j as f64 / k as f64));
            }
            for j in 0..=k {
                v.push(Point::polar(left, r, 90.0 + 180.0 * j as f64 / k as f64));
            }
            return Ok(v.into_iter().map(|p| p.rotated_about(center, rot)).collect());
        }
        other => return Err(Error::invalid(format!("{other} has no closure outline"))),
    };
    Ok(poly.vertices().to_vec())
}

pub fn edge_count(kind: ShapeKind) -> usize {
    match kind {
        ShapeKind::Triangle => 3,
        ShapeKind::Rectangle => 4,
        ShapeKind::Pentagon => 5,
        ShapeKind::Hexagon => 6,
        ShapeKind::Star => 10,
        ShapeKind::Capsule => 2 * CAPSULE_CAP_STEPS + 2,
        ShapeKind::Circle => CIRCLE_SIDES,
        _ => 0,
    }
}

/// Kinds with enough edges for the removal and distortion counts.
pub fn eligible_kinds(p: &Params) -> Vec<ShapeKind> {
    let need = p.full_edges_removed + p.partial_edges_removed + p.edges_distorted + 1;
    KINDS.iter().copied().filter(|&k| edge_count(k) >= need).collect()
}

pub fn figure_scene(fig: &OutlineFigure) -> Result<Scene> {
    let style = ShapeStyle {
        fill: Paint::None,
        stroke: Paint::Named(NamedColor::Black),
        stroke_width: OUTLINE_STROKE,
    };
    let mut scene = Scene::empty(DEFAULT_CANVAS);
    for (a, b) in fig.segments() {
        let seg = line_segment(a.lerp(b, 0.5), a.distance(b), (b - a).y.atan2((b - a).x).to_degrees())?;
        scene.shapes.push(PlacedShape::new(seg, style));
    }
    Ok(scene)
}

/// Moves `vertex` by exactly `dist` in a direction that keeps it at least
/// `dist` away from every target vertex when one can be found.
fn displace(vertex: Point, center: Point, target: &[Point], dist: f64, rng: &mut SplitMix64) -> Point {
    for _ in 0..DIRECTION_TRIES {
        let moved = Point::polar(vertex, dist, rng.uniform(0.0, 360.0));
        if target.iter().all(|t| t.distance(moved) >= dist) {
            return moved;
        }
    }
    let out = vertex - center;
    vertex + out * (dist / out.norm())
}

pub fn generate(p: &Params, seed: u64) -> Result<TaskInstance> {
    let kinds = eligible_kinds(p);
    if kinds.is_empty() {
        return Err(Error::invalid(format!(
            "no outline has enough edges to remove {} and halve {} (largest has {})",
            p.full_edges_removed,
            p.partial_edges_removed,
            edge_count(ShapeKind::Circle)
        )));
    }
    let root = SplitMix64::new(seed);
    let mut rng = root.child(0);
    let kind = *rng.choose(&kinds);
    let radius = rng.uniform(RADIUS_RANGE.0, RADIUS_RANGE.1);
    let center = DEFAULT_CANVAS.center();
    let vertices = outline_vertices(kind, center, radius, rng.uniform(0.0, 360.0))?;
    let n = vertices.len();
    let target = OutlineFigure {
        kind,
        vertices: vertices.clone(),
        edges: vec![EdgeState::Full; n],
    };
    let (k, l) = (p.full_edges_removed, p.partial_edges_removed);
    let mut partial = None;
    for _ in 0..EDGE_TRIES {
        let picks = rng.sample_indices(n, k + l);
        let mut edges = vec![EdgeState::Full; n];
        for (j, &e) in picks.iter().enumerate() {
            edges[e] = if j < k { EdgeState::Removed } else { EdgeState::Half };
        }
        let fig = OutlineFigure {
            kind,
            vertices: vertices.clone(),
            edges,
        };
        if fig.retained_vertices().len() >= p.edges_distorted {
            partial = Some(fig);
            break;
        }
    }
    let correct_fig = partial.ok_or_else(|| {
        Error::invalid(format!("cannot keep {} vertices to distort", p.edges_distorted))
    })?;
    let correct = rng.below(4) as u8 + 1;
    let dist = p.distortion_factor * radius;
    let options: Vec<OutlineFigure> = (0..4u8)
        .map(|slot| {
            if slot + 1 == correct {
                return correct_fig.clone();
            }
            let mut drng = root.child(1 + u64::from(slot));
            let retained = correct_fig.retained_vertices();
            let mut fig = correct_fig.clone();
            for i in drng.sample_indices(retained.len(), p.edges_distorted) {
                let v = retained[i];
                fig.vertices[v] = displace(vertices[v], center, &vertices, dist, &mut drng);
            }
            fig
        })
        .collect();
    let target_scene = figure_scene(&target)?;
    let option_scenes = options.iter().map(figure_scene).collect::<Result<Vec<_>>>()?;
    let panel = render_option_panel(&target_scene, &option_scenes)?;
    Ok(super::assemble(
        Subtask::VisualClosure,
        p.to_map(),
        seed,
        vec![panel],
        prompts::question(Subtask::VisualClosure, &[])?,
        Answer::Mcq(correct),
        InstanceRecord::Closure {
            target,
            options,
            correct,
            radius,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(k: usize, l: usize, m: usize, d: f64) -> Params {
        Params {
            full_edges_removed: k,
            partial_edges_removed: l,
            edges_distorted: m,
            distortion_factor: d,
        }
    }

    #[test]
    fn degenerate_config_keeps_full_target() {
        let inst = generate(&p(0, 0, 0, 0.1), 3).unwrap();
        let InstanceRecord::Closure { target, options, correct, .. } = &inst.record else { panic!() };
        assert_eq!(&options[*correct as usize - 1], target);
    }

    #[test]
    fn retained_vertices_are_target_vertices() {
        for seed in 0..40 {
            let inst = generate(&p(3, 3, 3, 0.14), seed).unwrap();
            let InstanceRecord::Closure { target, options, correct, .. } = &inst.record else { panic!() };
            let right = &options[*correct as usize - 1];
            for v in right.retained_vertices() {
                assert!(target.vertices.iter().any(|t| t.distance(right.vertices[v]) < 1e-9));
            }
            let removed = right.edges.iter().filter(|e| **e == EdgeState::Removed).count();
            let half = right.edges.iter().filter(|e| **e == EdgeState::Half).count();
            assert_eq!((removed, half), (3, 3));
        }
    }

    #[test]
    fn too_many_removals_rejected() {
        assert!(generate(&p(10, 6, 1, 0.1), 0).is_err());
    }

    #[test]
    fn outlines_have_requested_radius() {
        for kind in KINDS {
            let c = Point::new(200.0, 200.0);
            let v = outline_vertices(kind, c, 150.0, 17.0).unwrap();
            assert_eq!(v.len(), edge_count(kind));
            let r = v.iter().map(|q| q.distance(c)).fold(0.0, f64::max);
            assert!((r - 150.0).abs() < 1e-9, "{kind}: {r}");
        }
    }
}
