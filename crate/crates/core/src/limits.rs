//! Probes of perception limits at object sizes measured in encoder patch
//! units: rotation detection between two squares and rectangle counting.

use crate::error::{Error, Result};
use crate::geometry::{rectangle, Point};
use crate::prompts;
use crate::rng::SplitMix64;
use crate::scene::{place_prototypes, Canvas, NamedColor, PlacedShape, Scene, ShapeStyle};
use crate::subtask::assemble;
use crate::svg::render_scene;
use crate::task::{param_f64, param_i64, Answer, InstanceRecord, ParamMap, ParamValue, Subtask};
use crate::TaskInstance;

/// Side of a visual-encoder input patch in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchUnit {
    p: f64,
}

impl PatchUnit {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::invalid(format!("patch unit must be > 0, got {p}")));
        }
        Ok(Self { p })
    }

    pub fn pixels(&self) -> f64 {
        self.p
    }

    /// Object size for a multiple of the patch side.
    pub fn size(&self, multiple: f64) -> f64 {
        multiple * self.p
    }
}

impl Default for PatchUnit {
    fn default() -> Self {
        Self { p: 14.0 }
    }
}

pub const ROTATION_CANVAS_HEIGHT: f64 = 224.0;
/// Square centers sit this many square sides apart.
pub const ROTATION_SPACING: f64 = 3.0;

pub const COUNT_CANVAS: Canvas = Canvas {
    width: 560.0,
    height: 560.0,
    margin: 8.0,
};
pub const COUNT_SIZE_RANGE: (f64, f64) = (7.0, 112.0);
pub const COUNT_SCALE_RANGE: (f64, f64) = (0.1, 0.9);
pub const COUNT_SHORT_EDGE_RATIO: f64 = 0.8;
pub const COUNT_SEPARATION: f64 = 4.0;

/// Square sizes in patch multiples: 0.5P to 8P.
pub const ROTATION_SIZE_MULTIPLES: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationParams {
    pub square_size: f64,
    pub rotation: f64,
}

impl RotationParams {
    pub fn from_map(m: &ParamMap) -> Result<Self> {
        Ok(Self {
            square_size: param_f64(m, "square_size")?,
            rotation: param_f64(m, "rotation")?,
        })
    }

    pub fn to_map(&self) -> ParamMap {
        let num = |v: f64| {
            if v.fract() == 0.0 {
                ParamValue::Int(v as i64)
            } else {
                ParamValue::Float(v)
            }
        };
        let mut m = ParamMap::new();
        m.insert("square_size".into(), num(self.square_size));
        m.insert("rotation".into(), num(self.rotation));
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountParams {
    pub number_of_rectangles: usize,
    pub scaling_factor: f64,
}

impl CountParams {
    pub fn from_map(m: &ParamMap) -> Result<Self> {
        let n = param_i64(m, "number_of_rectangles")?;
        if !(2..=8).contains(&n) {
            return Err(Error::invalid(format!("number_of_rectangles must be in 2..=8, got {n}")));
        }
        let sf = param_f64(m, "scaling_factor")?;
        if !(0.0..=1.0).contains(&sf) {
            return Err(Error::invalid(format!("scaling_factor must be in [0, 1], got {sf}")));
        }
        Ok(Self {
            number_of_rectangles: n as usize,
            scaling_factor: sf,
        })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert(
            "number_of_rectangles".into(),
            ParamValue::Int(self.number_of_rectangles as i64),
        );
        m.insert("scaling_factor".into(), ParamValue::Float(self.scaling_factor));
        m
    }
}

/// Canvas for a rotation probe with square side `d`.
pub fn rotation_canvas(d: f64) -> Canvas {
    Canvas::new(ROTATION_CANVAS_HEIGHT.max(5.0 * d), ROTATION_CANVAS_HEIGHT, 0.0)
}

/// The (left, right) squares of a rotation probe.
pub fn rotation_squares(d: f64, theta: f64) -> Result<(crate::Polygon, crate::Polygon)> {
    let canvas = rotation_canvas(d);
    let mid = canvas.center();
    let offset = Point::new(ROTATION_SPACING * d / 2.0, 0.0);
    Ok((
        rectangle(mid - offset, d, d, 0.0)?,
        rectangle(mid + offset, d, d, theta)?,
    ))
}

pub fn gen_rotation_probe(p: &RotationParams, seed: u64) -> Result<TaskInstance> {
    let d = p.square_size;
    if !(d > 0.0) {
        return Err(Error::invalid(format!("square_size must be > 0, got {d}")));
    }
    if d > ROTATION_CANVAS_HEIGHT / 2.0 {
        return Err(Error::invalid(format!(
            "square_size {d} exceeds half the {ROTATION_CANVAS_HEIGHT} px canvas"
        )));
    }
    if !(p.rotation >= 0.0 && p.rotation.is_finite()) {
        return Err(Error::invalid(format!("rotation must be >= 0, got {}", p.rotation)));
    }
    let (left, right) = rotation_squares(d, p.rotation)?;
    let mut scene = Scene::empty(rotation_canvas(d));
    scene.seed = seed;
    let style = ShapeStyle::solid(NamedColor::Black);
    scene.shapes.push(PlacedShape::new(left.clone(), style));
    scene.shapes.push(PlacedShape::new(right.clone(), style));
    Ok(assemble(
        Subtask::LimitsRotation,
        p.to_map(),
        seed,
        vec![render_scene(&scene)],
        prompts::question(Subtask::LimitsRotation, &[])?,
        Answer::YesNo(p.rotation > 0.0),
        InstanceRecord::RotationProbe {
            left,
            right,
            theta: p.rotation,
        },
    ))
}

/// Long edge in pixels for a count-probe scaling factor: linear from 7 px
/// at 0.1 to 112 px at 0.9, clamped.
pub fn count_rectangle_size(scaling_factor: f64) -> f64 {
    let (s0, s1) = COUNT_SCALE_RANGE;
    let (d0, d1) = COUNT_SIZE_RANGE;
    (d0 + (scaling_factor - s0) / (s1 - s0) * (d1 - d0)).clamp(d0, d1)
}

pub fn gen_count_probe(p: &CountParams, seed: u64) -> Result<TaskInstance> {
    let d = count_rectangle_size(p.scaling_factor);
    let proto = PlacedShape::new(
        rectangle(Point::default(), d, COUNT_SHORT_EDGE_RATIO * d, 0.0)?,
        ShapeStyle::solid(NamedColor::Black),
    );
    let protos = vec![proto; p.number_of_rectangles];
    let placement_seed = SplitMix64::new(seed).child(1).next_u64();
    let scene = place_prototypes(&protos, COUNT_SEPARATION, COUNT_CANVAS, placement_seed)?;
    Ok(assemble(
        Subtask::LimitsCount,
        p.to_map(),
        seed,
        vec![render_scene(&scene)],
        prompts::question(Subtask::LimitsCount, &[])?,
        Answer::Integer(p.number_of_rectangles as u64),
        InstanceRecord::CountProbe { scene },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sizes_are_patch_multiples() {
        let p = PatchUnit::default();
        let sizes: Vec<f64> = ROTATION_SIZE_MULTIPLES.iter().map(|&m| p.size(m)).collect();
        assert_eq!(sizes, vec![7.0, 14.0, 28.0, 56.0, 112.0]);
        assert_eq!(p.size(2.0), 28.0);
        let grid = Subtask::LimitsRotation.default_grid();
        let listed: Vec<f64> = grid["square_size"].iter().map(|v| v.as_f64().unwrap()).collect();
        assert_eq!(listed, sizes);
    }

    #[test]
    fn zero_rotation_is_no() {
        let inst = gen_rotation_probe(&RotationParams { square_size: 28.0, rotation: 0.0 }, 1).unwrap();
        assert_eq!(inst.ground_truth, Answer::YesNo(false));
        let inst = gen_rotation_probe(&RotationParams { square_size: 28.0, rotation: 1.0 }, 1).unwrap();
        assert_eq!(inst.ground_truth, Answer::YesNo(true));
    }

    #[test]
    fn oversized_square_rejected() {
        assert!(gen_rotation_probe(&RotationParams { square_size: 113.0, rotation: 0.0 }, 0).is_err());
    }

    #[test]
    fn count_size_mapping() {
        assert_eq!(count_rectangle_size(0.1), 7.0);
        assert_eq!(count_rectangle_size(0.9), 112.0);
        assert!((count_rectangle_size(0.5) - 59.5).abs() < 1e-9);
    }

    #[test]
    fn eight_large_rectangles_fit() {
        for seed in 0..10 {
            let inst = gen_count_probe(&CountParams { number_of_rectangles: 8, scaling_factor: 0.9 }, seed)
                .unwrap();
            let InstanceRecord::CountProbe { scene } = &inst.record else { panic!() };
            scene.check_invariants().unwrap();
        }
    }
}
