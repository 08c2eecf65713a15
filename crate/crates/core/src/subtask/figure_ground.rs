//! Figure-ground: the target pattern and four options buried in random
//! line-segment noise.

use super::patterns::{build_options, make_pattern, ChangeKind, PatternConfig};
use crate::error::{Error, Result};
use crate::geometry::{line_segment, Point};
use crate::prompts;
use crate::rng::SplitMix64;
use crate::scene::{PlacedShape, Scene, ShapeStyle};
use crate::svg::render_option_panel;
use crate::task::{param_f64, param_i64, Answer, InstanceRecord, ParamMap, ParamValue, Subtask};
use crate::TaskInstance;

pub const NOISE_SEGMENT_LENGTH: f64 = 24.0;
pub const NOISE_STROKE: f64 = 2.0;
pub const PLACEMENT_MARGIN: f64 = 40.0;

/// Distractor changes; three distinct ones are drawn per instance.
pub const CHANGES: [ChangeKind; 4] = [
    ChangeKind::Substitute,
    ChangeKind::Rotate(45.0),
    ChangeKind::Scale(1.5),
    ChangeKind::Stretch(1.5),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub number_of_shapes: usize,
    /// Fraction of the cell area covered by noise ink.
    pub background_density: f64,
}

impl Params {
    pub fn from_map(m: &ParamMap) -> Result<Self> {
        let n = param_i64(m, "number_of_shapes")?;
        let bdf = param_f64(m, "background_density")?;
        if !(1..=12).contains(&n) {
            return Err(Error::invalid(format!("number_of_shapes must be in 1..=12, got {n}")));
        }
        if !(0.0..=1.0).contains(&bdf) {
            return Err(Error::invalid(format!("background_density must be in [0, 1], got {bdf}")));
        }
        Ok(Self {
            number_of_shapes: n as usize,
            background_density: bdf,
        })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("number_of_shapes".into(), ParamValue::Int(self.number_of_shapes as i64));
        m.insert("background_density".into(), ParamValue::Float(self.background_density));
        m
    }
}

/// Primitive layout for `n` shapes: smaller shapes as the count grows.
pub fn pattern_config(n: usize) -> PatternConfig {
    let usable = 448.0 - 2.0 * PLACEMENT_MARGIN;
    let hi = (0.12 * usable * usable / (n as f64 * std::f64::consts::PI))
        .sqrt()
        .min(40.0);
    PatternConfig {
        count: n,
        size_range: (0.7 * hi, hi),
        // Enough room for a primitive scaled by 1.5 to stay clear.
        d_sep: (0.5 * hi + 4.0).max(12.0),
        placement_margin: PLACEMENT_MARGIN,
    }
}

pub fn noise_count(bdf: f64, width: f64, height: f64) -> usize {
    (bdf * width * height / (NOISE_SEGMENT_LENGTH * NOISE_STROKE)).round() as usize
}

/// Noise segments first, then the pattern on top.
pub fn with_noise(pattern: &Scene, bdf: f64, rng: &mut SplitMix64) -> Result<Scene> {
    let c = pattern.canvas;
    let count = noise_count(bdf, c.width, c.height);
    let half = NOISE_SEGMENT_LENGTH / 2.0;
    let style = ShapeStyle {
        stroke_width: NOISE_STROKE,
        ..ShapeStyle::outline()
    };
    let mut shapes = Vec::with_capacity(count + pattern.shapes.len());
    for _ in 0..count {
        let at = Point::new(
            rng.uniform(c.margin + half, c.width - c.margin - half),
            rng.uniform(c.margin + half, c.height - c.margin - half),
        );
        let seg = line_segment(at, NOISE_SEGMENT_LENGTH, rng.uniform(0.0, 180.0))?;
        shapes.push(PlacedShape::noise(seg, style));
    }
    shapes.extend(pattern.shapes.iter().cloned());
    Ok(Scene {
        shapes,
        ..pattern.clone()
    })
}

pub fn generate(p: &Params, seed: u64) -> Result<TaskInstance> {
    let root = SplitMix64::new(seed);
    let mut rng = root.child(0);
    let target = make_pattern(&pattern_config(p.number_of_shapes), root.child(1).next_u64())?;
    let mut pool = CHANGES;
    rng.shuffle(&mut pool);
    let kinds = [pool[0], pool[1], pool[2]];
    let (clean, correct, alterations) = build_options(&target, &kinds, &mut rng)?;
    let options = clean
        .iter()
        .enumerate()
        .map(|(i, o)| with_noise(o, p.background_density, &mut root.child(2 + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let panel = render_option_panel(&target, &options)?;
    Ok(super::assemble(
        Subtask::FigureGround,
        p.to_map(),
        seed,
        vec![panel],
        prompts::question(Subtask::FigureGround, &[])?,
        Answer::Mcq(correct),
        InstanceRecord::Choice {
            target,
            options,
            correct,
            alterations,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::super::patterns::figure_distance;
    use super::*;

    #[test]
    fn zero_density_has_no_noise() {
        let inst = generate(&Params { number_of_shapes: 6, background_density: 0.0 }, 4).unwrap();
        let InstanceRecord::Choice { target, options, correct, .. } = &inst.record else { panic!() };
        assert!(options.iter().all(|o| o.shapes.iter().all(|s| !s.noise)));
        assert_eq!(options[*correct as usize - 1].shapes, target.shapes);
    }

    #[test]
    fn noise_grows_with_density() {
        let counts: Vec<usize> = [0.1, 0.3, 0.5].iter().map(|&b| noise_count(b, 448.0, 448.0)).collect();
        assert!(counts[0] < counts[1] && counts[1] < counts[2]);
    }

    #[test]
    fn densest_patterns_place() {
        for seed in 0..5 {
            let inst = generate(&Params { number_of_shapes: 10, background_density: 0.1 }, seed).unwrap();
            let InstanceRecord::Choice { target, options, correct, .. } = &inst.record else { panic!() };
            assert_eq!(target.shapes.len(), 10);
            assert!(figure_distance(&options[*correct as usize - 1], target) < 1e-9);
        }
    }
}
