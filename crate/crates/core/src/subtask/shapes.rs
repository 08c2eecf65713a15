//! Shape discrimination: count one kind among outlined, possibly
//! overlapping shapes.

use crate::error::{Error, Result};
use crate::geometry::ShapeKind;
use crate::prompts;
use crate::rng::SplitMix64;
use crate::scene::{count_matching, place_shapes, Canvas, ShapeQuery, ShapeSpec, ShapeStyle};
use crate::svg::render_scene;
use crate::task::{param_f64, param_i64, Answer, InstanceRecord, ParamMap, ParamValue, Subtask};
use crate::TaskInstance;

pub const ALPHABET: [ShapeKind; 7] = [
    ShapeKind::Rectangle,
    ShapeKind::Triangle,
    ShapeKind::Circle,
    ShapeKind::Pentagon,
    ShapeKind::Hexagon,
    ShapeKind::Octagon,
    ShapeKind::Star,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// Distinct kinds in the scene (S).
    pub number_of_shapes: usize,
    /// Upper bound on instances per kind (S_I).
    pub instances_per_shape: usize,
    /// Signed minimum separation in pixels.
    pub overlap_factor: f64,
}

impl Params {
    pub fn from_map(m: &ParamMap) -> Result<Self> {
        let s = param_i64(m, "number_of_shapes")?;
        let si = param_i64(m, "instances_per_shape")?;
        if !(1..=ALPHABET.len() as i64).contains(&s) {
            return Err(Error::invalid(format!("number_of_shapes must be in 1..=7, got {s}")));
        }
        if si < 1 {
            return Err(Error::invalid(format!("instances_per_shape must be >= 1, got {si}")));
        }
        Ok(Self {
            number_of_shapes: s as usize,
            instances_per_shape: si as usize,
            overlap_factor: param_f64(m, "overlap_factor")?,
        })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("number_of_shapes".into(), ParamValue::Int(self.number_of_shapes as i64));
        m.insert(
            "instances_per_shape".into(),
            ParamValue::Int(self.instances_per_shape as i64),
        );
        let of = self.overlap_factor;
        let v = if of.fract() == 0.0 { ParamValue::Int(of as i64) } else { ParamValue::Float(of) };
        m.insert("overlap_factor".into(), v);
        m
    }
}

/// Outer-radius range that keeps the expected ink density roughly constant
/// as the shape count grows.
pub fn size_range(total: usize, d_sep: f64, canvas: Canvas) -> (f64, f64) {
    let per_shape = 0.22 * canvas.width * canvas.height / (total as f64 * std::f64::consts::PI);
    let hi = (per_shape.sqrt() - d_sep.max(0.0) / 2.0).clamp(10.0, 56.0);
    (8f64.max(0.65 * hi), hi)
}

pub fn generate(p: &Params, seed: u64) -> Result<TaskInstance> {
    let root = SplitMix64::new(seed);
    let mut rng = root.child(0);
    let canvas = Canvas::default();
    let picks = rng.sample_indices(ALPHABET.len(), p.number_of_shapes);
    let kinds: Vec<ShapeKind> = picks.iter().map(|&i| ALPHABET[i]).collect();
    let counts: Vec<usize> = kinds
        .iter()
        .map(|_| rng.range_inclusive(1, p.instances_per_shape as u64) as usize)
        .collect();
    let total: usize = counts.iter().sum();
    let (lo, hi) = size_range(total, p.overlap_factor, canvas);
    let mut specs = Vec::with_capacity(total);
    for (&kind, &n) in kinds.iter().zip(&counts) {
        for _ in 0..n {
            let mut spec = ShapeSpec::new(kind, rng.uniform(lo, hi), ShapeStyle::outline())
                .rotated(rng.uniform(0.0, 360.0));
            if kind == ShapeKind::Star {
                spec = spec.concentric(rng.below(3) as u32);
            }
            specs.push(spec);
        }
    }
    rng.shuffle(&mut specs);
    let query = *rng.choose(&kinds);
    counting_instance(&specs, p.overlap_factor, canvas, query, p.to_map(), seed)
}

/// Builds an instance from explicit shape requests; the answer is the
/// number of `query` shapes placed.
pub fn counting_instance(
    specs: &[ShapeSpec],
    d_sep: f64,
    canvas: Canvas,
    query: ShapeKind,
    params: ParamMap,
    seed: u64,
) -> Result<TaskInstance> {
    let placement_seed = SplitMix64::new(seed).child(1).next_u64();
    let scene = place_shapes(specs, d_sep, canvas, placement_seed)?;
    let query = ShapeQuery::kind(query);
    let count = count_matching(&scene, &query);
    let question = prompts::question(
        Subtask::ShapeDiscrimination,
        &[("shape_plural", query.kind.plural())],
    )?;
    Ok(super::assemble(
        Subtask::ShapeDiscrimination,
        params,
        seed,
        vec![render_scene(&scene)],
        question,
        Answer::Integer(count as u64),
        InstanceRecord::Counting { scene, query },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(s: usize, si: usize, of: f64) -> Params {
        Params {
            number_of_shapes: s,
            instances_per_shape: si,
            overlap_factor: of,
        }
    }

    #[test]
    fn three_circles() {
        let specs = vec![ShapeSpec::new(ShapeKind::Circle, 30.0, ShapeStyle::outline()); 3];
        let inst = counting_instance(
            &specs,
            10.0,
            Canvas::default(),
            ShapeKind::Circle,
            params(1, 3, 10.0).to_map(),
            5,
        )
        .unwrap();
        assert_eq!(inst.ground_truth, Answer::Integer(3));
    }

    #[test]
    fn concentric_star_counts_three() {
        let specs = vec![ShapeSpec::new(ShapeKind::Star, 40.0, ShapeStyle::outline()).concentric(2)];
        let inst = counting_instance(
            &specs,
            10.0,
            Canvas::default(),
            ShapeKind::Star,
            params(1, 1, 10.0).to_map(),
            9,
        )
        .unwrap();
        assert_eq!(inst.ground_truth, Answer::Integer(3));
        assert!(inst.question.contains("stars"));
    }

    #[test]
    fn densest_default_config_places() {
        for seed in 0..3 {
            for of in [-40.0, 10.0] {
                let inst = generate(&params(7, 10, of), seed).unwrap();
                let InstanceRecord::Counting { scene, .. } = &inst.record else {
                    panic!("wrong record");
                };
                scene.check_invariants().unwrap();
                let kinds: std::collections::BTreeSet<_> =
                    scene.shapes.iter().map(|s| s.kind()).collect();
                assert_eq!(kinds.len(), 7);
            }
        }
    }

    #[test]
    fn params_round_trip() {
        let p = params(4, 6, -30.0);
        assert_eq!(Params::from_map(&p.to_map()).unwrap(), p);
    }
}
