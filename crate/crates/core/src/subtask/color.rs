//! Joint shape-color discrimination: count shapes of one kind and one fill
//! color.

use crate::error::{Error, Result};
use crate::geometry::ShapeKind;
use crate::prompts;
use crate::rng::SplitMix64;
use crate::scene::{
    count_matching, place_shapes, Canvas, NamedColor, Scene, ShapeQuery, ShapeSpec, ShapeStyle,
    PALETTE,
};
use crate::svg::render_scene;
use crate::task::{param_i64, Answer, InstanceRecord, ParamMap, ParamValue, Subtask};
use crate::TaskInstance;

pub const ALPHABET: [ShapeKind; 6] = [
    ShapeKind::Star,
    ShapeKind::Triangle,
    ShapeKind::Pentagon,
    ShapeKind::Hexagon,
    ShapeKind::Octagon,
    ShapeKind::Cross,
];

/// Minimum gap between shapes; the subtask never overlaps shapes.
pub const SEPARATION: f64 = 8.0;
pub const SIZE_RANGE: (f64, f64) = (20.0, 44.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Params {
    /// Distinct shape kinds (S).
    pub number_of_shapes: usize,
    /// Distinct fill colors (C).
    pub number_of_unique_colors: usize,
}

impl Params {
    pub fn from_map(m: &ParamMap) -> Result<Self> {
        let s = param_i64(m, "number_of_shapes")?;
        let c = param_i64(m, "number_of_unique_colors")?;
        if !(1..=ALPHABET.len() as i64).contains(&s) {
            return Err(Error::invalid(format!("number_of_shapes must be in 1..=6, got {s}")));
        }
        if !(1..=PALETTE.len() as i64).contains(&c) {
            return Err(Error::invalid(format!(
                "number_of_unique_colors must be in 1..=8, got {c}"
            )));
        }
        Ok(Self {
            number_of_shapes: s as usize,
            number_of_unique_colors: c as usize,
        })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("number_of_shapes".into(), ParamValue::Int(self.number_of_shapes as i64));
        m.insert(
            "number_of_unique_colors".into(),
            ParamValue::Int(self.number_of_unique_colors as i64),
        );
        m
    }
}

/// Every one of `distinct` values at least once, then uniform extras, in
/// random order.
fn covering(rng: &mut SplitMix64, distinct: usize, total: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..distinct).collect();
    while v.len() < total {
        v.push(rng.below(distinct as u64) as usize);
    }
    rng.shuffle(&mut v);
    v
}

pub fn generate(p: &Params, seed: u64) -> Result<TaskInstance> {
    let mut rng = SplitMix64::new(seed).child(0);
    let kind_picks = rng.sample_indices(ALPHABET.len(), p.number_of_shapes);
    let color_picks = rng.sample_indices(PALETTE.len(), p.number_of_unique_colors);
    let total = p.number_of_shapes.max(p.number_of_unique_colors) + rng.below(3) as usize;
    let kinds = covering(&mut rng, kind_picks.len(), total);
    let colors = covering(&mut rng, color_picks.len(), total);
    let specs: Vec<ShapeSpec> = kinds
        .iter()
        .zip(&colors)
        .map(|(&k, &c)| {
            ShapeSpec::new(
                ALPHABET[kind_picks[k]],
                rng.uniform(SIZE_RANGE.0, SIZE_RANGE.1),
                ShapeStyle::solid(PALETTE[color_picks[c]]),
            )
            .rotated(rng.uniform(0.0, 360.0))
        })
        .collect();
    let placement_seed = SplitMix64::new(seed).child(1).next_u64();
    let scene = place_shapes(&specs, SEPARATION, Canvas::default(), placement_seed)?;
    let present: Vec<ShapeQuery> = scene
        .shapes
        .iter()
        .map(|s| ShapeQuery::colored(s.kind(), s.style.fill_color().expect("solid fill")))
        .collect();
    let query = *rng.choose(&present);
    instance_for_query(scene, query, p.to_map(), seed)
}

/// Wraps a scene and an arbitrary (kind, color) query into an instance.
pub fn instance_for_query(
    scene: Scene,
    query: ShapeQuery,
    params: ParamMap,
    seed: u64,
) -> Result<TaskInstance> {
    let color: NamedColor = query
        .color
        .ok_or_else(|| Error::invalid("joint query needs a color"))?;
    let count = count_matching(&scene, &query);
    let question = prompts::question(
        Subtask::JointShapeColor,
        &[("shape_plural", query.kind.plural()), ("color", color.name())],
    )?;
    Ok(super::assemble(
        Subtask::JointShapeColor,
        params,
        seed,
        vec![render_scene(&scene)],
        question,
        Answer::Integer(count as u64),
        InstanceRecord::Counting { scene, query },
    ))
}
