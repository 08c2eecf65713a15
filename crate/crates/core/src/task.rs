//! Task instances, answers and control parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon, ShapeKind};
use crate::scene::{Scene, ShapeQuery};
use crate::svg::SvgDoc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subtask {
    ShapeDiscrimination,
    JointShapeColor,
    Letter,
    FormConstancy,
    SpatialGrid,
    FigureGround,
    VisualClosure,
    LimitsRotation,
    LimitsCount,
}

impl Subtask {
    pub const ALL: [Subtask; 9] = [
        Subtask::ShapeDiscrimination,
        Subtask::JointShapeColor,
        Subtask::Letter,
        Subtask::FormConstancy,
        Subtask::SpatialGrid,
        Subtask::FigureGround,
        Subtask::VisualClosure,
        Subtask::LimitsRotation,
        Subtask::LimitsCount,
    ];

    /// The seven benchmark subtasks in results-table column order.
    pub const BENCHMARK: [Subtask; 7] = [
        Subtask::FigureGround,
        Subtask::SpatialGrid,
        Subtask::JointShapeColor,
        Subtask::ShapeDiscrimination,
        Subtask::Letter,
        Subtask::FormConstancy,
        Subtask::VisualClosure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subtask::ShapeDiscrimination => "shape_discrimination",
            Subtask::JointShapeColor => "joint_shape_color",
            Subtask::Letter => "letter",
            Subtask::FormConstancy => "form_constancy",
            Subtask::SpatialGrid => "spatial_grid",
            Subtask::FigureGround => "figure_ground",
            Subtask::VisualClosure => "visual_closure",
            Subtask::LimitsRotation => "limits_rotation",
            Subtask::LimitsCount => "limits_count",
        }
    }

    /// Column heading used in accuracy tables.
    pub fn title(self) -> &'static str {
        match self {
            Subtask::FigureGround => "Figure Ground",
            Subtask::SpatialGrid => "Visual Spatial",
            Subtask::JointShapeColor => "Color Disamb.",
            Subtask::ShapeDiscrimination => "Shape Disamb.",
            Subtask::Letter => "Letter Disamb.",
            Subtask::FormConstancy => "Form Const.",
            Subtask::VisualClosure => "Visual Closure",
            Subtask::LimitsRotation => "Rotation Probe",
            Subtask::LimitsCount => "Count Probe",
        }
    }

    pub fn answer_kind(self) -> AnswerKind {
        match self {
            Subtask::ShapeDiscrimination
            | Subtask::JointShapeColor
            | Subtask::SpatialGrid
            | Subtask::LimitsCount => AnswerKind::Integer,
            Subtask::Letter => AnswerKind::Text,
            Subtask::FormConstancy | Subtask::FigureGround | Subtask::VisualClosure => {
                AnswerKind::Mcq4
            }
            Subtask::LimitsRotation => AnswerKind::YesNo,
        }
    }

    /// Declared control parameters, sorted.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Subtask::ShapeDiscrimination => {
                &["instances_per_shape", "number_of_shapes", "overlap_factor"]
            }
            Subtask::JointShapeColor => &["number_of_shapes", "number_of_unique_colors"],
            Subtask::Letter => &["block_size", "contrast", "number_of_letters"],
            Subtask::FormConstancy => &[
                "aspect_ratio",
                "rotation_factor",
                "scaling_factor",
                "shape_substitution",
            ],
            Subtask::SpatialGrid => &["grid_dimension", "number_of_grids"],
            Subtask::FigureGround => &["background_density", "number_of_shapes"],
            Subtask::VisualClosure => &[
                "distortion_factor",
                "edges_distorted",
                "full_edges_removed",
                "partial_edges_removed",
            ],
            Subtask::LimitsRotation => &["rotation", "square_size"],
            Subtask::LimitsCount => &["number_of_rectangles", "scaling_factor"],
        }
    }

    /// Default sweep grid for the subtask.
    pub fn default_grid(self) -> BTreeMap<String, Vec<ParamValue>> {
        use ParamValue::{Float as F, Int as I, Text as T};
        let ints = |v: &[i64]| v.iter().map(|&x| I(x)).collect::<Vec<_>>();
        let floats = |v: &[f64]| v.iter().map(|&x| F(x)).collect::<Vec<_>>();
        let entries: Vec<(&str, Vec<ParamValue>)> = match self {
            Subtask::ShapeDiscrimination => vec![
                ("number_of_shapes", ints(&[3, 4, 5, 6, 7])),
                ("instances_per_shape", ints(&[3, 6, 10])),
                ("overlap_factor", ints(&[-40, -30, -20, 10])),
            ],
            Subtask::JointShapeColor => vec![
                ("number_of_shapes", ints(&[2, 4, 6])),
                ("number_of_unique_colors", ints(&[2, 4, 6])),
            ],
            Subtask::Letter => vec![
                ("number_of_letters", ints(&[1, 5, 9])),
                ("contrast", ints(&[1, 2, 3])),
                ("block_size", floats(&[0.04, 0.08, 0.1])),
            ],
            Subtask::FormConstancy => vec![
                ("shape_substitution", ints(&[0, 1])),
                ("scaling_factor", floats(&[0.8, 1.1, 1.4])),
                ("rotation_factor", ints(&[5, 25, 50])),
                ("aspect_ratio", floats(&[0.8, 1.1, 1.4])),
            ],
            Subtask::SpatialGrid => {
                let dims = [3, 6, 9];
                let mut d = Vec::new();
                for r in dims {
                    for c in dims {
                        d.push(T(format!("{r}x{c}")));
                    }
                }
                vec![("grid_dimension", d), ("number_of_grids", ints(&[1, 3, 5]))]
            }
            Subtask::FigureGround => vec![
                ("number_of_shapes", ints(&[2, 6, 10])),
                ("background_density", floats(&[0.1, 0.3, 0.5])),
            ],
            Subtask::VisualClosure => vec![
                ("full_edges_removed", ints(&[1, 3])),
                ("partial_edges_removed", ints(&[1, 3])),
                ("edges_distorted", ints(&[1, 3])),
                ("distortion_factor", floats(&[0.1, 0.12, 0.14])),
            ],
            Subtask::LimitsRotation => vec![
                ("square_size", ints(&[7, 14, 28, 56, 112])),
                ("rotation", ints(&[0, 1, 2, 3, 4])),
            ],
            Subtask::LimitsCount => vec![
                ("number_of_rectangles", ints(&[2, 3, 4, 5, 6, 7, 8])),
                ("scaling_factor", floats(&[0.1, 0.3, 0.5, 0.7, 0.9])),
            ],
        };
        entries
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }
}

impl fmt::Display for Subtask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subtask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subtask::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown subtask {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    Integer,
    Text,
    Mcq4,
    YesNo,
}

/// A ground-truth answer in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Integer(u64),
    Text(String),
    Mcq(u8),
    YesNo(bool),
}

impl Answer {
    pub fn kind(&self) -> AnswerKind {
        match self {
            Answer::Integer(_) => AnswerKind::Integer,
            Answer::Text(_) => AnswerKind::Text,
            Answer::Mcq(_) => AnswerKind::Mcq4,
            Answer::YesNo(_) => AnswerKind::YesNo,
        }
    }

    /// Canonical text: `7`, `ABC`, `3`, `yes`.
    pub fn render(&self) -> String {
        match self {
            Answer::Integer(n) => n.to_string(),
            Answer::Text(s) => s.clone(),
            Answer::Mcq(n) => n.to_string(),
            Answer::YesNo(true) => "yes".to_string(),
            Answer::YesNo(false) => "no".to_string(),
        }
    }

    /// Inverse of [`Answer::render`] for a known kind.
    pub fn parse(kind: AnswerKind, text: &str) -> Result<Answer> {
        let bad = || Error::invalid(format!("{text:?} is not a canonical {kind:?} answer"));
        match kind {
            AnswerKind::Integer => text.parse().map(Answer::Integer).map_err(|_| bad()),
            AnswerKind::Mcq4 => match text.parse::<u8>() {
                Ok(n @ 1..=4) => Ok(Answer::Mcq(n)),
                _ => Err(bad()),
            },
            AnswerKind::Text => {
                if !text.is_empty() && text.chars().all(|c| c.is_ascii_uppercase()) {
                    Ok(Answer::Text(text.to_string()))
                } else {
                    Err(bad())
                }
            }
            AnswerKind::YesNo => match text {
                "yes" => Ok(Answer::YesNo(true)),
                "no" => Ok(Answer::YesNo(false)),
                _ => Err(bad()),
            },
        }
    }
}

/// One control-parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Float(v) => Some(*v),
            ParamValue::Text(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            ParamValue::Float(v) if v.fract() == 0.0 => Some(*v as i64),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

pub type ParamMap = BTreeMap<String, ParamValue>;

/// `a=1;b=0.1` over sorted keys; identifies a parameter combination.
pub fn combo_key(params: &ParamMap) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub(crate) fn check_param_keys(subtask: Subtask, params: &ParamMap) -> Result<()> {
    let want = subtask.param_names();
    let got: Vec<&str> = params.keys().map(String::as_str).collect();
    if got != want {
        return Err(Error::invalid(format!(
            "{subtask} expects parameters {want:?}, got {got:?}"
        )));
    }
    Ok(())
}

pub(crate) fn param_i64(params: &ParamMap, name: &str) -> Result<i64> {
    params
        .get(name)
        .and_then(ParamValue::as_i64)
        .ok_or_else(|| Error::invalid(format!("parameter {name} must be an integer")))
}

pub(crate) fn param_f64(params: &ParamMap, name: &str) -> Result<f64> {
    params
        .get(name)
        .and_then(ParamValue::as_f64)
        .ok_or_else(|| Error::invalid(format!("parameter {name} must be numeric")))
}

pub(crate) fn param_text<'a>(params: &'a ParamMap, name: &str) -> Result<&'a str> {
    match params.get(name) {
        Some(ParamValue::Text(s)) => Ok(s),
        _ => Err(Error::invalid(format!("parameter {name} must be text"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridShape {
    Circle,
    Square,
    Triangle,
}

impl GridShape {
    pub const ALL: [GridShape; 3] = [GridShape::Circle, GridShape::Square, GridShape::Triangle];

    pub fn name(self) -> &'static str {
        match self {
            GridShape::Circle => "circle",
            GridShape::Square => "square",
            GridShape::Triangle => "triangle",
        }
    }

    pub fn plural(self) -> &'static str {
        match self {
            GridShape::Circle => "circles",
            GridShape::Square => "squares",
            GridShape::Triangle => "triangles",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub shape: GridShape,
    pub solid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Above,
    Below,
    LeftOf,
    RightOf,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Above,
        Direction::Below,
        Direction::LeftOf,
        Direction::RightOf,
    ];

    /// (row step, column step).
    pub fn step(self) -> (i64, i64) {
        match self {
            Direction::Above => (-1, 0),
            Direction::Below => (1, 0),
            Direction::LeftOf => (0, -1),
            Direction::RightOf => (0, 1),
        }
    }
}

/// Row-major cell matrix.
pub type GridMatrix = Vec<Vec<GridCell>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridQuestion {
    /// 0-based grid index.
    pub grid: usize,
    /// 0-based (row, column) of the reference cell.
    pub reference: (usize, usize),
    pub direction: Direction,
    pub target: GridCell,
}

/// One applied distractor change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    Scale(f64),
    Rotate(f64),
    Stretch(f64),
    Substitute { from: ShapeKind, to: ShapeKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alteration {
    /// Index of the altered primitive within the pattern.
    pub primitive: usize,
    pub change: Change,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeState {
    Full,
    /// Only the half touching the lower-indexed endpoint is drawn.
    Half,
    Removed,
}

/// Outline as a closed vertex loop plus per-edge visibility. Edge `i` runs
/// from vertex `i` to vertex `(i + 1) % n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlineFigure {
    pub kind: ShapeKind,
    pub vertices: Vec<Point>,
    pub edges: Vec<EdgeState>,
}

impl OutlineFigure {
    /// Vertices touched by at least one drawn edge part.
    pub fn retained_vertices(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let mut keep = vec![false; n];
        for (i, e) in self.edges.iter().enumerate() {
            let j = (i + 1) % n;
            match e {
                EdgeState::Full => {
                    keep[i] = true;
                    keep[j] = true;
                }
                EdgeState::Half => keep[i.min(j)] = true,
                EdgeState::Removed => {}
            }
        }
        (0..n).filter(|&i| keep[i]).collect()
    }

    /// Drawn segments in edge order.
    pub fn segments(&self) -> Vec<(Point, Point)> {
        let n = self.vertices.len();
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| {
                let j = (i + 1) % n;
                let (a, b) = (self.vertices[i], self.vertices[j]);
                match e {
                    EdgeState::Full => Some((a, b)),
                    EdgeState::Half => {
                        let (lo, hi) = if i < j { (a, b) } else { (b, a) };
                        Some((lo, lo.lerp(hi, 0.5)))
                    }
                    EdgeState::Removed => None,
                }
            })
            .collect()
    }
}

/// The structured record a stimulus was drawn from; ground truth is always
/// derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum InstanceRecord {
    Counting {
        scene: Scene,
        query: ShapeQuery,
    },
    Letters {
        scene: Scene,
        letters: String,
    },
    Choice {
        target: Scene,
        options: Vec<Scene>,
        /// 1-based.
        correct: u8,
        /// Per option; `None` for the correct one.
        alterations: Vec<Option<Alteration>>,
    },
    Closure {
        target: OutlineFigure,
        options: Vec<OutlineFigure>,
        correct: u8,
        /// Target circumradius; distortions move vertices by `factor * radius`.
        radius: f64,
    },
    Grid {
        grids: Vec<GridMatrix>,
        question: GridQuestion,
    },
    RotationProbe {
        left: Polygon,
        right: Polygon,
        theta: f64,
    },
    CountProbe {
        scene: Scene,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    pub subtask: Subtask,
    pub images: Vec<SvgDoc>,
    pub question: String,
    pub answer_kind: AnswerKind,
    pub ground_truth: Answer,
    pub params: ParamMap,
    pub seed: u64,
    pub record: InstanceRecord,
}

impl TaskInstance {
    pub fn default_id(subtask: Subtask, seed: u64) -> String {
        format!("{}-{seed:016x}", subtask.name())
    }

    pub fn options_count(&self) -> usize {
        match &self.record {
            InstanceRecord::Choice { options, .. } => options.len(),
            InstanceRecord::Closure { options, .. } => options.len(),
            _ => 0,
        }
    }
}
