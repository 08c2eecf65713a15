//! Subtask generators: control parameters and a seed in, a [`TaskInstance`] out.

pub mod closure;
pub mod color;
pub mod figure_ground;
pub mod form_constancy;
pub mod letter;
pub mod patterns;
pub mod shapes;
pub mod spatial_grid;

use crate::error::Result;
use crate::limits;
use crate::svg::SvgDoc;
use crate::task::{check_param_keys, Answer, InstanceRecord, ParamMap, Subtask, TaskInstance};

/// Generates one instance of `subtask` from a parameter map whose keys must
/// be exactly the subtask's declared parameters.
pub fn generate(subtask: Subtask, params: &ParamMap, seed: u64) -> Result<TaskInstance> {
    check_param_keys(subtask, params)?;
    match subtask {
        Subtask::ShapeDiscrimination => shapes::generate(&shapes::Params::from_map(params)?, seed),
        Subtask::JointShapeColor => color::generate(&color::Params::from_map(params)?, seed),
        Subtask::Letter => letter::generate(&letter::Params::from_map(params)?, seed),
        Subtask::FormConstancy => {
            form_constancy::generate(&form_constancy::Params::from_map(params)?, seed)
        }
        Subtask::SpatialGrid => spatial_grid::generate(&spatial_grid::Params::from_map(params)?, seed),
        Subtask::FigureGround => figure_ground::generate(&figure_ground::Params::from_map(params)?, seed),
        Subtask::VisualClosure => closure::generate(&closure::Params::from_map(params)?, seed),
        Subtask::LimitsRotation => {
            limits::gen_rotation_probe(&limits::RotationParams::from_map(params)?, seed)
        }
        Subtask::LimitsCount => limits::gen_count_probe(&limits::CountParams::from_map(params)?, seed),
    }
}

pub(crate) fn assemble(
    subtask: Subtask,
    params: ParamMap,
    seed: u64,
    images: Vec<SvgDoc>,
    question: String,
    ground_truth: Answer,
    record: InstanceRecord,
) -> TaskInstance {
    TaskInstance {
        id: TaskInstance::default_id(subtask, seed),
        subtask,
        images,
        question,
        answer_kind: subtask.answer_kind(),
        ground_truth,
        params,
        seed,
        record,
    }
}
