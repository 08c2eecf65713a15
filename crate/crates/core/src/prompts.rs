//! Prompt catalog. Templates live as text files under `prompts/` and use
//! `{name}` placeholders.

use crate::error::{Error, Result};
use crate::task::Subtask;

pub const EVALUATOR: &str = include_str!("../prompts/evaluator.txt");

pub fn template(subtask: Subtask) -> &'static str {
    match subtask {
        Subtask::ShapeDiscrimination => include_str!("../prompts/shape_discrimination.txt"),
        Subtask::JointShapeColor => include_str!("../prompts/joint_shape_color.txt"),
        Subtask::Letter => include_str!("../prompts/letter.txt"),
        Subtask::FormConstancy => include_str!("../prompts/form_constancy.txt"),
        Subtask::SpatialGrid => include_str!("../prompts/spatial_grid.txt"),
        Subtask::FigureGround => include_str!("../prompts/figure_ground.txt"),
        Subtask::VisualClosure => include_str!("../prompts/visual_closure.txt"),
        Subtask::LimitsRotation => include_str!("../prompts/limits_rotation.txt"),
        Subtask::LimitsCount => include_str!("../prompts/limits_count.txt"),
    }
}

/// Fills every `{name}` placeholder; unknown or leftover placeholders are
/// an error.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> Result<String> {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| Error::invalid("unterminated placeholder in template"))?;
        let name = &rest[open + 1..open + close];
        let value = vars
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::invalid(format!("no value for placeholder {{{name}}}")))?;
        out.push_str(value);
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    Ok(out.trim_end().to_string())
}

/// Question text for a subtask.
pub fn question(subtask: Subtask, vars: &[(&str, &str)]) -> Result<String> {
    fill(template(subtask), vars)
}
