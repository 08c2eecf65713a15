//! Form constancy: pick the option identical to the target pattern among
//! distractors with one scaled, rotated, stretched or substituted primitive.

use super::patterns::{build_options, make_pattern, ChangeKind, PatternConfig};
use crate::error::{Error, Result};
use crate::prompts;
use crate::rng::SplitMix64;
use crate::svg::render_option_panel;
use crate::task::{param_f64, param_i64, Answer, InstanceRecord, ParamMap, ParamValue, Subtask};
use crate::TaskInstance;

pub const PRIMITIVE_COUNT: (usize, usize) = (3, 5);
pub const SIZE_RANGE: (f64, f64) = (30.0, 55.0);
pub const SEPARATION: f64 = 24.0;
pub const PLACEMENT_MARGIN: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// 1: one distractor substitutes a primitive instead of transforming it.
    pub shape_substitution: u8,
    pub scaling_factor: f64,
    /// Degrees.
    pub rotation_factor: f64,
    pub aspect_ratio: f64,
}

impl Params {
    pub fn from_map(m: &ParamMap) -> Result<Self> {
        let ssf = param_i64(m, "shape_substitution")?;
        if !(0..=1).contains(&ssf) {
            return Err(Error::invalid(format!("shape_substitution must be 0 or 1, got {ssf}")));
        }
        let p = Self {
            shape_substitution: ssf as u8,
            scaling_factor: param_f64(m, "scaling_factor")?,
            rotation_factor: param_f64(m, "rotation_factor")?,
            aspect_ratio: param_f64(m, "aspect_ratio")?,
        };
        if !(p.scaling_factor > 0.0 && p.aspect_ratio > 0.0) {
            return Err(Error::invalid("scaling_factor and aspect_ratio must be > 0"));
        }
        Ok(p)
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("shape_substitution".into(), ParamValue::Int(i64::from(self.shape_substitution)));
        m.insert("scaling_factor".into(), ParamValue::Float(self.scaling_factor));
        let r = self.rotation_factor;
        let rv = if r.fract() == 0.0 { ParamValue::Int(r as i64) } else { ParamValue::Float(r) };
        m.insert("rotation_factor".into(), rv);
        m.insert("aspect_ratio".into(), ParamValue::Float(self.aspect_ratio));
        m
    }
}

pub fn generate(p: &Params, seed: u64) -> Result<TaskInstance> {
    let root = SplitMix64::new(seed);
    let mut rng = root.child(0);
    let config = PatternConfig {
        count: rng.range_inclusive(PRIMITIVE_COUNT.0 as u64, PRIMITIVE_COUNT.1 as u64) as usize,
        size_range: SIZE_RANGE,
        d_sep: SEPARATION,
        placement_margin: PLACEMENT_MARGIN,
    };
    let target = make_pattern(&config, root.child(1).next_u64())?;
    let mut kinds = [
        ChangeKind::Scale(p.scaling_factor),
        ChangeKind::Rotate(p.rotation_factor),
        ChangeKind::Stretch(p.aspect_ratio),
    ];
    rng.shuffle(&mut kinds);
    if p.shape_substitution == 1 {
        kinds[rng.below(3) as usize] = ChangeKind::Substitute;
    }
    let (options, correct, alterations) = build_options(&target, &kinds, &mut rng)?;
    let panel = render_option_panel(&target, &options)?;
    Ok(super::assemble(
        Subtask::FormConstancy,
        p.to_map(),
        seed,
        vec![panel],
        prompts::question(Subtask::FormConstancy, &[])?,
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
    use crate::task::Change;

    #[test]
    fn substitution_only_when_requested() {
        for ssf in [0u8, 1] {
            for seed in 0..30 {
                let p = Params {
                    shape_substitution: ssf,
                    scaling_factor: 1.4,
                    rotation_factor: 50.0,
                    aspect_ratio: 0.8,
                };
                let inst = generate(&p, seed).unwrap();
                let InstanceRecord::Choice { target, options, correct, alterations } = &inst.record
                else {
                    panic!()
                };
                let subs = alterations
                    .iter()
                    .flatten()
                    .filter(|a| matches!(a.change, Change::Substitute { .. }))
                    .count();
                if ssf == 0 {
                    assert_eq!(subs, 0);
                } else {
                    assert!(subs >= 1);
                }
                assert!(figure_distance(&options[*correct as usize - 1], target) < 1e-6);
            }
        }
    }
}
