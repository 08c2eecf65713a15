//! Letter disambiguation: uppercase letters drawn as 5x7 grids of gray
//! blocks on a gray background.

use crate::error::{Error, Result};
use crate::geometry::{rectangle, Point};
use crate::glyphs::{glyph, GLYPH_COLUMNS, GLYPH_ROWS};
use crate::prompts;
use crate::rng::SplitMix64;
use crate::scene::{Canvas, Paint, PlacedShape, Scene, ShapeStyle};
use crate::svg::render_scene;
use crate::task::{param_f64, param_i64, Answer, InstanceRecord, ParamMap, ParamValue, Subtask};
use crate::TaskInstance;

pub const MAX_LETTERS: usize = 9;

/// Reference length that `block_size` is a fraction of.
pub const REFERENCE_SIDE: f64 = 448.0;

/// Relative luminance of the background.
pub const BACKGROUND_LUMINANCE: f64 = 0.80;

/// Foreground/background luminance gap per contrast level 1, 2, 3.
pub const LUMINANCE_GAPS: [f64; 3] = [0.08, 0.25, 0.60];

/// Layout in block pitches.
const MARGIN_PITCHES: f64 = 2.0;
const LETTER_GAP_PITCHES: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub number_of_letters: usize,
    /// Contrast level 1 (faint) to 3 (strong).
    pub contrast: u8,
    /// Block pitch as a fraction of [`REFERENCE_SIDE`].
    pub block_size: f64,
}

/// Generator settings that are not sweep parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LetterConfig {
    /// Fraction of each block pitch left empty between blocks.
    pub block_spacing: f64,
}

impl Default for LetterConfig {
    fn default() -> Self {
        Self { block_spacing: 0.2 }
    }
}

impl Params {
    pub fn from_map(m: &ParamMap) -> Result<Self> {
        let n = param_i64(m, "number_of_letters")?;
        let c = param_i64(m, "contrast")?;
        let b = param_f64(m, "block_size")?;
        if !(1..=MAX_LETTERS as i64).contains(&n) {
            return Err(Error::invalid(format!("number_of_letters must be in 1..=9, got {n}")));
        }
        if !(1..=3).contains(&c) {
            return Err(Error::invalid(format!("contrast must be 1, 2 or 3, got {c}")));
        }
        if !(b > 0.0 && b <= 0.25) {
            return Err(Error::invalid(format!("block_size must be in (0, 0.25], got {b}")));
        }
        Ok(Self {
            number_of_letters: n as usize,
            contrast: c as u8,
            block_size: b,
        })
    }

    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("number_of_letters".into(), ParamValue::Int(self.number_of_letters as i64));
        m.insert("contrast".into(), ParamValue::Int(i64::from(self.contrast)));
        m.insert("block_size".into(), ParamValue::Float(self.block_size));
        m
    }
}

/// 8-bit sRGB level for a relative luminance in [0, 1].
pub fn srgb_level(luminance: f64) -> u8 {
    let l = luminance.clamp(0.0, 1.0);
    let v = if l <= 0.003_130_8 {
        12.92 * l
    } else {
        1.055 * l.powf(1.0 / 2.4) - 0.055
    };
    (v * 255.0).round() as u8
}

/// (foreground, background) gray levels for a contrast level.
pub fn contrast_grays(level: u8) -> Result<(u8, u8)> {
    let gap = match level {
        1..=3 => LUMINANCE_GAPS[level as usize - 1],
        _ => return Err(Error::invalid(format!("contrast level {level} not in 1..=3"))),
    };
    Ok((
        srgb_level(BACKGROUND_LUMINANCE - gap),
        srgb_level(BACKGROUND_LUMINANCE),
    ))
}

pub fn generate(p: &Params, seed: u64) -> Result<TaskInstance> {
    generate_with(p, LetterConfig::default(), seed)
}

pub fn generate_with(p: &Params, config: LetterConfig, seed: u64) -> Result<TaskInstance> {
    let mut rng = SplitMix64::new(seed).child(0);
    let letters: String = rng
        .sample_indices(26, p.number_of_letters)
        .into_iter()
        .map(|i| (b'A' + i as u8) as char)
        .collect();
    letters_instance(&letters, p, config, seed)
}

/// Renders a fixed letter string.
pub fn letters_instance(
    letters: &str,
    p: &Params,
    config: LetterConfig,
    seed: u64,
) -> Result<TaskInstance> {
    let n = letters.chars().count();
    if n == 0 || n > MAX_LETTERS {
        return Err(Error::invalid(format!("letter count must be in 1..=9, got {n}")));
    }
    if !(0.0..1.0).contains(&config.block_spacing) {
        return Err(Error::invalid("block_spacing must be in [0, 1)"));
    }
    let (fg, bg) = contrast_grays(p.contrast)?;
    let pitch = p.block_size * REFERENCE_SIDE;
    let letter_w = GLYPH_COLUMNS as f64 * pitch;
    let width = 2.0 * MARGIN_PITCHES * pitch
        + n as f64 * letter_w
        + (n - 1) as f64 * LETTER_GAP_PITCHES * pitch;
    let height = (2.0 * MARGIN_PITCHES + GLYPH_ROWS as f64) * pitch;
    let mut scene = Scene::empty(Canvas::new(width, height, 0.0));
    scene.background = Paint::Gray(bg);
    scene.seed = seed;
    let side = pitch * (1.0 - config.block_spacing);
    let style = ShapeStyle::filled(Paint::Gray(fg));
    for (i, ch) in letters.chars().enumerate() {
        let g = glyph(ch).ok_or_else(|| Error::invalid(format!("no glyph for {ch:?}")))?;
        let left = MARGIN_PITCHES * pitch + i as f64 * (letter_w + LETTER_GAP_PITCHES * pitch);
        for (r, c) in g.cells() {
            let center = Point::new(
                left + (c as f64 + 0.5) * pitch,
                MARGIN_PITCHES * pitch + (r as f64 + 0.5) * pitch,
            );
            scene
                .shapes
                .push(PlacedShape::new(rectangle(center, side, side, 0.0)?, style));
        }
    }
    let question = prompts::question(Subtask::Letter, &[])?;
    Ok(super::assemble(
        Subtask::Letter,
        p.to_map(),
        seed,
        vec![render_scene(&scene)],
        question,
        Answer::Text(letters.to_string()),
        InstanceRecord::Letters {
            scene,
            letters: letters.to_string(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, c: u8, b: f64) -> Params {
        Params {
            number_of_letters: n,
            contrast: c,
            block_size: b,
        }
    }

    #[test]
    fn single_a() {
        let inst = letters_instance("A", &p(1, 3, 0.08), LetterConfig::default(), 1).unwrap();
        assert_eq!(inst.ground_truth, Answer::Text("A".into()));
        let InstanceRecord::Letters { scene, .. } = &inst.record else { panic!() };
        assert_eq!(scene.shapes.len(), glyph('A').unwrap().cells().len());
        scene.check_invariants().unwrap();
    }

    #[test]
    fn distinct_letters_and_count() {
        for seed in 0..50 {
            let inst = generate(&p(9, 2, 0.04), seed).unwrap();
            let Answer::Text(s) = &inst.ground_truth else { panic!() };
            let set: std::collections::BTreeSet<char> = s.chars().collect();
            assert_eq!((s.len(), set.len()), (9, 9));
        }
    }

    #[test]
    fn contrast_orders_gaps() {
        let gaps: Vec<i32> = (1..=3)
            .map(|l| {
                let (f, b) = contrast_grays(l).unwrap();
                i32::from(b) - i32::from(f)
            })
            .collect();
        assert!(gaps[0] > 0 && gaps[0] < gaps[1] && gaps[1] < gaps[2]);
        assert_eq!(srgb_level(1.0), 255);
        assert_eq!(srgb_level(0.0), 0);
    }

    #[test]
    fn too_many_letters_rejected() {
        let mut m = p(1, 1, 0.1).to_map();
        m.insert("number_of_letters".into(), ParamValue::Int(10));
        assert!(Params::from_map(&m).is_err());
        assert!(letters_instance("ABCDEFGHIJ", &p(9, 1, 0.1), LetterConfig::default(), 0).is_err());
    }

    #[test]
    fn blocks_do_not_overlap_between_letters() {
        let inst = letters_instance("MW", &p(2, 3, 0.1), LetterConfig::default(), 0).unwrap();
        let InstanceRecord::Letters { scene, .. } = &inst.record else { panic!() };
        let m_max = scene.shapes[..glyph('M').unwrap().cells().len()]
            .iter()
            .map(|s| s.polygon.bounds().max.x)
            .fold(0.0, f64::max);
        let w_min = scene.shapes[glyph('M').unwrap().cells().len()..]
            .iter()
            .map(|s| s.polygon.bounds().min.x)
            .fold(f64::INFINITY, f64::min);
        assert!(w_min > m_max);
    }
}
