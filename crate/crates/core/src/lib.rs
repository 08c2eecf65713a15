//! Seeded generation of visual-perception stimuli with machine-derived
//! ground truth, answer scoring, and parameter-importance statistics.
//!
//! Everything that produces stimuli is a pure function of its parameters
//! and a 64-bit seed. The [`scene::Scene`] (or the subtask's structured
//! record) is the single source of truth; SVG text is derived from it.

pub mod analysis;
pub mod client;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod glyphs;
pub mod limits;
pub mod prompts;
pub mod rng;
pub mod scene;
pub mod study;
pub mod subtask;
pub mod svg;
pub mod task;

pub use error::{Error, Result};
pub use geometry::{Point, Polygon, ShapeKind, Transform};
pub use scene::{Canvas, Scene};
pub use subtask::generate;
pub use svg::SvgDoc;
pub use task::{Answer, AnswerKind, ParamMap, ParamValue, Subtask, TaskInstance};
