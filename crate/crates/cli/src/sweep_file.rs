//! Declarative sweep files (TOML).
//!
//! ```toml
//! preset = "benchmark"        # or "limits" or "none"; default "benchmark"
//! instances_per_combo = 2
//! base_seed = 0
//!
//! [[sweep]]
//! subtask = "shape_discrimination"
//! instances_per_combo = 4     # optional override
//! [sweep.grid]                # optional; keys replace the default grid's
//! number_of_shapes = [3, 5]
//! ```
//!
//! A `[[sweep]]` entry for a subtask already in the preset replaces it.

use std::collections::BTreeMap;
use std::path::Path;

use perceptkit::dataset::{default_benchmark_specs, default_limits_specs, SweepSpec};
use perceptkit::{Error, ParamValue, Result, Subtask};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Benchmark,
    Limits,
    All,
    None,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub subtask: Subtask,
    #[serde(default)]
    pub instances_per_combo: Option<usize>,
    #[serde(default)]
    pub base_seed: Option<u64>,
    #[serde(default)]
    pub grid: BTreeMap<String, Vec<ParamValue>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default)]
    pub preset: Preset,
    #[serde(default = "default_instances")]
    pub instances_per_combo: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub sweep: Vec<SweepEntry>,
}

fn default_instances() -> usize {
    2
}

impl Default for SweepFile {
    fn default() -> Self {
        Self {
            preset: Preset::Benchmark,
            instances_per_combo: default_instances(),
            base_seed: 0,
            sweep: Vec::new(),
        }
    }
}

impl SweepFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| 1 + text[..s.start].matches('\n').count()),
            message: e.message().to_string(),
        })
    }

    /// Resolves to concrete sweeps. `seed` and `instances`, when given,
    /// override the file's top-level values and every entry's.
    pub fn resolve(&self, seed: Option<u64>, instances: Option<usize>) -> Result<Vec<SweepSpec>> {
        let k = instances.unwrap_or(self.instances_per_combo);
        let base = seed.unwrap_or(self.base_seed);
        let mut specs = match self.preset {
            Preset::Benchmark => default_benchmark_specs(k, base),
            Preset::Limits => default_limits_specs(k, base),
            Preset::All => {
                let mut v = default_benchmark_specs(k, base);
                v.extend(default_limits_specs(k, base));
                v
            }
            Preset::None => Vec::new(),
        };
        for entry in &self.sweep {
            let mut spec = SweepSpec::default_for(
                entry.subtask,
                instances.or(entry.instances_per_combo).unwrap_or(k),
                seed.or(entry.base_seed).unwrap_or(base),
            );
            for (key, values) in &entry.grid {
                spec.grid.insert(key.clone(), values.clone());
            }
            spec.validate()?;
            match specs.iter_mut().find(|s| s.subtask == entry.subtask) {
                Some(existing) => *existing = spec,
                None => specs.push(spec),
            }
        }
        if specs.is_empty() {
            return Err(Error::InvalidArgument("sweep file selects no subtasks".into()));
        }
        Ok(specs)
    }
}
