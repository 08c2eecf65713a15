//! Parameter sweeps, on-disk dataset layout and the JSONL manifest.
//!
//! Layout under a dataset root:
//!
//! ```text
//! <root>/manifest.jsonl
//! <root>/images/<subtask>/<id>.svg
//! ```
//!
//! Each manifest line is one compact JSON object with keys sorted at every
//! level. Instances with several images name them `<id>-<n>.svg`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::rng::stable_hash;
use crate::subtask;
use crate::task::{combo_key, Answer, AnswerKind, ParamMap, ParamValue, Subtask, TaskInstance};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const IMAGES_DIR: &str = "images";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub subtask: Subtask,
    pub grid: BTreeMap<String, Vec<ParamValue>>,
    pub instances_per_combo: usize,
    pub base_seed: u64,
}

impl SweepSpec {
    /// The subtask's default grid.
    pub fn default_for(subtask: Subtask, instances_per_combo: usize, base_seed: u64) -> Self {
        Self {
            subtask,
            grid: subtask.default_grid(),
            instances_per_combo,
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let keys: Vec<&str> = self.grid.keys().map(String::as_str).collect();
        if keys != self.subtask.param_names() {
            return Err(Error::invalid(format!(
                "{} sweep must set exactly {:?}, got {keys:?}",
                self.subtask,
                self.subtask.param_names()
            )));
        }
        if let Some((k, _)) = self.grid.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::invalid(format!("{} sweep: no values for {k}", self.subtask)));
        }
        if self.instances_per_combo == 0 {
            return Err(Error::invalid("instances_per_combo must be >= 1"));
        }
        Ok(())
    }

    pub fn combo_count(&self) -> usize {
        self.grid.values().map(Vec::len).product()
    }

    pub fn question_count(&self) -> usize {
        self.combo_count() * self.instances_per_combo
    }
}

/// Default sweeps for the seven benchmark subtasks.
pub fn default_benchmark_specs(instances_per_combo: usize, base_seed: u64) -> Vec<SweepSpec> {
    Subtask::BENCHMARK
        .iter()
        .map(|&s| SweepSpec::default_for(s, instances_per_combo, base_seed))
        .collect()
}

/// Default sweeps for the two limits probes.
pub fn default_limits_specs(instances_per_combo: usize, base_seed: u64) -> Vec<SweepSpec> {
    [Subtask::LimitsRotation, Subtask::LimitsCount]
        .iter()
        .map(|&s| SweepSpec::default_for(s, instances_per_combo, base_seed))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepItem {
    pub subtask: Subtask,
    pub params: ParamMap,
    pub replicate: usize,
    pub seed: u64,
}

/// Seed of one sweep item; depends only on its own coordinates so adding
/// combinations never moves other items.
pub fn item_seed(base_seed: u64, subtask: Subtask, params: &ParamMap, replicate: usize) -> u64 {
    let key = format!("{base_seed}|{}|{}|{replicate}", subtask.name(), combo_key(params));
    stable_hash(key.as_bytes())
}

/// Cartesian product in lexicographic key order (last key fastest), each
/// combination repeated `instances_per_combo` times.
pub fn enumerate_sweep(spec: &SweepSpec) -> Result<Vec<SweepItem>> {
    if let Some((k, _)) = spec.grid.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::invalid(format!("empty value list for {k}")));
    }
    if spec.instances_per_combo == 0 {
        return Err(Error::invalid("instances_per_combo must be >= 1"));
    }
    let keys: Vec<&String> = spec.grid.keys().collect();
    let mut combos: Vec<ParamMap> = vec![ParamMap::new()];
    for k in &keys {
        let values = &spec.grid[*k];
        combos = combos
            .into_iter()
            .flat_map(|base| {
                values.iter().map(move |v| {
                    let mut m = base.clone();
                    m.insert((*k).clone(), v.clone());
                    m
                })
            })
            .collect();
    }
    let mut out = Vec::with_capacity(combos.len() * spec.instances_per_combo);
    for params in combos {
        for replicate in 0..spec.instances_per_combo {
            out.push(SweepItem {
                subtask: spec.subtask,
                seed: item_seed(spec.base_seed, spec.subtask, &params, replicate),
                params: params.clone(),
                replicate,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub subtask: Subtask,
    pub params: ParamMap,
    /// Relative to the dataset root, `/`-separated.
    pub image_paths: Vec<String>,
    pub question: String,
    pub answer_kind: AnswerKind,
    /// Canonical text of the answer (see [`Answer::render`]).
    pub ground_truth: String,
    /// 4 for multiple-choice items, 0 otherwise.
    pub options_count: usize,
    pub seed: u64,
}

impl ManifestRecord {
    pub fn from_instance(inst: &TaskInstance) -> Self {
        Self {
            id: inst.id.clone(),
            subtask: inst.subtask,
            params: inst.params.clone(),
            image_paths: image_paths(inst),
            question: inst.question.clone(),
            answer_kind: inst.answer_kind,
            ground_truth: inst.ground_truth.render(),
            options_count: inst.options_count(),
            seed: inst.seed,
        }
    }

    pub fn answer(&self) -> Result<Answer> {
        Answer::parse(self.answer_kind, &self.ground_truth)
    }

    pub fn combo_key(&self) -> String {
        combo_key(&self.params)
    }
}

pub fn image_paths(inst: &TaskInstance) -> Vec<String> {
    let dir = format!("{IMAGES_DIR}/{}", inst.subtask.name());
    if inst.images.len() == 1 {
        vec![format!("{dir}/{}.svg", inst.id)]
    } else {
        (0..inst.images.len())
            .map(|i| format!("{dir}/{}-{}.svg", inst.id, i + 1))
            .collect()
    }
}

/// Recursively rebuilds objects with sorted keys.
pub fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// One compact, key-sorted JSON line (without the newline).
pub fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(&sort_keys(serde_json::to_value(value)?))?)
}

/// Parses a JSONL file; blank lines are skipped, errors carry the 1-based
/// line number.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&to_json_line(item)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn append_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut out = String::new();
    for item in items {
        out.push_str(&to_json_line(item)?);
        out.push('\n');
    }
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let unique = COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp = path.with_file_name(format!(".{name}.{}.{unique}.tmp", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn manifest_path(root: &Path) -> PathBuf {
    root.join(MANIFEST_FILE)
}

fn check_unique(records: &[ManifestRecord]) -> Result<()> {
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::invalid(format!("duplicate manifest id {}", r.id)));
        }
    }
    Ok(())
}

pub fn write_manifest(records: &[ManifestRecord], root: &Path) -> Result<PathBuf> {
    check_unique(records)?;
    let path = manifest_path(root);
    write_jsonl(&path, records)?;
    Ok(path)
}

/// Reads `<root>/manifest.jsonl`, or the file itself when given a path to
/// a file.
pub fn read_manifest(root: &Path) -> Result<Vec<ManifestRecord>> {
    let path = if root.is_file() {
        root.to_path_buf()
    } else {
        manifest_path(root)
    };
    let records: Vec<ManifestRecord> = read_jsonl(&path)?;
    check_unique(&records)?;
    Ok(records)
}

/// Directory that manifest image paths are relative to.
pub fn dataset_root(manifest: &Path) -> PathBuf {
    if manifest.is_file() {
        manifest.parent().map(Path::to_path_buf).unwrap_or_default()
    } else {
        manifest.to_path_buf()
    }
}

/// Generates one sweep item, tagging failures with the item's coordinates.
pub fn generate_item(item: &SweepItem) -> Result<TaskInstance> {
    subtask::generate(item.subtask, &item.params, item.seed).map_err(|e| {
        e.context(format!(
            "{} [{}] replicate {} seed {:#018x}",
            item.subtask,
            combo_key(&item.params),
            item.replicate,
            item.seed
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSummary {
    /// Questions per subtask, in sweep order.
    pub counts: Vec<(Subtask, usize)>,
    pub total: usize,
    pub manifest: PathBuf,
}

/// Generates every sweep, writes images and the manifest. Items generate
/// in parallel on up to `parallel` threads; output order and bytes do not
/// depend on the thread count.
pub fn generate_dataset(specs: &[SweepSpec], root: &Path, parallel: usize) -> Result<DatasetSummary> {
    let mut items = Vec::new();
    let mut counts = Vec::new();
    for spec in specs {
        spec.validate()?;
        let these = enumerate_sweep(spec)?;
        counts.push((spec.subtask, these.len()));
        items.extend(these);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| Error::Setup(format!("thread pool: {e}")))?;
    let records: Vec<ManifestRecord> = pool.install(|| {
        items
            .par_iter()
            .map(|item| {
                let inst = generate_item(item)?;
                let record = ManifestRecord::from_instance(&inst);
                for (rel, doc) in record.image_paths.iter().zip(&inst.images) {
                    write_atomic(&root.join(rel), doc.text.as_bytes())?;
                }
                Ok(record)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let manifest = write_manifest(&records, root)?;
    Ok(DatasetSummary {
        total: records.len(),
        counts,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_by_two() {
        let mut grid = BTreeMap::new();
        grid.insert("a".to_string(), vec![ParamValue::Int(1), ParamValue::Int(2)]);
        grid.insert(
            "b".to_string(),
            vec![ParamValue::Text("x".into()), ParamValue::Text("y".into())],
        );
        let spec = SweepSpec {
            subtask: Subtask::Letter,
            grid,
            instances_per_combo: 2,
            base_seed: 9,
        };
        let items = enumerate_sweep(&spec).unwrap();
        assert_eq!(items.len(), 8);
        assert_eq!(items, enumerate_sweep(&spec).unwrap());
        assert_eq!(combo_key(&items[0].params), "a=1;b=x");
        assert_eq!(combo_key(&items[2].params), "a=1;b=y");
        let seeds: HashSet<u64> = items.iter().map(|i| i.seed).collect();
        assert_eq!(seeds.len(), 8);
    }

    #[test]
    fn empty_values_rejected() {
        let mut spec = SweepSpec::default_for(Subtask::Letter, 1, 0);
        spec.grid.get_mut("contrast").unwrap().clear();
        assert!(enumerate_sweep(&spec).is_err());
    }

    #[test]
    fn default_combo_counts() {
        let combos: Vec<(Subtask, usize)> = default_benchmark_specs(1, 0)
            .iter()
            .map(|s| (s.subtask, s.combo_count()))
            .collect();
        let want = [
            (Subtask::FigureGround, 9),
            (Subtask::SpatialGrid, 27),
            (Subtask::JointShapeColor, 9),
            (Subtask::ShapeDiscrimination, 60),
            (Subtask::Letter, 27),
            (Subtask::FormConstancy, 54),
            (Subtask::VisualClosure, 24),
        ];
        assert_eq!(combos, want);
    }

    #[test]
    fn adding_a_value_keeps_other_seeds() {
        let spec = SweepSpec::default_for(Subtask::JointShapeColor, 2, 5);
        let mut wider = spec.clone();
        wider.grid.get_mut("number_of_shapes").unwrap().push(ParamValue::Int(3));
        let a = enumerate_sweep(&spec).unwrap();
        let b = enumerate_sweep(&wider).unwrap();
        for item in &a {
            assert!(b.iter().any(|o| o.params == item.params && o.seed == item.seed));
        }
    }

    #[test]
    fn sorted_keys_nested() {
        let v: Value = serde_json::json!({"b": {"z": 1, "a": 2}, "a": [ {"d": 1, "c": 2} ]});
        let line = serde_json::to_string(&sort_keys(v)).unwrap();
        assert_eq!(line, r#"{"a":[{"c":2,"d":1}],"b":{"a":2,"z":1}}"#);
    }
}
