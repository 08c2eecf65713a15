//! `generate`, `evaluate` and `analyze`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use perceptkit::analysis::{difficulty_breakdown, parameter_importance, Difficulty, ImportanceReport};
use perceptkit::client::{
    Client, EndpointConfig, GenerationSettings, HttpTransport, OracleTransport, RandomTransport,
    Rasterizer, ResponseCache, Transport,
};
use perceptkit::dataset::{dataset_root, generate_dataset, read_jsonl, read_manifest, write_atomic, DatasetSummary};
use perceptkit::eval::{read_results, results_table, write_results, EvalRecord, RuleGrader};
use perceptkit::{Error, Result, Subtask};
use serde::{Deserialize, Serialize};

use crate::sweep_file::SweepFile;

pub struct GenerateArgs {
    pub spec: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub instances: Option<usize>,
    pub parallel: usize,
}

pub fn generate(args: &GenerateArgs) -> Result<(DatasetSummary, String)> {
    let file = match &args.spec {
        Some(p) => SweepFile::load(p)?,
        None => SweepFile::default(),
    };
    let specs = file.resolve(args.seed, args.instances)?;
    let summary = generate_dataset(&specs, &args.out, args.parallel)?;
    let mut text = String::new();
    for (subtask, n) in &summary.counts {
        let _ = writeln!(text, "{:<22} {n}", subtask.name());
    }
    let _ = writeln!(text, "{:<22} {}", "total", summary.total);
    let _ = writeln!(text, "manifest: {}", summary.manifest.display());
    Ok((summary, text))
}

/// Endpoint file layout:
///
/// ```toml
/// [endpoint]
/// base_url = "https://api.example.com/v1"
/// model = "some-model"
/// token_env = "API_TOKEN"
///
/// [generation]          # optional
/// temperature = 1.0
///
/// [rasterizer]          # optional; default sends SVG
/// program = "rsvg-convert"
/// args = ["-o", "{output}", "{input}"]
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointFile {
    pub endpoint: EndpointConfig,
    #[serde(default)]
    pub generation: GenerationSettings,
    #[serde(default)]
    pub rasterizer: Option<RasterizerConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterizerConfig {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl EndpointFile {
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
}

pub struct EvaluateArgs {
    pub manifest: PathBuf,
    pub endpoint: Option<PathBuf>,
    /// Model name override, or a mock (`oracle`, `random`) without an endpoint.
    pub model: Option<String>,
    pub parallel: Option<usize>,
    pub out: PathBuf,
    pub cache: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateSummary {
    pub responder: String,
    pub total: usize,
    pub reused: usize,
    pub failed: usize,
    pub correct: usize,
}

pub const MOCK_MODELS: [&str; 2] = ["oracle", "random"];

pub fn evaluate(args: &EvaluateArgs) -> Result<EvaluateSummary> {
    let records = read_manifest(&args.manifest)?;
    let root = dataset_root(&args.manifest);

    let (config, settings, rasterizer, transport): (EndpointConfig, GenerationSettings, Rasterizer, Box<dyn Transport>) =
        match &args.endpoint {
            Some(path) => {
                let file = EndpointFile::load(path)?;
                let mut config = file.endpoint;
                if let Some(m) = &args.model {
                    config.model = m.clone();
                }
                if let Some(p) = args.parallel {
                    config.max_parallel = p;
                }
                let raster = file.rasterizer.map_or(Rasterizer::Svg, |r| Rasterizer::Command {
                    program: r.program,
                    args: r.args,
                });
                let http = HttpTransport::new(&config)?;
                (config, file.generation, raster, Box::new(http))
            }
            None => {
                let model = args.model.as_deref().ok_or_else(|| {
                    Error::InvalidArgument("pass --endpoint, or --model oracle|random for a mock".into())
                })?;
                let transport: Box<dyn Transport> = match model {
                    "oracle" => Box::new(OracleTransport::new(&records)),
                    "random" => Box::new(RandomTransport::new(&records, args.seed)),
                    other => {
                        return Err(Error::InvalidArgument(format!(
                            "unknown mock model {other:?}; expected one of {MOCK_MODELS:?} or an --endpoint file"
                        )))
                    }
                };
                let mut config = EndpointConfig::new("mock://", format!("mock-{model}"));
                config.max_parallel = args.parallel.unwrap_or(4);
                config.backoff_ms = 0;
                (config, GenerationSettings::default(), Rasterizer::Svg, transport)
            }
        };
    let cache = match (&args.cache, &args.endpoint) {
        (Some(dir), _) => Some(ResponseCache::new(dir)),
        (None, Some(_)) => Some(ResponseCache::new(
            args.out.parent().unwrap_or(Path::new(".")).join("cache"),
        )),
        (None, None) => None,
    };
    let client = Client::new(config, settings, transport, cache)?;
    let responder = client.config.model.clone();

    // Reuse successful records from an earlier run of the same responder.
    let mut previous: HashMap<String, EvalRecord> = HashMap::new();
    if args.out.exists() {
        for r in read_results(&args.out)? {
            if r.responder == responder && r.error.is_none() {
                previous.insert(r.instance_id.clone(), r);
            }
        }
    }
    let ids: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
    previous.retain(|id, _| ids.contains(id.as_str()));
    let todo: Vec<_> = records
        .iter()
        .filter(|r| !previous.contains_key(&r.id))
        .cloned()
        .collect();
    let fresh = perceptkit::client::evaluate_records(&client, &todo, &root, &rasterizer, &RuleGrader);
    let mut fresh: HashMap<String, EvalRecord> = fresh.into_iter().map(|r| (r.instance_id.clone(), r)).collect();
    let reused = previous.len();
    let merged: Vec<EvalRecord> = records
        .iter()
        .filter_map(|r| previous.remove(&r.id).or_else(|| fresh.remove(&r.id)))
        .collect();
    write_results(&args.out, &merged)?;
    Ok(EvaluateSummary {
        responder,
        total: merged.len(),
        reused,
        failed: merged.iter().filter(|r| r.error.is_some()).count(),
        correct: merged.iter().filter(|r| r.correct).count(),
    })
}

pub struct AnalyzeArgs {
    pub results: Vec<PathBuf>,
    pub alpha: f64,
    pub ratings: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// One line of a ratings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub instance_id: String,
    pub difficulty: Difficulty,
}

pub const EMPTY_REPORT: &str = "no results to analyze: empty report";

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub table: perceptkit::eval::ResultsTable,
    pub importance: Vec<ImportanceReport>,
    pub difficulty: Option<Vec<(String, usize, usize, Option<f64>)>>,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<String> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be in (0, 1), got {}", args.alpha)));
    }
    let mut records = Vec::new();
    for p in &args.results {
        records.extend(read_results(p)?);
    }
    if records.is_empty() {
        return Ok(format!("{EMPTY_REPORT}\n"));
    }
    let mut out = String::new();
    let table = results_table(&records);
    let _ = writeln!(out, "accuracy (%)");
    out.push_str(&table.render());

    let present: HashSet<Subtask> = records.iter().map(|r| r.subtask).collect();
    let mut importance = Vec::new();
    let _ = writeln!(out, "\nparameter importance (Kruskal-Wallis, alpha = {})", args.alpha);
    for subtask in Subtask::ALL.iter().copied().filter(|s| present.contains(s)) {
        let report = parameter_importance(&records, subtask, args.alpha)?;
        for r in &report.reports {
            let _ = writeln!(
                out,
                "{:<22} {:<24} H={:>9.4} df={} p={:.4e} {}",
                subtask.name(),
                r.parameter,
                r.h,
                r.df,
                r.p,
                if r.significant { "significant" } else { "not significant" }
            );
        }
        for (name, why) in &report.skipped {
            let _ = writeln!(out, "{:<22} {:<24} skipped: {why}", subtask.name(), name);
        }
        importance.push(report);
    }

    let mut difficulty = None;
    if let Some(path) = &args.ratings {
        let ratings: Vec<Rating> = read_jsonl(path)?;
        let map: HashMap<String, Difficulty> =
            ratings.into_iter().map(|r| (r.instance_id, r.difficulty)).collect();
        let by = difficulty_breakdown(&records, &map);
        let _ = writeln!(out, "\naccuracy by rated difficulty");
        let mut rows = Vec::new();
        for (d, t) in &by {
            let acc = t.accuracy();
            let _ = writeln!(
                out,
                "{:<9} {:>5}/{:<5} {}",
                d.name(),
                t.correct,
                t.total,
                acc.map_or("-".to_string(), |a| format!("{:.2}%", 100.0 * a))
            );
            rows.push((d.name().to_string(), t.correct, t.total, acc));
        }
        difficulty = Some(rows);
    }

    if let Some(dir) = &args.out {
        let analysis = Analysis {
            table,
            importance,
            difficulty,
        };
        write_atomic(&dir.join("analysis.txt"), out.as_bytes())?;
        write_atomic(
            &dir.join("analysis.json"),
            serde_json::to_string_pretty(&analysis)?.as_bytes(),
        )?;
    }
    Ok(out)
}
