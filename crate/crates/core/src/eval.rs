//! Answer normalization, scoring and accuracy aggregation.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::dataset::{append_jsonl, read_jsonl, write_jsonl, ManifestRecord};
use crate::error::{Error, Result};
use crate::prompts;
use crate::task::{Answer, AnswerKind, ParamMap, Subtask};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizedAnswer {
    Integer(u64),
    Mcq(u8),
    Text(String),
    YesNo(bool),
    Unparseable,
}

impl NormalizedAnswer {
    pub fn matches(&self, truth: &Answer) -> bool {
        match (self, truth) {
            (NormalizedAnswer::Integer(a), Answer::Integer(b)) => a == b,
            (NormalizedAnswer::Mcq(a), Answer::Mcq(b)) => a == b,
            (NormalizedAnswer::Text(a), Answer::Text(b)) => a == b,
            (NormalizedAnswer::YesNo(a), Answer::YesNo(b)) => a == b,
            _ => false,
        }
    }
}

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static pattern"))
}

static OPTION_RE: OnceLock<Regex> = OnceLock::new();
static DIGIT_RE: OnceLock<Regex> = OnceLock::new();
static INTEGER_RE: OnceLock<Regex> = OnceLock::new();
static YES_NO_RE: OnceLock<Regex> = OnceLock::new();
static LETTERS_RE: OnceLock<Regex> = OnceLock::new();

fn normalize_mcq(raw: &str) -> NormalizedAnswer {
    let option = re(&OPTION_RE, r"(?i)\boption\s*#?\s*([1-4])\b");
    let digit = re(&DIGIT_RE, r"\b([1-4])\b");
    option
        .captures(raw)
        .or_else(|| digit.captures(raw))
        .and_then(|c| c[1].parse().ok())
        .map_or(NormalizedAnswer::Unparseable, NormalizedAnswer::Mcq)
}

fn normalize_integer(raw: &str) -> NormalizedAnswer {
    re(&INTEGER_RE, r"\b\d+\b")
        .find_iter(raw)
        .last()
        .and_then(|m| m.as_str().parse().ok())
        .map_or(NormalizedAnswer::Unparseable, NormalizedAnswer::Integer)
}

fn normalize_yes_no(raw: &str) -> NormalizedAnswer {
    re(&YES_NO_RE, r"(?i)\b(yes|no)\b")
        .captures(raw)
        .map_or(NormalizedAnswer::Unparseable, |c| {
            NormalizedAnswer::YesNo(c[1].eq_ignore_ascii_case("yes"))
        })
}

/// Letters answer. Candidates are runs of consecutive single-letter words
/// ("A B C", "the letter is a") and all-caps words of two or more letters
/// ("KXQ"); the longest wins, ties go to the later one. Without candidates
/// the longest letter run is used.
fn normalize_text(raw: &str) -> NormalizedAnswer {
    let words: Vec<&str> = re(&LETTERS_RE, r"[A-Za-z]+")
        .find_iter(raw)
        .map(|m| m.as_str())
        .collect();
    if words.is_empty() {
        return NormalizedAnswer::Unparseable;
    }
    let mut candidates: Vec<String> = Vec::new();
    let mut run = String::new();
    for w in &words {
        if w.len() == 1 {
            run.push_str(w);
            continue;
        }
        if !run.is_empty() {
            candidates.push(std::mem::take(&mut run));
        }
        if w.chars().all(|c| c.is_ascii_uppercase()) {
            candidates.push((*w).to_string());
        }
    }
    if !run.is_empty() {
        candidates.push(run);
    }
    let pick = |items: &[String]| {
        items
            .iter()
            .fold(None::<&String>, |best, c| match best {
                Some(b) if b.len() > c.len() => Some(b),
                _ => Some(c),
            })
            .map(|s| s.to_ascii_uppercase())
    };
    let chosen = pick(&candidates).or_else(|| {
        let all: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        pick(&all)
    });
    chosen.map_or(NormalizedAnswer::Unparseable, NormalizedAnswer::Text)
}

/// Deterministic answer extraction; never fails.
///
/// * mcq4: the first "option N", else the first standalone digit 1-4.
/// * integer: the last standalone non-negative integer.
/// * text: see the letter rules above, uppercased.
/// * yes/no: the first yes or no word.
pub fn normalize_answer(raw: &str, kind: AnswerKind) -> NormalizedAnswer {
    match kind {
        AnswerKind::Mcq4 => normalize_mcq(raw),
        AnswerKind::Integer => normalize_integer(raw),
        AnswerKind::Text => normalize_text(raw),
        AnswerKind::YesNo => normalize_yes_no(raw),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub instance_id: String,
    pub subtask: Subtask,
    /// Model name or human session id.
    pub responder: String,
    pub raw_text: String,
    pub normalized: NormalizedAnswer,
    pub correct: bool,
    pub params: ParamMap,
    /// Set when no answer could be obtained (the item scores incorrect).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// SHA-256 of each image payload sent, when known.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub image_sha256: Vec<String>,
}

/// Decides correctness of a raw answer.
pub trait Grader: Send + Sync {
    fn grade(&self, record: &ManifestRecord, raw: &str) -> Result<(NormalizedAnswer, bool)>;
}

/// The rule normalizer compared against ground truth.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleGrader;

impl Grader for RuleGrader {
    fn grade(&self, record: &ManifestRecord, raw: &str) -> Result<(NormalizedAnswer, bool)> {
        let truth = record.answer()?;
        let n = normalize_answer(raw, record.answer_kind);
        let ok = n.matches(&truth);
        Ok((n, ok))
    }
}

/// Asks an external judge with the evaluator prompt; the judge's YES/NO
/// decides correctness. The normalized field still comes from the rules.
pub struct RemoteGrader<F> {
    judge: F,
}

impl<F> RemoteGrader<F>
where
    F: Fn(&str) -> Result<String> + Send + Sync,
{
    pub fn new(judge: F) -> Self {
        Self { judge }
    }
}

pub fn evaluator_prompt(question: &str, ground_truth: &str, answer: &str) -> Result<String> {
    prompts::fill(
        prompts::EVALUATOR,
        &[
            ("question", question),
            ("gt_answer", ground_truth),
            ("mllm_answer", answer),
        ],
    )
}

impl<F> Grader for RemoteGrader<F>
where
    F: Fn(&str) -> Result<String> + Send + Sync,
{
    fn grade(&self, record: &ManifestRecord, raw: &str) -> Result<(NormalizedAnswer, bool)> {
        let prompt = evaluator_prompt(&record.question, &record.ground_truth, raw)?;
        let verdict = (self.judge)(&prompt)?;
        let ok = matches!(normalize_yes_no(&verdict), NormalizedAnswer::YesNo(true));
        Ok((normalize_answer(raw, record.answer_kind), ok))
    }
}

pub fn score(record: &ManifestRecord, responder: &str, raw: &str) -> Result<EvalRecord> {
    score_with(&RuleGrader, record, responder, raw)
}

pub fn score_with(
    grader: &dyn Grader,
    record: &ManifestRecord,
    responder: &str,
    raw: &str,
) -> Result<EvalRecord> {
    let (normalized, correct) = grader.grade(record, raw)?;
    Ok(EvalRecord {
        instance_id: record.id.clone(),
        subtask: record.subtask,
        responder: responder.to_string(),
        raw_text: raw.to_string(),
        normalized,
        correct,
        params: record.params.clone(),
        error: None,
        image_sha256: Vec::new(),
    })
}

/// Record for an item whose answer could not be obtained.
pub fn failed(record: &ManifestRecord, responder: &str, error: &Error) -> EvalRecord {
    EvalRecord {
        instance_id: record.id.clone(),
        subtask: record.subtask,
        responder: responder.to_string(),
        raw_text: String::new(),
        normalized: NormalizedAnswer::Unparseable,
        correct: false,
        params: record.params.clone(),
        error: Some(error.to_string()),
        image_sha256: Vec::new(),
    }
}

/// Scores a raw answer for an instance looked up by id.
pub fn score_by_id(
    index: &HashMap<String, ManifestRecord>,
    id: &str,
    responder: &str,
    raw: &str,
) -> Result<EvalRecord> {
    let record = index
        .get(id)
        .ok_or_else(|| Error::Lookup(format!("unknown instance id {id}")))?;
    score(record, responder, raw)
}

pub fn index_manifest(records: &[ManifestRecord]) -> HashMap<String, ManifestRecord> {
    records.iter().map(|r| (r.id.clone(), r.clone())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += usize::from(correct);
    }

    pub fn merge(&mut self, other: Tally) {
        self.correct += other.correct;
        self.total += other.total;
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKey {
    Responder,
    Subtask,
    Param(String),
}

impl GroupKey {
    fn of(&self, r: &EvalRecord) -> String {
        match self {
            GroupKey::Responder => r.responder.clone(),
            GroupKey::Subtask => r.subtask.name().to_string(),
            GroupKey::Param(p) => r
                .params
                .get(p)
                .map_or_else(|| "-".to_string(), ToString::to_string),
        }
    }
}

/// Accuracy per group, groups keyed by their values in `group_by` order.
pub fn aggregate(records: &[EvalRecord], group_by: &[GroupKey]) -> BTreeMap<Vec<String>, Tally> {
    let mut out: BTreeMap<Vec<String>, Tally> = BTreeMap::new();
    for r in records {
        let key = group_by.iter().map(|g| g.of(r)).collect();
        out.entry(key).or_default().add(r.correct);
    }
    out
}

/// Unweighted mean of the per-subtask accuracies present in `records`.
pub fn overall_average(records: &[EvalRecord]) -> Option<f64> {
    let per = aggregate(records, &[GroupKey::Subtask]);
    let accs: Vec<f64> = per.values().filter_map(Tally::accuracy).collect();
    (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub responder: String,
    /// One cell per benchmark subtask column; `None` when unanswered.
    pub cells: Vec<Option<f64>>,
    pub average: Option<f64>,
}

/// Responder x subtask accuracy table with the seven benchmark subtasks as
/// columns and a trailing unweighted average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

pub fn results_table(records: &[EvalRecord]) -> ResultsTable {
    let mut by_responder: BTreeMap<&str, Vec<EvalRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| Subtask::BENCHMARK.contains(&r.subtask)) {
        by_responder.entry(&r.responder).or_default().push(r.clone());
    }
    let mut rows: Vec<TableRow> = by_responder
        .into_iter()
        .map(|(responder, recs)| {
            let per = aggregate(&recs, &[GroupKey::Subtask]);
            let cells: Vec<Option<f64>> = Subtask::BENCHMARK
                .iter()
                .map(|s| per.get(&vec![s.name().to_string()]).and_then(Tally::accuracy))
                .collect();
            TableRow {
                responder: responder.to_string(),
                cells,
                average: overall_average(&recs),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.average
            .unwrap_or(-1.0)
            .total_cmp(&a.average.unwrap_or(-1.0))
            .then_with(|| a.responder.cmp(&b.responder))
    });
    let mut columns: Vec<String> = vec!["Model".to_string()];
    columns.extend(Subtask::BENCHMARK.iter().map(|s| s.title().to_string()));
    columns.push("Average".to_string());
    ResultsTable { columns, rows }
}

impl ResultsTable {
    /// Fixed-width text rendering with percentages.
    pub fn render(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |a| format!("{:.2}", 100.0 * a));
        let mut lines: Vec<Vec<String>> = vec![self.columns.clone()];
        for r in &self.rows {
            let mut line = vec![r.responder.clone()];
            line.extend(r.cells.iter().map(|&c| pct(c)));
            line.push(pct(r.average));
            lines.push(line);
        }
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| lines.iter().map(|l| l[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for l in &lines {
            let cells: Vec<String> = l
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }
}

pub fn write_results(path: &Path, records: &[EvalRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn append_results(path: &Path, records: &[EvalRecord]) -> Result<()> {
    append_jsonl(path, records)
}

pub fn read_results(path: &Path) -> Result<Vec<EvalRecord>> {
    read_jsonl(path)
}
