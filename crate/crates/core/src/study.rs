//! Human-study sessions: calibration, randomized forward-only item
//! delivery, answer and difficulty capture, and per-session reports.
//!
//! Every session is persisted as an append-only JSONL event log so a
//! restarted service (or a refreshed browser) resumes at the same item.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::analysis::{difficulty_breakdown, Difficulty};
use crate::dataset::{read_jsonl, to_json_line, ManifestRecord};
use crate::error::{Error, Result};
use crate::eval::{aggregate, score, EvalRecord, GroupKey, Tally};
use crate::rng::{stable_hash, SplitMix64};
use crate::task::{AnswerKind, ParamValue, Subtask};

pub const CALIBRATION_ITEMS: usize = 7;
pub const MAIN_PER_COMBO: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Calibration,
    Main,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Calibrating,
    Testing,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionItem {
    pub item_id: String,
    pub phase: Phase,
}

/// What the participant sees for one item. Carries no ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub item_id: String,
    pub subtask: Subtask,
    pub phase: Phase,
    pub question: String,
    pub answer_kind: AnswerKind,
    pub options_count: usize,
    /// Dataset-relative image paths, served under `/images/`.
    pub image_paths: Vec<String>,
    /// Zero-based position in the queue.
    pub position: usize,
    pub total: usize,
    pub difficulty_required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub item_id: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRequest {
    pub subtask: Subtask,
    pub participant: String,
    /// When set, every participant with the same value gets the same items.
    #[serde(default)]
    pub shared_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub subtask: Subtask,
    pub participant: String,
    pub seed: u64,
    pub items: Vec<SessionItem>,
    pub responses: Vec<Response>,
    /// Scored main-phase records, parallel to main responses.
    records: Vec<EvalRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_id: String,
    pub subtask: Subtask,
    pub participant: String,
    pub state: SessionState,
    pub answered_main: usize,
    pub total_main: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
    pub by_difficulty: BTreeMap<Difficulty, Tally>,
}

/// Seed for item sampling: the shared seed when given, otherwise derived
/// from the participant label.
pub fn session_seed(subtask: Subtask, participant: &str, shared_seed: Option<u64>) -> u64 {
    match shared_seed {
        Some(s) => stable_hash(format!("shared|{s}|{}", subtask.name()).as_bytes()),
        None => stable_hash(format!("participant|{participant}|{}", subtask.name()).as_bytes()),
    }
}

/// Signed difficulty contribution of one parameter value: larger means
/// harder. Used only to order calibration candidates.
fn axis_difficulty(subtask: Subtask, name: &str, value: &ParamValue) -> f64 {
    let v = match value {
        ParamValue::Text(t) => t
            .split('x')
            .map(|p| p.trim().parse::<f64>().unwrap_or(0.0))
            .product(),
        other => other.as_f64().unwrap_or(0.0),
    };
    use Subtask::*;
    match (subtask, name) {
        (Letter, "contrast" | "block_size") => -v,
        (FormConstancy, "scaling_factor" | "aspect_ratio") => -(v - 1.0).abs(),
        (FormConstancy, "rotation_factor") => -v,
        (FormConstancy, "shape_substitution") => 0.0,
        (VisualClosure, "distortion_factor") => -v,
        (LimitsRotation, _) => -v,
        (LimitsCount, "scaling_factor") => -v,
        _ => v,
    }
}

/// Orders records from easiest to hardest by the sum of per-parameter
/// difficulty ranks, each rank scaled to [0, 1] over the pool.
pub fn difficulty_order(subtask: Subtask, pool: &[&ManifestRecord]) -> Vec<f64> {
    let mut levels: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in pool {
        for (k, v) in &r.params {
            levels.entry(k.as_str()).or_default().push(axis_difficulty(subtask, k, v));
        }
    }
    for vals in levels.values_mut() {
        vals.sort_by(f64::total_cmp);
        vals.dedup();
    }
    pool.iter()
        .map(|r| {
            r.params
                .iter()
                .map(|(k, v)| {
                    let vals = &levels[k.as_str()];
                    let x = axis_difficulty(subtask, k, v);
                    let rank = vals.partition_point(|&y| y < x);
                    if vals.len() > 1 {
                        rank as f64 / (vals.len() - 1) as f64
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

/// Draws the item queue for a session: seven calibration items evenly
/// spread over the difficulty order, then `per_combo` items for every
/// parameter combination in random order.
///
/// Calibration items come from records not drawn as main items. When fewer
/// than seven remain, the whole subtask pool is used instead.
pub fn sample_items(
    records: &[ManifestRecord],
    subtask: Subtask,
    per_combo: usize,
    seed: u64,
) -> Result<Vec<SessionItem>> {
    let mut combos: BTreeMap<String, Vec<&ManifestRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.subtask == subtask) {
        combos.entry(r.combo_key()).or_default().push(r);
    }
    if combos.is_empty() {
        return Err(Error::Setup(format!("manifest has no {} items", subtask.name())));
    }
    let root = SplitMix64::new(seed);
    let mut main: Vec<&ManifestRecord> = Vec::new();
    for (key, members) in combos.iter_mut() {
        if members.len() < per_combo {
            return Err(Error::Setup(format!(
                "combination {key} of {} has {} items, {per_combo} needed",
                subtask.name(),
                members.len()
            )));
        }
        members.sort_by(|a, b| a.id.cmp(&b.id));
        let mut rng = root.child(stable_hash(key.as_bytes()));
        for i in rng.sample_indices(members.len(), per_combo) {
            main.push(members[i]);
        }
    }
    let mut order_rng = root.child(0);
    order_rng.shuffle(&mut main);

    let chosen: std::collections::HashSet<&str> = main.iter().map(|r| r.id.as_str()).collect();
    let all: Vec<&ManifestRecord> = combos.values().flatten().copied().collect();
    let leftovers: Vec<&ManifestRecord> =
        all.iter().copied().filter(|r| !chosen.contains(r.id.as_str())).collect();
    let pool = if leftovers.len() >= CALIBRATION_ITEMS { leftovers } else { all };
    if pool.len() < CALIBRATION_ITEMS {
        return Err(Error::Setup(format!(
            "{} has {} items, {CALIBRATION_ITEMS} calibration items needed",
            subtask.name(),
            pool.len()
        )));
    }
    let scores = difficulty_order(subtask, &pool);
    let mut ranked: Vec<(f64, u64, &ManifestRecord)> = pool
        .iter()
        .zip(&scores)
        .map(|(r, &s)| (s, stable_hash(format!("{seed}|{}", r.id).as_bytes()), *r))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n = ranked.len();
    let calibration = (0..CALIBRATION_ITEMS).map(|i| {
        let idx = (i * (n - 1) + (CALIBRATION_ITEMS - 1) / 2) / (CALIBRATION_ITEMS - 1);
        ranked[idx].2
    });

    let mut items: Vec<SessionItem> = calibration
        .map(|r| SessionItem {
            item_id: r.id.clone(),
            phase: Phase::Calibration,
        })
        .collect();
    items.extend(main.into_iter().map(|r| SessionItem {
        item_id: r.id.clone(),
        phase: Phase::Main,
    }));
    Ok(items)
}

impl Session {
    pub fn new(id: String, request: &SessionRequest, records: &[ManifestRecord], per_combo: usize) -> Result<Self> {
        if request.participant.trim().is_empty() {
            return Err(Error::invalid("participant label is empty"));
        }
        let seed = session_seed(request.subtask, &request.participant, request.shared_seed);
        let items = sample_items(records, request.subtask, per_combo, seed)?;
        Ok(Self {
            id,
            subtask: request.subtask,
            participant: request.participant.clone(),
            seed,
            items,
            responses: Vec::new(),
            records: Vec::new(),
        })
    }

    pub fn cursor(&self) -> usize {
        self.responses.len()
    }

    pub fn calibration_count(&self) -> usize {
        self.items.iter().filter(|i| i.phase == Phase::Calibration).count()
    }

    pub fn state(&self) -> SessionState {
        match self.items.get(self.cursor()) {
            None => SessionState::Complete,
            Some(item) if item.phase == Phase::Calibration => SessionState::Calibrating,
            Some(_) => SessionState::Testing,
        }
    }

    pub fn current(&self) -> Option<&SessionItem> {
        self.items.get(self.cursor())
    }

    pub fn view(&self, index: &HashMap<String, ManifestRecord>) -> Result<Option<ItemView>> {
        let Some(item) = self.current() else { return Ok(None) };
        let r = lookup(index, &item.item_id)?;
        Ok(Some(ItemView {
            item_id: r.id.clone(),
            subtask: r.subtask,
            phase: item.phase,
            question: r.question.clone(),
            answer_kind: r.answer_kind,
            options_count: r.options_count,
            image_paths: r.image_paths.clone(),
            position: self.cursor(),
            total: self.items.len(),
            difficulty_required: item.phase == Phase::Main,
        }))
    }

    /// Checks that `response` may be applied now, without changing anything.
    pub fn check(&self, response: &Response) -> Result<()> {
        let Some(current) = self.current() else {
            return Err(Error::Conflict(format!("session {} is complete", self.id)));
        };
        if current.item_id != response.item_id {
            let answered = self.responses.iter().any(|r| r.item_id == response.item_id);
            return Err(Error::Conflict(if answered {
                format!("item {} was already answered", response.item_id)
            } else if self.items.iter().any(|i| i.item_id == response.item_id) {
                format!("item {} is not the current item ({})", response.item_id, current.item_id)
            } else {
                format!("item {} is not part of session {}", response.item_id, self.id)
            }));
        }
        if current.phase == Phase::Main && response.difficulty.is_none() {
            return Err(Error::invalid("a difficulty rating is required for main items"));
        }
        Ok(())
    }

    /// Applies an answer to the current item. On error the session is
    /// left unchanged.
    pub fn submit(&mut self, response: Response, index: &HashMap<String, ManifestRecord>) -> Result<SessionState> {
        self.check(&response)?;
        let phase = self.items[self.cursor()].phase;
        if phase == Phase::Main {
            let record = lookup(index, &response.item_id)?;
            let scored = score(record, &self.responder(), &response.answer)?;
            self.records.push(scored);
        }
        self.responses.push(response);
        Ok(self.state())
    }

    pub fn responder(&self) -> String {
        format!("human:{}", self.participant)
    }

    /// Scored records for answered main items.
    pub fn main_records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn report(&self) -> SessionReport {
        let overall = aggregate(&self.records, &[]).into_values().next().unwrap_or_default();
        let ratings: HashMap<String, Difficulty> = self
            .responses
            .iter()
            .filter_map(|r| r.difficulty.map(|d| (r.item_id.clone(), d)))
            .collect();
        SessionReport {
            session_id: self.id.clone(),
            subtask: self.subtask,
            participant: self.participant.clone(),
            state: self.state(),
            answered_main: overall.total,
            total_main: self.items.len() - self.calibration_count(),
            correct: overall.correct,
            accuracy: overall.accuracy(),
            by_difficulty: difficulty_breakdown(&self.records, &ratings),
        }
    }
}

fn lookup<'a>(index: &'a HashMap<String, ManifestRecord>, id: &str) -> Result<&'a ManifestRecord> {
    index
        .get(id)
        .ok_or_else(|| Error::Lookup(format!("item {id} is not in the manifest")))
}

/// One line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Created {
        session_id: String,
        subtask: Subtask,
        participant: String,
        seed: u64,
        items: Vec<SessionItem>,
    },
    Answered(Response),
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

type Shared = Arc<Mutex<Session>>;

/// All live sessions over one manifest, optionally persisted to a
/// directory of `<session id>.jsonl` event logs.
pub struct SessionStore {
    index: HashMap<String, ManifestRecord>,
    records: Vec<ManifestRecord>,
    dir: Option<PathBuf>,
    per_combo: usize,
    sessions: RwLock<HashMap<String, Shared>>,
    counter: AtomicU64,
}

impl SessionStore {
    pub fn new(records: Vec<ManifestRecord>, dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        Ok(Self {
            index: crate::eval::index_manifest(&records),
            records,
            dir,
            per_combo: MAIN_PER_COMBO,
            sessions: RwLock::new(HashMap::new()),
            counter: AtomicU64::new(0),
        })
    }

    pub fn with_per_combo(mut self, per_combo: usize) -> Self {
        self.per_combo = per_combo.max(1);
        self
    }

    pub fn record(&self, id: &str) -> Option<&ManifestRecord> {
        self.index.get(id)
    }

    fn log_path(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.jsonl")))
    }

    fn append(&self, id: &str, event: &SessionEvent) -> Result<()> {
        let Some(path) = self.log_path(id) else { return Ok(()) };
        let line = to_json_line(event)?;
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        writeln!(f, "{line}")
            .and_then(|_| f.sync_data())
            .map_err(|e| Error::io(&path, e))
    }

    fn fresh_id(&self, request: &SessionRequest) -> String {
        loop {
            let n = self.counter.fetch_add(1, Ordering::SeqCst);
            let material = format!(
                "{}|{}|{}|{}|{n}",
                request.participant,
                request.subtask.name(),
                now_ms(),
                std::process::id()
            );
            let id = format!("s{:016x}", stable_hash(material.as_bytes()));
            let taken = self.sessions.read().expect("lock").contains_key(&id)
                || self.log_path(&id).is_some_and(|p| p.exists());
            if !taken {
                return id;
            }
        }
    }

    pub fn create(&self, request: &SessionRequest) -> Result<Session> {
        let id = self.fresh_id(request);
        let session = Session::new(id.clone(), request, &self.records, self.per_combo)?;
        self.append(
            &id,
            &SessionEvent::Created {
                session_id: id.clone(),
                subtask: session.subtask,
                participant: session.participant.clone(),
                seed: session.seed,
                items: session.items.clone(),
            },
        )?;
        self.sessions
            .write()
            .expect("lock")
            .insert(id, Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    /// Rebuilds a session by replaying its log.
    pub fn replay(path: &Path, index: &HashMap<String, ManifestRecord>) -> Result<Session> {
        let events: Vec<SessionEvent> = read_jsonl(path)?;
        let mut it = events.into_iter();
        let Some(SessionEvent::Created { session_id, subtask, participant, seed, items }) = it.next() else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "log does not start with a created event".into(),
            });
        };
        let mut session = Session {
            id: session_id,
            subtask,
            participant,
            seed,
            items,
            responses: Vec::new(),
            records: Vec::new(),
        };
        for (i, ev) in it.enumerate() {
            match ev {
                SessionEvent::Answered(r) => {
                    session.submit(r, index).map_err(|e| e.context(format!("replaying {} line {}", path.display(), i + 2)))?;
                }
                SessionEvent::Created { .. } => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 2,
                        message: "duplicate created event".into(),
                    })
                }
            }
        }
        Ok(session)
    }

    fn shared(&self, id: &str) -> Result<Shared> {
        if let Some(s) = self.sessions.read().expect("lock").get(id) {
            return Ok(Arc::clone(s));
        }
        let valid = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric());
        let path = self.log_path(id).filter(|p| valid && p.exists());
        let Some(path) = path else {
            return Err(Error::NotFound(format!("unknown session {id}")));
        };
        let session = Self::replay(&path, &self.index)?;
        let mut map = self.sessions.write().expect("lock");
        Ok(Arc::clone(
            map.entry(id.to_string()).or_insert_with(|| Arc::new(Mutex::new(session))),
        ))
    }

    pub fn get(&self, id: &str) -> Result<Session> {
        Ok(self.shared(id)?.lock().expect("lock").clone())
    }

    pub fn next(&self, id: &str) -> Result<Option<ItemView>> {
        let s = self.shared(id)?;
        let session = s.lock().expect("lock");
        session.view(&self.index)
    }

    pub fn submit(
        &self,
        id: &str,
        item_id: &str,
        answer: &str,
        difficulty: Option<Difficulty>,
    ) -> Result<SessionState> {
        let s = self.shared(id)?;
        let mut session = s.lock().expect("lock");
        let response = Response {
            item_id: item_id.to_string(),
            answer: answer.to_string(),
            difficulty,
            timestamp_ms: now_ms(),
        };
        session.check(&response)?;
        // Log before applying so the in-memory state never runs ahead of disk.
        self.append(id, &SessionEvent::Answered(response.clone()))?;
        session.submit(response, &self.index)
    }

    pub fn report(&self, id: &str) -> Result<SessionReport> {
        Ok(self.shared(id)?.lock().expect("lock").report())
    }

    pub fn main_records(&self, id: &str) -> Result<Vec<EvalRecord>> {
        Ok(self.shared(id)?.lock().expect("lock").main_records().to_vec())
    }
}

/// Main accuracy recomputed through the eval aggregation; equals
/// [`SessionReport::accuracy`].
pub fn aggregate_accuracy(records: &[EvalRecord]) -> Option<f64> {
    aggregate(records, &[GroupKey::Responder])
        .into_values()
        .next()
        .and_then(|t| t.accuracy())
}
