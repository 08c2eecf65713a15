//! Multimodal chat-completions client with an on-disk response cache,
//! retry with exponential backoff, bounded parallelism and mock responders.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dataset::{write_atomic, ManifestRecord};
use crate::error::{Error, Result};
use crate::eval::{failed, score_with, EvalRecord, Grader};
use crate::rng::{stable_hash, SplitMix64};
use crate::task::AnswerKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    /// Base URL; requests go to `<base_url>/chat/completions`.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token, if any.
    #[serde(default)]
    pub token_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_parallel")]
    pub max_parallel: usize,
    #[serde(default = "default_retries")]
    pub max_retries: usize,
    /// First backoff delay; doubles per retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

fn default_timeout() -> f64 {
    60.0
}
fn default_parallel() -> usize {
    4
}
fn default_retries() -> usize {
    5
}
fn default_backoff() -> u64 {
    500
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            token_env: None,
            timeout_secs: default_timeout(),
            max_parallel: default_parallel(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(Error::invalid(format!("timeout must be > 0, got {}", self.timeout_secs)));
        }
        if self.max_parallel == 0 {
            return Err(Error::invalid("max_parallel must be >= 1"));
        }
        if self.model.trim().is_empty() {
            return Err(Error::invalid("model name is empty"));
        }
        Ok(())
    }

    /// Backoff before retry number `attempt` (0-based).
    pub fn backoff(&self, attempt: usize) -> Duration {
        Duration::from_millis(self.backoff_ms.saturating_mul(1u64 << attempt.min(16)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationSettings {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            top_p: 0.95,
            max_tokens: 200,
        }
    }
}

impl GenerationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::invalid(format!("temperature must be in [0, 2], got {}", self.temperature)));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::invalid(format!("top_p must be in (0, 1], got {}", self.top_p)));
        }
        if self.max_tokens == 0 {
            return Err(Error::invalid("max_tokens must be >= 1"));
        }
        Ok(())
    }
}

/// One image as sent to the endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePayload {
    pub mime: String,
    pub bytes: Vec<u8>,
}

impl ImagePayload {
    pub fn svg(text: &str) -> Self {
        Self {
            mime: "image/svg+xml".to_string(),
            bytes: text.as_bytes().to_vec(),
        }
    }

    pub fn data_url(&self) -> String {
        format!(
            "data:{};base64,{}",
            self.mime,
            base64::engine::general_purpose::STANDARD.encode(&self.bytes)
        )
    }

    pub fn sha256(&self) -> String {
        sha256_hex(&self.bytes)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    /// Used by mocks and for cache keys; never sent over the wire.
    pub instance_id: String,
    pub prompt: String,
    pub images: Vec<ImagePayload>,
    pub settings: GenerationSettings,
}

/// Chat-completions request body: one user message with the prompt text
/// followed by each image as a data URL.
pub fn request_body(req: &ChatRequest) -> Value {
    let mut content = vec![json!({"type": "text", "text": req.prompt})];
    for img in &req.images {
        content.push(json!({"type": "image_url", "image_url": {"url": img.data_url()}}));
    }
    json!({
        "model": req.model,
        "messages": [{"role": "user", "content": content}],
        "temperature": req.settings.temperature,
        "top_p": req.settings.top_p,
        "max_tokens": req.settings.max_tokens,
    })
}

/// Extracts `choices[0].message.content`, accepting either a string or a
/// list of text parts.
pub fn parse_response(body: &str) -> Result<String> {
    let v: Value = serde_json::from_str(body)?;
    let content = &v["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join("")),
        _ => Err(Error::Protocol {
            status: 200,
            body: excerpt(body),
        }),
    }
}

fn excerpt(body: &str) -> String {
    const MAX: usize = 300;
    if body.len() <= MAX {
        body.to_string()
    } else {
        let mut end = MAX;
        while !body.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &body[..end])
    }
}

/// Why a single attempt failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttemptError {
    Timeout(String),
    /// Connection-level failure.
    Network(String),
    Status { status: u16, body: String },
}

impl AttemptError {
    pub fn is_retryable(&self) -> bool {
        match self {
            AttemptError::Timeout(_) | AttemptError::Network(_) => true,
            AttemptError::Status { status, .. } => *status == 429 || *status >= 500,
        }
    }

    fn message(&self) -> String {
        match self {
            AttemptError::Timeout(m) => format!("timeout: {m}"),
            AttemptError::Network(m) => format!("network: {m}"),
            AttemptError::Status { status, body } => format!("HTTP {status}: {}", excerpt(body)),
        }
    }
}

/// One round trip to a chat endpoint (or a stand-in for one).
pub trait Transport: Send + Sync {
    fn send(&self, req: &ChatRequest) -> std::result::Result<String, AttemptError>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    agent: ureq::Agent,
    url: String,
    token: Option<String>,
}

impl HttpTransport {
    pub fn new(config: &EndpointConfig) -> Result<Self> {
        config.validate()?;
        let token = match &config.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                Error::Setup(format!("environment variable {var} with the API token is not set"))
            })?),
            None => None,
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            agent,
            url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            token,
        })
    }
}

impl Transport for HttpTransport {
    fn send(&self, req: &ChatRequest) -> std::result::Result<String, AttemptError> {
        let body = request_body(req).to_string();
        let mut call = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(t) = &self.token {
            call = call.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = call.send(body).map_err(|e| match e {
            ureq::Error::Timeout(t) => AttemptError::Timeout(t.to_string()),
            other => AttemptError::Network(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| AttemptError::Network(e.to_string()))?;
        if (200..300).contains(&status) {
            Ok(text)
        } else {
            Err(AttemptError::Status { status, body: text })
        }
    }
}

/// Content-addressed response cache, `<dir>/<model>/<key>.txt`.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

fn safe_component(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path(&self, model: &str, key: &str) -> PathBuf {
        self.dir.join(safe_component(model)).join(format!("{key}.txt"))
    }

    pub fn get(&self, model: &str, key: &str) -> Option<String> {
        fs::read_to_string(self.path(model, key)).ok()
    }

    pub fn put(&self, model: &str, key: &str, text: &str) -> Result<()> {
        write_atomic(&self.path(model, key), text.as_bytes())
    }
}

/// SHA-256 over the model, instance id, prompt and settings.
pub fn cache_key(model: &str, instance_id: &str, prompt: &str, settings: &GenerationSettings) -> String {
    let material = json!({
        "instance_id": instance_id,
        "max_tokens": settings.max_tokens,
        "model": model,
        "prompt": prompt,
        "temperature": settings.temperature,
        "top_p": settings.top_p,
    });
    sha256_hex(material.to_string().as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryOutcome {
    pub text: String,
    pub cached: bool,
    /// Failed attempts before the successful one.
    pub retries: usize,
}

pub struct Client<T> {
    pub config: EndpointConfig,
    pub settings: GenerationSettings,
    transport: T,
    cache: Option<ResponseCache>,
    sleep: fn(Duration),
}

fn no_sleep(_: Duration) {}

impl<T: Transport> Client<T> {
    pub fn new(
        config: EndpointConfig,
        settings: GenerationSettings,
        transport: T,
        cache: Option<ResponseCache>,
    ) -> Result<Self> {
        config.validate()?;
        settings.validate()?;
        Ok(Self {
            config,
            settings,
            transport,
            cache,
            sleep: std::thread::sleep,
        })
    }

    /// Skips backoff sleeps; for tests and mocks.
    pub fn without_backoff(mut self) -> Self {
        self.sleep = no_sleep;
        self
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn query(&self, instance_id: &str, images: Vec<ImagePayload>, prompt: &str) -> Result<QueryOutcome> {
        let model = &self.config.model;
        let key = cache_key(model, instance_id, prompt, &self.settings);
        if let Some(text) = self.cache.as_ref().and_then(|c| c.get(model, &key)) {
            return Ok(QueryOutcome {
                text,
                cached: true,
                retries: 0,
            });
        }
        let req = ChatRequest {
            model: model.clone(),
            instance_id: instance_id.to_string(),
            prompt: prompt.to_string(),
            images,
            settings: self.settings,
        };
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            match self.transport.send(&req) {
                Ok(body) => {
                    let text = parse_response(&body)?;
                    if let Some(c) = &self.cache {
                        c.put(model, &key, &text)?;
                    }
                    return Ok(QueryOutcome {
                        text,
                        cached: false,
                        retries: attempt,
                    });
                }
                Err(e) if e.is_retryable() => {
                    last = e.message();
                    if attempt < self.config.max_retries {
                        (self.sleep)(self.config.backoff(attempt));
                    }
                }
                Err(AttemptError::Status { status, body }) => {
                    return Err(Error::Protocol {
                        status,
                        body: excerpt(&body),
                    })
                }
                Err(other) => return Err(Error::Transport { attempts: attempt + 1, message: other.message() }),
            }
        }
        Err(Error::Transport {
            attempts: self.config.max_retries + 1,
            message: last,
        })
    }
}

/// Turns an SVG stimulus into the payload sent to the endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rasterizer {
    /// Send the SVG text itself.
    Svg,
    /// Run an external converter. `{input}` and `{output}` in the
    /// arguments are replaced by the SVG path and a PNG path.
    Command { program: String, args: Vec<String> },
}

impl Rasterizer {
    pub fn prepare(&self, svg_path: &Path, scratch: &Path) -> Result<ImagePayload> {
        match self {
            Rasterizer::Svg => {
                let text = fs::read_to_string(svg_path).map_err(|e| Error::io(svg_path, e))?;
                Ok(ImagePayload::svg(&text))
            }
            Rasterizer::Command { program, args } => {
                fs::create_dir_all(scratch).map_err(|e| Error::io(scratch, e))?;
                let stem = sha256_hex(svg_path.to_string_lossy().as_bytes());
                let out = scratch.join(format!("{stem}.png"));
                let args: Vec<String> = args
                    .iter()
                    .map(|a| {
                        a.replace("{input}", &svg_path.to_string_lossy())
                            .replace("{output}", &out.to_string_lossy())
                    })
                    .collect();
                let status = Command::new(program)
                    .args(&args)
                    .status()
                    .map_err(|e| Error::Setup(format!("cannot run rasterizer {program}: {e}")))?;
                if !status.success() {
                    return Err(Error::Setup(format!("rasterizer {program} exited with {status}")));
                }
                let bytes = fs::read(&out).map_err(|e| Error::io(&out, e))?;
                Ok(ImagePayload {
                    mime: "image/png".to_string(),
                    bytes,
                })
            }
        }
    }
}

/// Queries every record with at most `config.max_parallel` requests in
/// flight and scores the answers. Items that fail are recorded with their
/// error and scored incorrect. Output order follows `records`.
pub fn evaluate_records<T: Transport>(
    client: &Client<T>,
    records: &[ManifestRecord],
    root: &Path,
    rasterizer: &Rasterizer,
    grader: &dyn Grader,
) -> Vec<EvalRecord> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<EvalRecord>>> = records.iter().map(|_| Mutex::new(None)).collect();
    let scratch = std::env::temp_dir().join(format!("perceptkit-raster-{}", std::process::id()));
    let workers = client.config.max_parallel.min(records.len()).max(1);
    let responder = client.config.model.as_str();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(record) = records.get(i) else { break };
                let result = (|| -> Result<EvalRecord> {
                    let images = record
                        .image_paths
                        .iter()
                        .map(|p| rasterizer.prepare(&root.join(p), &scratch))
                        .collect::<Result<Vec<_>>>()?;
                    let checksums: Vec<String> = images.iter().map(ImagePayload::sha256).collect();
                    let outcome = client.query(&record.id, images, &record.question)?;
                    let mut scored = score_with(grader, record, responder, &outcome.text)?;
                    scored.image_sha256 = checksums;
                    Ok(scored)
                })();
                let rec = result.unwrap_or_else(|e| failed(record, responder, &e));
                *slots[i].lock().expect("slot lock") = Some(rec);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every slot filled"))
        .collect()
}

fn completion(text: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

/// Answers every instance with its ground truth.
pub struct OracleTransport {
    answers: HashMap<String, String>,
}

impl OracleTransport {
    pub fn new(records: &[ManifestRecord]) -> Self {
        Self {
            answers: records.iter().map(|r| (r.id.clone(), r.ground_truth.clone())).collect(),
        }
    }
}

impl Transport for OracleTransport {
    fn send(&self, req: &ChatRequest) -> std::result::Result<String, AttemptError> {
        self.answers
            .get(&req.instance_id)
            .map(|a| completion(a))
            .ok_or_else(|| AttemptError::Status {
                status: 404,
                body: format!("unknown instance {}", req.instance_id),
            })
    }
}

/// Answers uniformly at random within each item's answer kind,
/// deterministically per (seed, instance id).
pub struct RandomTransport {
    seed: u64,
    kinds: HashMap<String, AnswerKind>,
}

impl RandomTransport {
    pub fn new(records: &[ManifestRecord], seed: u64) -> Self {
        Self {
            seed,
            kinds: records.iter().map(|r| (r.id.clone(), r.answer_kind)).collect(),
        }
    }

    pub fn answer(seed: u64, instance_id: &str, kind: AnswerKind) -> String {
        let mut rng = SplitMix64::new(seed ^ stable_hash(instance_id.as_bytes()));
        match kind {
            AnswerKind::Mcq4 => format!("Option {}", rng.range_inclusive(1, 4)),
            AnswerKind::YesNo => if rng.bernoulli(0.5) { "Yes" } else { "No" }.to_string(),
            AnswerKind::Integer => rng.range_inclusive(0, 10).to_string(),
            AnswerKind::Text => ((b'A' + rng.below(26) as u8) as char).to_string(),
        }
    }
}

impl Transport for RandomTransport {
    fn send(&self, req: &ChatRequest) -> std::result::Result<String, AttemptError> {
        let kind = self.kinds.get(&req.instance_id).copied().unwrap_or(AnswerKind::Mcq4);
        Ok(completion(&Self::answer(self.seed, &req.instance_id, kind)))
    }
}

/// Fails the first `failures` attempts of every instance, then delegates.
pub struct FlakyTransport<T> {
    inner: T,
    failures: usize,
    failure: AttemptError,
    seen: Mutex<HashMap<String, usize>>,
}

impl<T> FlakyTransport<T> {
    pub fn new(inner: T, failures: usize, failure: AttemptError) -> Self {
        Self {
            inner,
            failures,
            failure,
            seen: Mutex::new(HashMap::new()),
        }
    }

    pub fn attempts(&self, instance_id: &str) -> usize {
        self.seen.lock().expect("lock").get(instance_id).copied().unwrap_or(0)
    }
}

impl<T: Transport> Transport for FlakyTransport<T> {
    fn send(&self, req: &ChatRequest) -> std::result::Result<String, AttemptError> {
        let n = {
            let mut seen = self.seen.lock().expect("lock");
            let n = seen.entry(req.instance_id.clone()).or_insert(0);
            *n += 1;
            *n
        };
        if n <= self.failures {
            Err(self.failure.clone())
        } else {
            self.inner.send(req)
        }
    }
}

/// Counts calls and the peak number of concurrent calls.
pub struct InstrumentedTransport<T> {
    inner: T,
    delay: Duration,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

impl<T> InstrumentedTransport<T> {
    pub fn new(inner: T, delay: Duration) -> Self {
        Self {
            inner,
            delay,
            calls: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

impl<T: Transport> Transport for InstrumentedTransport<T> {
    fn send(&self, req: &ChatRequest) -> std::result::Result<String, AttemptError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        std::thread::sleep(self.delay);
        let out = self.inner.send(req);
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        out
    }
}

impl<T: Transport + ?Sized> Transport for &T {
    fn send(&self, req: &ChatRequest) -> std::result::Result<String, AttemptError> {
        (**self).send(req)
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn send(&self, req: &ChatRequest) -> std::result::Result<String, AttemptError> {
        (**self).send(req)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, truth: &str) -> ManifestRecord {
        ManifestRecord {
            id: id.into(),
            subtask: crate::Subtask::FormConstancy,
            params: Default::default(),
            image_paths: vec![],
            question: "q".into(),
            answer_kind: AnswerKind::Mcq4,
            ground_truth: truth.into(),
            options_count: 4,
            seed: 0,
        }
    }

    #[test]
    fn flaky_twice_then_ok() {
        let recs = vec![record("a", "2")];
        let flaky = FlakyTransport::new(OracleTransport::new(&recs), 2, AttemptError::Status { status: 429, body: String::new() });
        let client = Client::new(EndpointConfig::new("http://x", "m"), GenerationSettings::default(), flaky, None)
            .unwrap()
            .without_backoff();
        let out = client.query("a", vec![], "q").unwrap();
        assert_eq!((out.text.as_str(), out.retries), ("2", 2));
        assert_eq!(client.transport().attempts("a"), 3);
    }

    #[test]
    fn non_retryable_status_is_protocol_error() {
        let recs = vec![record("a", "2")];
        let flaky = FlakyTransport::new(OracleTransport::new(&recs), 1, AttemptError::Status { status: 400, body: "bad".into() });
        let client = Client::new(EndpointConfig::new("http://x", "m"), GenerationSettings::default(), flaky, None)
            .unwrap()
            .without_backoff();
        match client.query("a", vec![], "q") {
            Err(Error::Protocol { status, body }) => assert_eq!((status, body.as_str()), (400, "bad")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exhausted_retries() {
        let recs = vec![record("a", "2")];
        let flaky = FlakyTransport::new(OracleTransport::new(&recs), 100, AttemptError::Timeout("slow".into()));
        let mut cfg = EndpointConfig::new("http://x", "m");
        cfg.max_retries = 3;
        let client = Client::new(cfg, GenerationSettings::default(), flaky, None).unwrap().without_backoff();
        match client.query("a", vec![], "q") {
            Err(Error::Transport { attempts, .. }) => assert_eq!(attempts, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cache_key_sensitivity() {
        let s = GenerationSettings::default();
        let base = cache_key("m", "i", "p", &s);
        assert_ne!(base, cache_key("m2", "i", "p", &s));
        assert_ne!(base, cache_key("m", "i2", "p", &s));
        assert_ne!(base, cache_key("m", "i", "p2", &s));
        let hotter = GenerationSettings { temperature: 0.5, ..s };
        assert_ne!(base, cache_key("m", "i", "p", &hotter));
        assert_eq!(base.len(), 64);
    }

    #[test]
    fn body_shape() {
        let req = ChatRequest {
            model: "m".into(),
            instance_id: "i".into(),
            prompt: "How many?".into(),
            images: vec![ImagePayload::svg("<svg/>")],
            settings: GenerationSettings::default(),
        };
        let b = request_body(&req);
        assert_eq!(b["max_tokens"], 200);
        assert_eq!(b["top_p"], 0.95);
        assert_eq!(b["messages"][0]["content"][0]["text"], "How many?");
        let url = b["messages"][0]["content"][1]["image_url"]["url"].as_str().unwrap();
        assert!(url.starts_with("data:image/svg+xml;base64,"));
    }

    #[test]
    fn settings_ranges() {
        assert!(GenerationSettings { temperature: 2.5, ..Default::default() }.validate().is_err());
        assert!(GenerationSettings { top_p: 0.0, ..Default::default() }.validate().is_err());
        assert!(GenerationSettings { max_tokens: 0, ..Default::default() }.validate().is_err());
    }
}
