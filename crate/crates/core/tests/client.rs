use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use perceptkit::client::*;
use perceptkit::dataset::{default_benchmark_specs, generate_dataset, read_manifest, ManifestRecord};
use perceptkit::eval::{overall_average, RuleGrader};
use perceptkit::{Error, Subtask};

fn dataset(dir: &Path) -> Vec<ManifestRecord> {
    let specs: Vec<_> = default_benchmark_specs(1, 3)
        .into_iter()
        .filter(|s| s.subtask == Subtask::FormConstancy || s.subtask == Subtask::SpatialGrid)
        .collect();
    generate_dataset(&specs, dir, 2).unwrap();
    read_manifest(dir).unwrap()
}

fn config(base: &str, parallel: usize) -> EndpointConfig {
    let mut c = EndpointConfig::new(base, "stub-model");
    c.max_parallel = parallel;
    c.max_retries = 3;
    c.backoff_ms = 1;
    c
}

#[test]
fn in_flight_requests_never_exceed_limit() {
    let dir = tempfile::tempdir().unwrap();
    let records = dataset(dir.path());
    for parallel in [1, 3, 8] {
        let transport = InstrumentedTransport::new(OracleTransport::new(&records), Duration::from_millis(2));
        let client = Client::new(config("http://unused", parallel), GenerationSettings::default(), transport, None)
            .unwrap()
            .without_backoff();
        let out = evaluate_records(&client, &records, dir.path(), &Rasterizer::Svg, &RuleGrader);
        assert_eq!(out.len(), records.len());
        assert!(out.iter().zip(&records).all(|(o, r)| o.instance_id == r.id));
        assert_eq!(overall_average(&out), Some(1.0));
        assert_eq!(client.transport().calls(), records.len());
        assert!(client.transport().peak() <= parallel, "peak {} > {parallel}", client.transport().peak());
        if parallel > 1 {
            assert!(client.transport().peak() > 1, "requests were not concurrent");
        }
    }
}

#[test]
fn cached_answers_skip_transport() {
    let dir = tempfile::tempdir().unwrap();
    let records = dataset(dir.path());
    let cache = ResponseCache::new(dir.path().join("cache"));
    let first = Client::new(
        config("http://unused", 4),
        GenerationSettings::default(),
        InstrumentedTransport::new(OracleTransport::new(&records), Duration::ZERO),
        Some(cache.clone()),
    )
    .unwrap();
    let a = evaluate_records(&first, &records, dir.path(), &Rasterizer::Svg, &RuleGrader);
    assert_eq!(first.transport().calls(), records.len());
    let second = Client::new(
        config("http://unused", 4),
        GenerationSettings::default(),
        InstrumentedTransport::new(RandomTransport::new(&records, 9), Duration::ZERO),
        Some(cache),
    )
    .unwrap();
    let b = evaluate_records(&second, &records, dir.path(), &Rasterizer::Svg, &RuleGrader);
    assert_eq!(second.transport().calls(), 0);
    assert_eq!(a, b);
}

#[test]
fn external_rasterizer_output_is_sent() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("x.svg");
    std::fs::write(&svg, "<svg/>").unwrap();
    let r = Rasterizer::Command {
        program: "cp".into(),
        args: vec!["{input}".into(), "{output}".into()],
    };
    let payload = r.prepare(&svg, &dir.path().join("scratch")).unwrap();
    assert_eq!(payload.mime, "image/png");
    assert_eq!(payload.bytes, b"<svg/>");
    let missing = Rasterizer::Command { program: "definitely-not-a-program-xyz".into(), args: vec![] };
    assert!(matches!(missing.prepare(&svg, dir.path()).unwrap_err().root(), Error::Setup(_)));
}

struct Captured {
    headers: Vec<String>,
    body: String,
}

/// Minimal HTTP/1.1 server answering each connection with the next
/// scripted `(status, body)`; the last entry repeats.
fn stub(script: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Captured>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    std::thread::spawn(move || {
        for (n, stream) in listener.incoming().enumerate() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = Vec::new();
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let line = line.trim_end().to_string();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
                headers.push(line);
            }
            let mut body = vec![0u8; len];
            reader.read_exact(&mut body).unwrap();
            log.lock().unwrap().push(Captured { headers, body: String::from_utf8_lossy(&body).into() });
            let (status, text) = script[n.min(script.len() - 1)].clone();
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    (base, seen)
}

fn ok_body(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

#[test]
fn http_retries_then_succeeds_with_auth_and_image() {
    let (base, seen) = stub(vec![
        (500, "{}".into()),
        (429, "{}".into()),
        (200, ok_body("Answer: 4")),
    ]);
    std::env::set_var("PERCEPTKIT_TEST_TOKEN", "sekret");
    let mut cfg = config(&base, 1);
    cfg.token_env = Some("PERCEPTKIT_TEST_TOKEN".into());
    let client = Client::new(cfg.clone(), GenerationSettings::default(), HttpTransport::new(&cfg).unwrap(), None)
        .unwrap()
        .without_backoff();
    let out = client.query("item-1", vec![ImagePayload::svg("<svg/>")], "How many?").unwrap();
    assert_eq!(out.text, "Answer: 4");
    assert_eq!(out.retries, 2);
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    let last = &seen[2];
    assert!(last.headers.iter().any(|h| h.eq_ignore_ascii_case("authorization: Bearer sekret")));
    assert!(last.headers[0].starts_with("POST /chat/completions"));
    let body: serde_json::Value = serde_json::from_str(&last.body).unwrap();
    assert_eq!(body["model"], "stub-model");
    let parts = body["messages"][0]["content"].as_array().unwrap();
    assert_eq!(parts[0]["text"], "How many?");
    assert!(parts[1]["image_url"]["url"].as_str().unwrap().starts_with("data:image/svg+xml;base64,"));
}

#[test]
fn http_client_error_is_not_retried() {
    let (base, seen) = stub(vec![(400, "{\"error\":\"bad request\"}".into())]);
    let cfg = config(&base, 1);
    let client = Client::new(cfg.clone(), GenerationSettings::default(), HttpTransport::new(&cfg).unwrap(), None)
        .unwrap()
        .without_backoff();
    let err = client.query("i", vec![], "q").unwrap_err();
    assert!(matches!(err, Error::Protocol { status: 400, .. }), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn http_persistent_failure_exhausts_retries() {
    let (base, seen) = stub(vec![(503, "{}".into())]);
    let cfg = config(&base, 1);
    let client = Client::new(cfg.clone(), GenerationSettings::default(), HttpTransport::new(&cfg).unwrap(), None)
        .unwrap()
        .without_backoff();
    let err = client.query("i", vec![], "q").unwrap_err();
    assert!(matches!(err, Error::Transport { attempts: 4, .. }), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 4);
}

#[test]
fn missing_token_is_setup_error() {
    let mut cfg = config("http://127.0.0.1:9", 1);
    cfg.token_env = Some("PERCEPTKIT_TEST_UNSET_TOKEN".into());
    assert!(matches!(HttpTransport::new(&cfg), Err(Error::Setup(_))));
}
