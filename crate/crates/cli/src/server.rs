//! HTTP front end for the study service.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | `{subtask, participant, shared_seed?}` | session summary |
//! | GET | `/sessions/{id}/next` | | `{state, item}` (`item` is null once complete) |
//! | POST | `/sessions/{id}/answers` | `{item_id, answer, difficulty?}` | `{state, answered, total}` |
//! | GET | `/sessions/{id}/report` | | session report |
//! | GET | `/images/{path}` | | SVG file under the dataset's `images/` |
//! | GET | `/health` | | `{status, items}` |
//!
//! Errors reply `{"error": message}` with 400, 404, 409, 422 or 500.

use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use perceptkit::analysis::Difficulty;
use perceptkit::dataset::IMAGES_DIR;
use perceptkit::study::{ItemView, SessionRequest, SessionState, SessionStore};
use perceptkit::{Error, Subtask};
use serde::{Deserialize, Serialize};
use serde_json::json;

pub struct AppState {
    pub store: SessionStore,
    pub root: PathBuf,
    pub ui: Option<PathBuf>,
    /// Applied to requests that carry no `shared_seed`.
    pub shared_seed: Option<u64>,
    pub items: usize,
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0.root() {
            Error::InvalidArgument(_) | Error::Parse { .. } | Error::Json(_) => StatusCode::BAD_REQUEST,
            Error::NotFound(_) | Error::Lookup(_) => StatusCode::NOT_FOUND,
            Error::Conflict(_) => StatusCode::CONFLICT,
            Error::Setup(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

#[derive(Debug, Deserialize)]
pub struct CreateBody {
    pub subtask: Subtask,
    pub participant: String,
    #[serde(default)]
    pub shared_seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedBody {
    pub session_id: String,
    pub subtask: Subtask,
    pub participant: String,
    pub state: SessionState,
    pub calibration_items: usize,
    pub total_items: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NextBody {
    pub state: SessionState,
    pub item: Option<ItemView>,
}

#[derive(Debug, Deserialize)]
pub struct AnswerBody {
    pub item_id: String,
    pub answer: String,
    #[serde(default)]
    pub difficulty: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnsweredBody {
    pub state: SessionState,
    pub answered: usize,
    pub total: usize,
}

async fn create(State(app): State<Arc<AppState>>, Json(body): Json<CreateBody>) -> ApiResult<impl IntoResponse> {
    let request = SessionRequest {
        subtask: body.subtask,
        participant: body.participant,
        shared_seed: body.shared_seed.or(app.shared_seed),
    };
    let s = app.store.create(&request)?;
    let created = CreatedBody {
        session_id: s.id.clone(),
        subtask: s.subtask,
        participant: s.participant.clone(),
        state: s.state(),
        calibration_items: s.calibration_count(),
        total_items: s.items.len(),
    };
    Ok((StatusCode::CREATED, Json(created)))
}

async fn next(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<NextBody>> {
    let item = app.store.next(&id)?;
    let state = app.store.get(&id)?.state();
    Ok(Json(NextBody { state, item }))
}

async fn answer(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<AnswerBody>,
) -> ApiResult<Json<AnsweredBody>> {
    let difficulty = match body.difficulty.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(d) => Some(d.parse::<Difficulty>()?),
    };
    let state = app.store.submit(&id, &body.item_id, &body.answer, difficulty)?;
    let s = app.store.get(&id)?;
    Ok(Json(AnsweredBody {
        state,
        answered: s.cursor(),
        total: s.items.len(),
    }))
}

async fn report(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(app.store.report(&id)?))
}

async fn health(State(app): State<Arc<AppState>>) -> impl IntoResponse {
    Json(json!({ "status": "ok", "items": app.items }))
}

/// Joins a URL path onto `base`, refusing anything that could climb out.
pub fn safe_join(base: &Path, rel: &str) -> Option<PathBuf> {
    let rel = Path::new(rel);
    let mut out = base.to_path_buf();
    for c in rel.components() {
        match c {
            Component::Normal(part) => out.push(part),
            Component::CurDir => {}
            _ => return None,
        }
    }
    (out != base).then_some(out)
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        _ => "application/octet-stream",
    }
}

async fn serve_file(path: Option<PathBuf>) -> Response {
    let Some(path) = path else {
        return (StatusCode::BAD_REQUEST, Json(json!({ "error": "invalid path" }))).into_response();
    };
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => (StatusCode::NOT_FOUND, Json(json!({ "error": "no such file" }))).into_response(),
    }
}

async fn image(State(app): State<Arc<AppState>>, UrlPath(path): UrlPath<String>) -> Response {
    serve_file(safe_join(&app.root.join(IMAGES_DIR), &path)).await
}

async fn fallback(State(app): State<Arc<AppState>>, uri: Uri) -> Response {
    let Some(ui) = &app.ui else {
        if uri.path() == "/" {
            return "perceptkit study service (no UI bundle installed)\n".into_response();
        }
        return (StatusCode::NOT_FOUND, Json(json!({ "error": "not found" }))).into_response();
    };
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    serve_file(safe_join(ui, rel)).await
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/answers", post(answer))
        .route("/sessions/{id}/report", get(report))
        .route("/images/{*path}", get(image))
        .fallback(fallback)
        .with_state(state)
}

/// Binds, prints the bound address, and serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> perceptkit::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Setup(format!("cannot bind {addr}: {e}")))?;
    let local = listener
        .local_addr()
        .map_err(|e| Error::Setup(format!("cannot read bound address: {e}")))?;
    println!("listening on http://{local}");
    if state.ui.is_none() {
        println!("no UI bundle found; serving the HTTP API only");
    }
    use std::io::Write as _;
    let _ = std::io::stdout().flush();
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::Setup(format!("server error: {e}")))
}
