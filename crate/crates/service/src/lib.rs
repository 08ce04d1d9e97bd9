//! Local HTTP facade over a project file: open a session, edit annotations,
//! read the live estimate, fetch frames and the rectified preview, save.
//!
//! The estimate body is exactly what `speedkit estimate --format json` prints
//! for the same saved project. Every response carries `x-revision`.

pub mod mutation;

use std::collections::HashMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use speedkit_core::model::Project;
use speedkit_core::pipeline::{self, EstimateError};
use speedkit_core::rectify::{self, GroundBounds};
use tokio::sync::RwLock;
use tower_http::services::ServeDir;

use mutation::{GridDraft, Mutation, MutationError};

pub const REVISION_HEADER: &str = "x-revision";
const MAX_PREVIEW_SIDE: f64 = 4096.0;

pub struct SessionState {
    pub project: Project,
    pub revision: u64,
    pub draft: GridDraft,
    cached: Option<(u64, Result<String, ApiError>)>,
}

pub struct Session {
    pub id: String,
    pub path: PathBuf,
    pub state: RwLock<SessionState>,
}

impl Session {
    fn dir(&self) -> &Path {
        self.path.parent().unwrap_or(Path::new("."))
    }
}

#[derive(Default)]
struct Registry {
    by_id: HashMap<String, Arc<Session>>,
    by_path: HashMap<PathBuf, String>,
    next: u64,
}

#[derive(Clone, Default)]
pub struct AppState {
    registry: Arc<Mutex<Registry>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
    revision: Option<u64>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": message.into() }), revision: None }
    }

    fn at(mut self, revision: u64) -> Self {
        self.revision = Some(revision);
        self
    }

    fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, what)
    }
}

impl From<EstimateError> for ApiError {
    fn from(e: EstimateError) -> Self {
        let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string());
        if let EstimateError::IncompleteAnnotation(missing) = &e {
            err.body["missing"] = json!(missing);
        }
        err
    }
}

impl From<MutationError> for ApiError {
    fn from(e: MutationError) -> Self {
        let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string());
        if let MutationError::Invariant(inner) = &e {
            if let Some(f) = inner.field() {
                err.body["field"] = json!(f);
            }
        }
        err
    }
}

fn revision_value(rev: u64) -> HeaderValue {
    HeaderValue::from_str(&rev.to_string()).expect("digits are a valid header")
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut resp = (self.status, Json(self.body)).into_response();
        if let Some(rev) = self.revision {
            resp.headers_mut().insert(REVISION_HEADER, revision_value(rev));
        }
        resp
    }
}

fn with_revision(rev: u64, resp: impl IntoResponse) -> Response {
    let mut resp = resp.into_response();
    resp.headers_mut().insert(REVISION_HEADER, revision_value(rev));
    resp
}

impl AppState {
    pub fn new() -> Self {
        AppState::default()
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        let reg = self.registry.lock().expect("registry lock");
        reg.by_id.get(id).cloned().ok_or_else(|| ApiError::not_found(format!("no session {id}")))
    }

    /// Opens (or rejoins) the session for a project file. The same file,
    /// under any spelling of its path, always maps to one session.
    pub fn open(&self, path: &Path) -> Result<Arc<Session>, ApiError> {
        let canonical = path
            .canonicalize()
            .map_err(|e| ApiError::not_found(format!("cannot open {}: {e}", path.display())))?;
        let mut reg = self.registry.lock().expect("registry lock");
        if let Some(id) = reg.by_path.get(&canonical) {
            return Ok(reg.by_id[id].clone());
        }
        let project = Project::load(&canonical).map_err(|e| {
            let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string());
            if let Some(f) = e.field() {
                err.body["field"] = json!(f);
            }
            err
        })?;
        reg.next += 1;
        let id = format!("s{}", reg.next);
        let session = Arc::new(Session {
            id: id.clone(),
            path: canonical.clone(),
            state: RwLock::new(SessionState { project, revision: 0, draft: GridDraft::default(), cached: None }),
        });
        reg.by_path.insert(canonical, id.clone());
        reg.by_id.insert(id, session.clone());
        Ok(session)
    }
}

#[derive(Deserialize)]
struct OpenRequest {
    path: PathBuf,
}

#[derive(Serialize)]
struct ProjectView<'a> {
    session: &'a str,
    revision: u64,
    project: &'a Project,
    grid_draft: &'a GridDraft,
}

async fn open_session(State(app): State<AppState>, Json(req): Json<OpenRequest>) -> Result<Response, ApiError> {
    let session = app.open(&req.path)?;
    let st = session.state.read().await;
    let view = ProjectView { session: &session.id, revision: st.revision, project: &st.project, grid_draft: &st.draft };
    Ok(with_revision(st.revision, Json(view)))
}

async fn get_project(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    let st = session.state.read().await;
    let view = ProjectView { session: &session.id, revision: st.revision, project: &st.project, grid_draft: &st.draft };
    Ok(with_revision(st.revision, Json(view)))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MutationRequest {
    Many(Vec<Mutation>),
    One(Mutation),
}

async fn post_mutations(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<MutationRequest>,
) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    let mutations = match req {
        MutationRequest::Many(v) => v,
        MutationRequest::One(m) => vec![m],
    };
    let mut guard = session.state.write().await;
    let st = &mut *guard;
    if let Err(e) = mutation::apply(&mut st.project, &mut st.draft, &mutations) {
        return Err(ApiError::from(e).at(st.revision));
    }
    if !mutations.is_empty() {
        st.revision += 1;
    }
    Ok(with_revision(st.revision, Json(json!({ "revision": st.revision }))))
}

async fn get_estimate(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    // a client asking about an older revision simply gets the current one;
    // the header tells it which
    let session = app.session(&id)?;
    let (project, revision) = {
        let st = session.state.read().await;
        if let Some((rev, cached)) = &st.cached {
            if *rev == st.revision {
                return respond_estimate(*rev, cached.clone());
            }
        }
        (st.project.clone(), st.revision)
    };
    let dir = session.dir().to_path_buf();
    let result = tokio::task::spawn_blocking(move || {
        pipeline::estimate_in_dir(&project, &dir).map(|e| e.to_json()).map_err(ApiError::from)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    {
        let mut st = session.state.write().await;
        if st.revision == revision {
            st.cached = Some((revision, result.clone()));
        }
    }
    respond_estimate(revision, result)
}

fn respond_estimate(revision: u64, result: Result<String, ApiError>) -> Result<Response, ApiError> {
    match result {
        Ok(body) => Ok(with_revision(revision, ([(header::CONTENT_TYPE, "application/json")], body))),
        Err(e) => Err(e.at(revision)),
    }
}

#[derive(Deserialize)]
struct FrameQuery {
    session: String,
}

fn content_type_for(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        _ => "application/octet-stream",
    }
}

fn frame_image_path(session: &Session, project: &Project, index: u64) -> Result<PathBuf, ApiError> {
    let frame = project
        .frames
        .iter()
        .find(|f| f.index == index)
        .ok_or_else(|| ApiError::not_found(format!("no frame {index}")))?;
    let rel = frame.image_path.as_ref().ok_or_else(|| ApiError::not_found(format!("frame {index} has no image")))?;
    Ok(session.dir().join(rel))
}

async fn get_frame(
    State(app): State<AppState>,
    UrlPath(file): UrlPath<String>,
    Query(q): Query<FrameQuery>,
) -> Result<Response, ApiError> {
    let index: u64 = file
        .strip_suffix(".png")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ApiError::not_found(format!("no frame {file}")))?;
    let session = app.session(&q.session)?;
    let (path, revision) = {
        let st = session.state.read().await;
        (frame_image_path(&session, &st.project, index).map_err(|e| e.at(st.revision))?, st.revision)
    };
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::not_found(format!("cannot read {}: {e}", path.display())).at(revision))?;
    Ok(with_revision(revision, ([(header::CONTENT_TYPE, content_type_for(&path))], bytes)))
}

#[derive(Deserialize)]
struct PreviewQuery {
    #[serde(default)]
    frame: Option<u64>,
    #[serde(default = "default_px_per_m")]
    px_per_m: f64,
    #[serde(default = "default_margin")]
    margin_m: f64,
}

fn default_px_per_m() -> f64 {
    50.0
}

fn default_margin() -> f64 {
    2.0
}

async fn get_preview(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<PreviewQuery>,
) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    let (project, revision) = {
        let st = session.state.read().await;
        (st.project.clone(), st.revision)
    };
    let index = q
        .frame
        .or_else(|| project.path.cps.first().map(|c| c.frame))
        .or_else(|| project.frames.iter().find(|f| f.image_path.is_some()).map(|f| f.index))
        .ok_or_else(|| ApiError::not_found("no frame to preview").at(revision))?;
    let path = frame_image_path(&session, &project, index).map_err(|e| e.at(revision))?;
    let png = tokio::task::spawn_blocking(move || -> Result<Vec<u8>, ApiError> {
        let (chain, _, _) = pipeline::measurement_chain(&project)?;
        let grid = project.grid.as_ref().expect("chain implies grid");
        let bounds = GroundBounds::around_grid(grid, q.margin_m.max(0.0));
        let longest = (bounds.max_x - bounds.min_x).max(bounds.max_y - bounds.min_y);
        let ppm = q.px_per_m.clamp(1.0, MAX_PREVIEW_SIDE / longest);
        let image = image::open(&path)
            .map_err(|e| ApiError::not_found(format!("cannot decode {}: {e}", path.display())))?
            .to_rgb8();
        let out = rectify::render_rectified_preview(&chain, &image, &bounds, ppm);
        let mut buf = Cursor::new(Vec::new());
        out.write_to(&mut buf, image::ImageFormat::Png)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        Ok(buf.into_inner())
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(|e| e.at(revision))?;
    Ok(with_revision(revision, ([(header::CONTENT_TYPE, "image/png")], png)))
}

async fn save_session(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    // the read lock keeps mutations out while the file is written
    let st = session.state.read().await;
    let text = st
        .project
        .to_toml_string()
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).at(st.revision))?;
    let tmp = session.path.with_extension("fsp.tmp");
    let io = |e: std::io::Error| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).at(st.revision);
    tokio::fs::write(&tmp, text).await.map_err(io)?;
    tokio::fs::rename(&tmp, &session.path).await.map_err(io)?;
    Ok(with_revision(st.revision, Json(json!({ "revision": st.revision, "path": session.path }))))
}

/// Builds the API router. When `static_dir` is given, unmatched paths serve
/// files from it (the browser client's built assets).
pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/session", post(open_session))
        .route("/session/{id}/project", get(get_project))
        .route("/session/{id}/mutations", post(post_mutations))
        .route("/session/{id}/estimate", get(get_estimate))
        .route("/session/{id}/rectified-preview.png", get(get_preview))
        .route("/session/{id}/save", post(save_session))
        .route("/frames/{file}", get(get_frame))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves on an already bound listener until the process is stopped.
pub async fn serve(listener: tokio::net::TcpListener, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let app = router(AppState::new(), static_dir.as_deref());
    axum::serve(listener, app).await
}
