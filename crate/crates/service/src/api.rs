//! HTTP handlers.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use routeplace_core::disambiguator::{
    Answer, Choice, DisambiguationSession, InsertionProblem, SearchMode, SessionState,
};
use routeplace_core::engine::{overlap_census, OverlapReport, Verdict};
use routeplace_core::model::{validate_config, Config, Diagnostic, Route};
use routeplace_core::parser::{parse_config, parse_stanza_snippet, print_config, ParseError};
use routeplace_core::render::{render_route, render_verdict};
use routeplace_core::synthesizer::{
    classify_query, run_repair_loop, Fault, FaultyPlugin, GeneratorPlugin, HttpPlugin, LoopOutcome, QueryKind,
    ScriptedFixture, ScriptedPlugin, SynthesisError, SynthesisRequest, DEFAULT_THRESHOLD,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::store::{Shared, Store, StoreError};
use crate::workspace::{content_id, unified_diff, Applied, AuditEntry, LoopRecord, Review, SessionRecord, Workspace};
use crate::ServiceConfig;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub config: Arc<ServiceConfig>,
}

// ---- errors ----

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Conflict(String),
    Invalid { path: String, message: String, details: Option<Value> },
    Gateway(String),
    Internal(String),
}

impl ApiError {
    fn invalid(path: impl Into<String>, message: impl ToString) -> Self {
        ApiError::Invalid { path: path.into(), message: message.to_string(), details: None }
    }

    fn parse_errors(path: &str, errors: Vec<ParseError>) -> Self {
        ApiError::Invalid {
            path: path.into(),
            message: errors.first().map(ToString::to_string).unwrap_or_default(),
            details: Some(json!(errors)),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({"error": "notFound", "message": m})),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, json!({"error": "conflict", "message": m})),
            ApiError::Invalid { path, message, details } => {
                let mut body = json!({"error": "invalid", "path": path, "message": message});
                if let Some(d) = details {
                    body["details"] = d;
                }
                (StatusCode::UNPROCESSABLE_ENTITY, body)
            }
            ApiError::Gateway(m) => (StatusCode::BAD_GATEWAY, json!({"error": "gateway", "message": m})),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, json!({"error": "internal", "message": m})),
        };
        (status, Json(body)).into_response()
    }
}

/// JSON body whose decode errors come back as 422 with the field path.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state).await.map_err(|e| ApiError::invalid("", e.body_text()))?;
        let de = &mut serde_json::Deserializer::from_slice(&bytes);
        serde_path_to_error::deserialize(de).map(Body).map_err(|e| {
            let path = e.path().to_string();
            ApiError::invalid(if path == "." { String::new() } else { path }, e.into_inner())
        })
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))?
}

/// Runs `f` on a copy of the workspace and keeps the result only if it
/// persisted.
fn mutate<T>(
    store: &Store,
    shared: &Shared,
    f: impl FnOnce(&mut Workspace) -> Result<T, ApiError>,
) -> Result<T, ApiError> {
    let mut ws = shared.lock().expect("workspace lock");
    let mut next = ws.clone();
    let out = f(&mut next)?;
    store.persist(&next)?;
    *ws = next;
    Ok(out)
}

fn workspace(state: &AppState, id: &str) -> Result<Shared, ApiError> {
    state.store.workspace(id).ok_or_else(|| ApiError::NotFound(format!("workspace `{id}`")))
}

fn session_workspace(state: &AppState, sid: &str) -> Result<Shared, ApiError> {
    state.store.session_workspace(sid).ok_or_else(|| ApiError::NotFound(format!("session `{sid}`")))
}

// ---- views ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuestionView {
    pub seq: u32,
    pub witness: Route,
    pub existing: Verdict,
    pub new: Verdict,
    pub input_text: String,
    /// The new stanza's behavior, shown first.
    pub option1_text: String,
    /// Current behavior.
    pub option2_text: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    pub id: String,
    pub workspace_id: String,
    pub target_map: String,
    pub mode: SearchMode,
    pub chain: Vec<u32>,
    pub window: [usize; 2],
    pub answers: Vec<Answer>,
    pub questions_asked: usize,
    pub question_bound: usize,
    pub state: SessionState,
    pub question: Option<QuestionView>,
    pub final_config: Option<String>,
    pub route_map: Option<String>,
    pub diff: Option<String>,
}

fn session_view(workspace_id: &str, sid: &str, rec: &SessionRecord) -> SessionView {
    let s = &rec.session;
    let question = s.pending().map(|q| QuestionView {
        seq: q.seq,
        witness: q.witness.clone(),
        existing: q.option_a.clone(),
        new: q.option_b.clone(),
        input_text: render_route(&q.witness),
        option1_text: render_verdict(&q.option_b),
        option2_text: render_verdict(&q.option_a),
        text: q.render(),
    });
    let route_map = rec.applied.as_ref().map(|a| {
        let c = parse_config(&a.final_config).expect("applied config is canonical");
        let mut only = Config::default();
        if let Some(m) = c.route_maps.get(&rec.target_map) {
            only.route_maps.insert(m.name.clone(), m.clone());
        }
        print_config(&only)
    });
    SessionView {
        id: sid.to_string(),
        workspace_id: workspace_id.to_string(),
        target_map: rec.target_map.clone(),
        mode: s.mode,
        chain: s.chain.seqs(),
        window: [s.lo, s.hi],
        answers: s.answers.clone(),
        questions_asked: s.questions_asked(),
        question_bound: s.question_bound(),
        state: s.state.clone(),
        question,
        final_config: rec.applied.as_ref().map(|a| a.final_config.clone()),
        route_map,
        diff: rec.applied.as_ref().map(|a| a.diff.clone()),
    }
}

/// Applies a finished session to the workspace and logs it.
fn apply_if_done(ws: &mut Workspace, sid: &str) -> Result<(), ApiError> {
    let rec = ws.sessions.get_mut(sid).expect("session exists");
    if rec.applied.is_some() || !matches!(rec.session.state, SessionState::Done { .. }) {
        return Ok(());
    }
    let config =
        rec.session.result().expect("done").map_err(|e| ApiError::Internal(format!("insertion failed: {e}")))?;
    let final_config = print_config(&config);
    let diff = unified_diff(&rec.base_text, &final_config);
    rec.applied = Some(Applied { final_config: final_config.clone(), diff });
    let entry = AuditEntry {
        session_id: sid.to_string(),
        target_map: rec.target_map.clone(),
        snippet: rec.snippet.clone(),
        mode: rec.session.mode,
        answers: rec.session.answers.iter().map(|a| a.choice).collect(),
    };
    ws.audit.push(entry);
    ws.config_text = final_config;
    Ok(())
}

// ---- handlers ----

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CreateWorkspace {
    config_text: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Created {
    id: String,
    diagnostics: Vec<Diagnostic>,
}

async fn create_workspace(State(st): State<AppState>, Body(body): Body<CreateWorkspace>) -> Result<Response, ApiError> {
    blocking(move || {
        let config = parse_config(&body.config_text).map_err(|e| ApiError::parse_errors("configText", e))?;
        let diagnostics = validate_config(&config);
        let id = content_id(&["workspace", &st.store.len().to_string(), &body.config_text]);
        st.store.insert(Workspace::new(id.clone(), body.config_text, &config))?;
        Ok((StatusCode::CREATED, Json(Created { id, diagnostics })).into_response())
    })
    .await
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WorkspaceView {
    id: String,
    config_text: String,
    loops: Vec<String>,
    sessions: Vec<String>,
    audit: Vec<AuditEntry>,
}

async fn get_workspace(State(st): State<AppState>, Path(id): Path<String>) -> Result<Json<WorkspaceView>, ApiError> {
    let shared = workspace(&st, &id)?;
    let ws = shared.lock().expect("workspace lock");
    Ok(Json(WorkspaceView {
        id: ws.id.clone(),
        config_text: ws.config_text.clone(),
        loops: ws.loops.keys().cloned().collect(),
        sessions: ws.sessions.keys().cloned().collect(),
        audit: ws.audit.clone(),
    }))
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "camelCase")]
enum PluginKind {
    Scripted,
    Faulty,
    Http,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Synthesize {
    intent: String,
    plugin: PluginKind,
    #[serde(default)]
    threshold: Option<usize>,
    /// Fault injected by the `faulty` plugin on its first attempt.
    #[serde(default)]
    fault: Option<Fault>,
    /// Overrides the server's scripted fixtures.
    #[serde(default)]
    fixtures: Option<Vec<ScriptedFixture>>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SynthesisView {
    loop_id: String,
    kind: QueryKind,
    review: Review,
    outcome: LoopOutcome,
}

fn build_plugin(cfg: &ServiceConfig, body: &Synthesize) -> Result<Box<dyn GeneratorPlugin>, ApiError> {
    let scripted = || ScriptedPlugin::new(body.fixtures.clone().unwrap_or_else(|| cfg.fixtures.clone()));
    Ok(match body.plugin {
        PluginKind::Scripted => Box::new(scripted()),
        PluginKind::Faulty => {
            Box::new(FaultyPlugin::first_attempt(scripted(), body.fault.unwrap_or(Fault::WrongMetric)))
        }
        PluginKind::Http => {
            let endpoint =
                cfg.gateway.clone().ok_or_else(|| ApiError::invalid("plugin", "no generator gateway is configured"))?;
            Box::new(HttpPlugin::new(endpoint, cfg.gateway_timeout).map_err(|e| ApiError::Gateway(e.to_string()))?)
        }
    })
}

async fn synthesize(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<Synthesize>,
) -> Result<Json<SynthesisView>, ApiError> {
    let shared = workspace(&st, &id)?;
    blocking(move || {
        let plugin = build_plugin(&st.config, &body)?;
        let kind = plugin.classify(&body.intent).unwrap_or_else(|| classify_query(&body.intent));
        let req = SynthesisRequest::new(body.intent.clone(), kind);
        let outcome = run_repair_loop(&req, plugin.as_ref(), body.threshold.unwrap_or(DEFAULT_THRESHOLD)).map_err(
            |e| match e {
                SynthesisError::ZeroThreshold => ApiError::invalid("threshold", e),
                SynthesisError::UnsupportedKind(_) => ApiError::invalid("intent", e),
                SynthesisError::InvalidSpec(_) => ApiError::Gateway(e.to_string()),
            },
        )?;
        mutate(&st.store, &shared, |ws| {
            let loop_id = ws.next_id();
            let rec = LoopRecord { intent: body.intent, kind, outcome: outcome.clone(), review: Review::Pending };
            ws.loops.insert(loop_id.clone(), rec);
            Ok(Json(SynthesisView { loop_id, kind, review: Review::Pending, outcome }))
        })
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ConfirmSpec {
    loop_id: String,
    approved: bool,
}

async fn confirm_spec(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<ConfirmSpec>,
) -> Result<Json<Value>, ApiError> {
    let shared = workspace(&st, &id)?;
    blocking(move || {
        mutate(&st.store, &shared, |ws| {
            let rec = ws
                .loops
                .get_mut(&body.loop_id)
                .ok_or_else(|| ApiError::NotFound(format!("loop `{}`", body.loop_id)))?;
            if !rec.outcome.is_verified() {
                return Err(ApiError::Conflict("the loop did not produce a verified stanza".into()));
            }
            if rec.review != Review::Pending {
                return Err(ApiError::Conflict(format!("the JSON spec was already reviewed ({:?})", rec.review)));
            }
            rec.review = if body.approved { Review::Approved } else { Review::Rejected };
            Ok(Json(json!({"loopId": body.loop_id, "review": rec.review})))
        })
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct Disambiguate {
    target_map: String,
    #[serde(default)]
    snippet: Option<String>,
    /// Use the stanza of an approved synthesis loop instead of `snippet`.
    #[serde(default)]
    loop_id: Option<String>,
    #[serde(default)]
    mode: Option<SearchMode>,
}

async fn disambiguate(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<Disambiguate>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let shared = workspace(&st, &id)?;
    let store = st.store.clone();
    let (sid, view) = blocking(move || {
        mutate(&store, &shared, |ws| {
            let snippet_text = match (&body.snippet, &body.loop_id) {
                (Some(s), None) => s.clone(),
                (None, Some(l)) => {
                    let rec = ws.loops.get(l).ok_or_else(|| ApiError::NotFound(format!("loop `{l}`")))?;
                    match (&rec.outcome, rec.review) {
                        (LoopOutcome::Verified { snippet, .. }, Review::Approved) => snippet.clone(),
                        _ => return Err(ApiError::Conflict("the loop's spec has not been approved".into())),
                    }
                }
                _ => return Err(ApiError::invalid("snippet", "give exactly one of `snippet` and `loopId`")),
            };
            let snippet = parse_stanza_snippet(&snippet_text).map_err(|e| ApiError::parse_errors("snippet", e))?;
            let problem = InsertionProblem::new(&ws.config(), &body.target_map, &snippet)
                .map_err(|e| ApiError::invalid("snippet", e))?;
            let session = DisambiguationSession::start(problem, body.mode.unwrap_or(SearchMode::Binary))
                .map_err(|e| ApiError::invalid("snippet", e))?;
            let sid = ws.next_id();
            let rec = SessionRecord {
                target_map: body.target_map.clone(),
                snippet: snippet_text,
                base_text: ws.config_text.clone(),
                session,
                applied: None,
            };
            ws.sessions.insert(sid.clone(), rec);
            apply_if_done(ws, &sid)?;
            Ok((sid.clone(), session_view(&ws.id, &sid, &ws.sessions[&sid])))
        })
    })
    .await?;
    st.store.register_session(&sid, &id);
    Ok((StatusCode::CREATED, Json(view)))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct AnswerBody {
    choice: Choice,
}

async fn answer(
    State(st): State<AppState>,
    Path(sid): Path<String>,
    Body(body): Body<AnswerBody>,
) -> Result<Json<SessionView>, ApiError> {
    let shared = session_workspace(&st, &sid)?;
    blocking(move || {
        mutate(&st.store, &shared, |ws| {
            let current = ws.config_text.clone();
            let rec = ws.sessions.get_mut(&sid).expect("indexed session");
            if rec.session.is_finished() {
                return Err(ApiError::Conflict("the session is finished".into()));
            }
            if rec.base_text != current {
                return Err(ApiError::Conflict("the workspace config changed since this session started".into()));
            }
            rec.session.answer(body.choice).map_err(|e| ApiError::Conflict(e.to_string()))?;
            apply_if_done(ws, &sid)?;
            Ok(Json(session_view(&ws.id, &sid, &ws.sessions[&sid])))
        })
    })
    .await
}

async fn get_session(State(st): State<AppState>, Path(sid): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let shared = session_workspace(&st, &sid)?;
    let ws = shared.lock().expect("workspace lock");
    Ok(Json(session_view(&ws.id, &sid, &ws.sessions[&sid])))
}

async fn overlaps(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<OverlapReport>, ApiError> {
    let include_trivial = match q.get("includeTrivial").map(String::as_str) {
        None | Some("true") | Some("1") => true,
        Some("false") | Some("0") => false,
        Some(other) => {
            return Err(ApiError::invalid("includeTrivial", format!("expected true or false, got `{other}`")))
        }
    };
    let shared = workspace(&st, &id)?;
    blocking(move || {
        let config = shared.lock().expect("workspace lock").config();
        let report = overlap_census(&config).map_err(|e| ApiError::Internal(e.to_string()))?;
        Ok(Json(if include_trivial { report } else { report.without_trivial() }))
    })
    .await
}

pub fn routes(state: AppState) -> Router {
    Router::new()
        .route("/workspaces", post(create_workspace))
        .route("/workspaces/{id}", get(get_workspace))
        .route("/workspaces/{id}/synthesize", post(synthesize))
        .route("/workspaces/{id}/confirm-spec", post(confirm_spec))
        .route("/workspaces/{id}/disambiguate", post(disambiguate))
        .route("/workspaces/{id}/overlaps", get(overlaps))
        .route("/sessions/{sid}", get(get_session))
        .route("/sessions/{sid}/answer", post(answer))
        .with_state(state)
}
