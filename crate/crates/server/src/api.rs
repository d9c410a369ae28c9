use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mdeal_core::cfr::LearnerState;
use mdeal_core::engine::{ConcreteAction, EngineError, GameConfig, InfoView};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::session::{now_ms, AgentMode, AgentStepReport, Event, Session, SessionError, SessionMeta, Status};
use crate::store::EventStore;

/// JSON error body `{code, message, detail}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>, detail: Value) -> Self {
        ApiError { status, code, message: message.into(), detail }
    }

    fn not_found(game_id: &str) -> Self {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "game_not_found",
            format!("no game `{game_id}`"),
            json!({ "game_id": game_id }),
        )
    }

    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_field", message, json!({ "field": field }))
    }

    fn storage(e: std::io::Error) -> Self {
        log::error!("event log write failed: {e}");
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "storage_error",
            "the event could not be persisted",
            json!({ "error": e.to_string() }),
        )
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::NotHumanTurn => ApiError::new(StatusCode::CONFLICT, "not_your_turn", message, Value::Null),
            SessionError::NotAgentTurn => ApiError::new(StatusCode::CONFLICT, "not_agent_turn", message, Value::Null),
            SessionError::Finished | SessionError::Engine(EngineError::Terminal) => {
                ApiError::new(StatusCode::CONFLICT, "game_finished", message, Value::Null)
            }
            SessionError::Engine(EngineError::Illegal { action, reason }) => ApiError::new(
                StatusCode::BAD_REQUEST,
                "illegal_action",
                reason.to_string(),
                json!({ "rule": reason.code(), "action": action }),
            ),
            SessionError::Engine(EngineError::Config { field, message }) => {
                ApiError::invalid(&format!("config.{field}"), message)
            }
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string(), Value::Null),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "code": self.code, "message": self.message, "detail": self.detail })))
            .into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Parses a request body, naming the offending field on failure.
fn parse_body<T: DeserializeOwned>(body: &[u8], root: &str) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            root.to_string()
        } else if root.is_empty() {
            path
        } else {
            format!("{root}.{path}")
        };
        ApiError::invalid(&field, e.inner().to_string())
    })
}

/// Shared server state: the loaded policy, storage, and every session.
pub struct AppState {
    learner: LearnerState,
    default_config: Arc<GameConfig>,
    store: Box<dyn EventStore>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    /// Rebuilds every stored session by replaying its log.
    pub fn new(learner: LearnerState, store: Box<dyn EventStore>) -> Result<Self, String> {
        let mut sessions = BTreeMap::new();
        for game in store.load_all().map_err(|e| format!("cannot read the event store: {e}"))? {
            let id = game.meta.game_id.clone();
            let session = Session::replay(game.meta, game.events).map_err(|e| format!("game `{id}`: {e}"))?;
            sessions.insert(id, Arc::new(Mutex::new(session)));
        }
        Ok(AppState {
            default_config: Arc::clone(&learner.config.game),
            learner,
            store,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("sessions lock").len()
    }

    fn session(&self, game_id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions.read().expect("sessions lock").get(game_id).cloned().ok_or_else(|| ApiError::not_found(game_id))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/games", post(create_game).get(list_games))
        .route("/games/{id}", get(get_game))
        .route("/games/{id}/actions", post(post_action))
        .route("/games/{id}/agent-step", post(agent_step))
        .route("/games/{id}/replay", get(replay))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "no_route", "no such endpoint", Value::Null) })
        .with_state(state)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateGame {
    /// Partial game config merged over the checkpoint's config.
    #[serde(default)]
    config: Option<Value>,
    #[serde(default)]
    human_player_idx: usize,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    label: Option<String>,
}

/// The human's view of a session.
#[derive(Serialize, Deserialize)]
pub struct GameResponse {
    pub game_id: String,
    pub human_player_idx: usize,
    pub seed: Option<u64>,
    pub label: Option<String>,
    pub status: Status,
    pub view: InfoView,
    pub events: Vec<Event>,
}

impl GameResponse {
    fn of(session: &Session) -> Self {
        GameResponse {
            game_id: session.meta.game_id.clone(),
            human_player_idx: session.meta.human_player_idx,
            seed: session.disclosed_seed(),
            label: session.meta.label.clone(),
            status: session.status(),
            view: session.human_view(),
            events: session.events.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct AgentStepResponse {
    pub report: AgentStepReport,
    pub game: GameResponse,
}

#[derive(Serialize, Deserialize)]
pub struct GameSummary {
    pub game_id: String,
    pub human_player_idx: usize,
    pub label: Option<String>,
    pub status: Status,
    pub event_count: usize,
    pub turn_idx: u32,
    pub created_ms: u64,
}

/// Everything needed to rebuild the game offline. `seed` is withheld while a server-drawn deal
/// is still in play.
#[derive(Serialize, Deserialize)]
pub struct ReplayResponse {
    pub game_id: String,
    pub config: Arc<GameConfig>,
    pub seed: Option<u64>,
    pub human_player_idx: usize,
    pub status: Status,
    pub events: Vec<Event>,
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(base), Value::Object(patch)) => {
            for (k, v) in patch {
                match base.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        base.insert(k, v);
                    }
                }
            }
        }
        (slot, patch) => *slot = patch,
    }
}

async fn create_game(
    State(app): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<GameResponse>), ApiError> {
    let body: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { &body };
    let req: CreateGame = parse_body(body, "")?;
    if req.human_player_idx > 1 {
        return Err(ApiError::invalid("human_player_idx", "must be 0 or 1 in a two-player game"));
    }
    let config = match req.config {
        None => Arc::clone(&app.default_config),
        Some(patch) => {
            let mut merged = serde_json::to_value(&*app.default_config).expect("configs serialize");
            merge(&mut merged, patch);
            let config: GameConfig = parse_body(merged.to_string().as_bytes(), "config")?;
            Arc::new(config)
        }
    };
    let meta = SessionMeta {
        game_id: format!("g-{:016x}", rand::random::<u64>()),
        config,
        seed: req.seed.unwrap_or_else(rand::random),
        seed_from_client: req.seed.is_some(),
        human_player_idx: req.human_player_idx,
        label: req.label,
        created_ms: now_ms(),
    };
    let session = Session::new(meta).map_err(SessionError::from)?;
    app.store.create(&session.meta).map_err(ApiError::storage)?;
    let response = GameResponse::of(&session);
    app.sessions.write().expect("sessions lock").insert(session.meta.game_id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(response)))
}

async fn list_games(State(app): State<Arc<AppState>>) -> Json<Vec<GameSummary>> {
    let sessions: Vec<_> = app.sessions.read().expect("sessions lock").values().cloned().collect();
    let mut out: Vec<GameSummary> = sessions
        .iter()
        .map(|s| {
            let s = s.lock().expect("session lock");
            GameSummary {
                game_id: s.meta.game_id.clone(),
                human_player_idx: s.meta.human_player_idx,
                label: s.meta.label.clone(),
                status: s.status(),
                event_count: s.events.len(),
                turn_idx: s.world.turn.turn_idx,
                created_ms: s.meta.created_ms,
            }
        })
        .collect();
    out.sort_by(|a, b| (a.created_ms, &a.game_id).cmp(&(b.created_ms, &b.game_id)));
    Json(out)
}

async fn get_game(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<GameResponse> {
    let session = app.session(&id)?;
    let session = session.lock().expect("session lock");
    Ok(Json(GameResponse::of(&session)))
}

async fn post_action(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<GameResponse> {
    let handle = app.session(&id)?;
    let action: ConcreteAction = parse_body(&body, "action")?;
    // The session lock is held across the durable write, so one writer per session.
    let mut session = handle.lock().expect("session lock");
    let pending = session.plan_human(action)?;
    app.store.append(&id, &pending.event).map_err(ApiError::storage)?;
    session.commit(pending);
    Ok(Json(GameResponse::of(&session)))
}

async fn agent_step(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<AgentStepResponse> {
    let mode = match query.get("mode").map(String::as_str) {
        None | Some("sample") => AgentMode::Sample,
        Some("argmax") => AgentMode::Argmax,
        Some(other) => {
            return Err(ApiError::invalid("mode", format!("unknown mode `{other}`; expected sample or argmax")))
        }
    };
    let handle = app.session(&id)?;
    let mut session = handle.lock().expect("session lock");
    let pending = session.plan_agent(&app.learner, mode)?;
    app.store.append(&id, &pending.event).map_err(ApiError::storage)?;
    let report = pending.event.agent.clone().expect("agent events carry a report");
    session.commit(pending);
    Ok(Json(AgentStepResponse { report, game: GameResponse::of(&session) }))
}

async fn replay(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<ReplayResponse> {
    let session = app.session(&id)?;
    let session = session.lock().expect("session lock");
    Ok(Json(ReplayResponse {
        game_id: session.meta.game_id.clone(),
        config: Arc::clone(&session.meta.config),
        seed: session.disclosed_seed(),
        human_player_idx: session.meta.human_player_idx,
        status: session.status(),
        events: session.events.clone(),
    }))
}

/// Serves `app` on `listener` until the process exits.
pub async fn serve(listener: tokio::net::TcpListener, app: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(app)).await
}
