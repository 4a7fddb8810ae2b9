//! HTTP+JSON session service.
//!
//! Each session sits behind its own async mutex. Mutating requests take it
//! with `try_lock`, so a second in-flight request on the same session gets
//! `409 CONFLICT` instead of queueing, and the adaptation itself runs on the
//! blocking pool.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use prefloop_core::planner::RouteSet;
use prefloop_core::session::{Recommendation, SessionSettings};
use prefloop_core::{ComplaintMessage, Error, FitnessParams, GaConfig, MapGraph, PreferenceVector, Session};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, OwnedMutexGuard, RwLock};

#[derive(Debug)]
pub enum ApiError {
    Core(Error),
    Conflict(String),
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::Core(e)
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match self {
            ApiError::Conflict(m) => (StatusCode::CONFLICT, "CONFLICT", m),
            ApiError::Core(e) => {
                let status = match &e {
                    Error::SessionNotFound(_) => StatusCode::NOT_FOUND,
                    Error::OutOfOrderMessage(_) => StatusCode::CONFLICT,
                    Error::Io(_) | Error::Csv(_) => StatusCode::INTERNAL_SERVER_ERROR,
                    Error::Parse(_) => StatusCode::BAD_REQUEST,
                    _ => StatusCode::UNPROCESSABLE_ENTITY,
                };
                (status, e.code(), e.to_string())
            }
        };
        let body = ErrorBody {
            code: code.to_string(),
            message,
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    maps: Vec<Arc<RouteSet>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    snapshot_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(maps: Vec<MapGraph>, snapshot_dir: Option<PathBuf>) -> prefloop_core::Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidConfig("the service needs at least one map".into()));
        }
        let maps = prefloop_core::experiment::prepare_maps(maps)?;
        if let Some(dir) = &snapshot_dir {
            std::fs::create_dir_all(dir)?;
        }
        Ok(AppState {
            inner: Arc::new(Inner {
                maps,
                sessions: RwLock::new(HashMap::new()),
                snapshot_dir,
            }),
        })
    }

    async fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.inner
            .sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| Error::SessionNotFound(id.to_string()).into())
    }

    async fn lock(&self, id: &str) -> ApiResult<OwnedMutexGuard<Session>> {
        self.session(id)
            .await?
            .try_lock_owned()
            .map_err(|_| ApiError::Conflict(format!("session `{id}` is busy with another request")))
    }

    fn snapshot(&self, session: &Session) -> prefloop_core::Result<()> {
        if let Some(dir) = &self.inner.snapshot_dir {
            let body = serde_json::to_vec_pretty(&session.state())?;
            std::fs::write(dir.join(format!("{}.json", session.id())), body)?;
        }
        Ok(())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/maps", get(list_maps))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/routes", get(get_routes))
        .route("/sessions/{id}/complaint", post(post_complaint))
        .route("/sessions/{id}/rating", post(post_rating))
        .with_state(state)
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| Error::Parse(e).into())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MapInfo {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub routes: usize,
    pub shortest_length: u32,
}

async fn list_maps(State(state): State<AppState>) -> Json<Vec<MapInfo>> {
    Json(
        state
            .inner
            .maps
            .iter()
            .map(|set| MapInfo {
                name: set.map().name().to_string(),
                nodes: set.map().nodes().len(),
                edges: set.map().edges().len(),
                routes: set.routes().len(),
                shortest_length: set.map().shortest_length(),
            })
            .collect(),
    )
}

/// Optional body of `POST /sessions`.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreateSession {
    pub config: Option<SessionConfig>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Subset of the served maps by name, in session order.
    pub maps: Option<Vec<String>>,
    pub initial: Option<PreferenceVector>,
    pub fitness: Option<FitnessParams>,
    pub ga: Option<GaConfig>,
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub recommendation: Recommendation,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Created>)> {
    let request: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        parse_body(&body)?
    };
    let config = request.config.unwrap_or_default();
    let maps = match &config.maps {
        None => state.inner.maps.clone(),
        Some(names) => names
            .iter()
            .map(|name| {
                state
                    .inner
                    .maps
                    .iter()
                    .find(|m| m.map().name() == name)
                    .cloned()
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown map `{name}`")))
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    let settings = SessionSettings {
        initial: config.initial,
        fitness: config.fitness.unwrap_or_default(),
        ga: config.ga.unwrap_or_default(),
        seed: config.seed.unwrap_or(0),
    };
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::new(id.clone(), maps, settings)?;
    let recommendation = session.recommendation().expect("new sessions have a current map");
    state.snapshot(&session)?;
    state
        .inner
        .sessions
        .write()
        .await
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(Created { id, recommendation })))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = state.lock(&id).await?;
    Ok(Json(session.state()).into_response())
}

async fn get_routes(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let session = state.lock(&id).await?;
    Ok(Json(session.routes_view()?).into_response())
}

async fn post_complaint(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let message: ComplaintMessage = parse_body(&body)?;
    let mut session = state.lock(&id).await?;
    let snapshots = state.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let outcome = session.complain(&message)?;
        snapshots.snapshot(&session)?;
        Ok::<_, Error>(outcome)
    })
    .await
    .map_err(|e| Error::InvalidConfig(format!("adaptation task failed: {e}")))??;
    Ok(Json(outcome).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingRequest {
    pub route_id: usize,
    pub likert: u8,
}

async fn post_rating(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<StatusCode> {
    let rating: RatingRequest = parse_body(&body)?;
    let mut session = state.lock(&id).await?;
    session.rate(rating.route_id, rating.likert)?;
    state.snapshot(&session)?;
    Ok(StatusCode::NO_CONTENT)
}

pub async fn serve(state: AppState, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    eprintln!("prefloop listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
