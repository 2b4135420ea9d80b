//! JSON over HTTP. Every route is scoped by fridge id; errors come back as
//! `{"error": code, "message": text}`. Any JSON response can be wrapped as
//! JSONP by adding `callback=name` to the query.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use coldbench_core::detection::{LedColor, Timestamp};
use coldbench_core::takeout::{ItemTags, Suggestion};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::ServiceError;
use crate::hub::Hub;
use crate::model::{EventEnvelope, HistoryEntry, IncomingEvent, StateView};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownFridge(_) | ServiceError::NoRoute(_) | ServiceError::SimDisabled => {
                StatusCode::NOT_FOUND
            }
            ServiceError::InvalidEvent(_)
            | ServiceError::PositionOutOfRange { .. }
            | ServiceError::SimCommand(_)
            | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::PositionEmpty(_) => StatusCode::CONFLICT,
            ServiceError::Io(_) | ServiceError::CorruptLog { .. } | ServiceError::Config(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let body = ErrorBody {
            error: self.code().to_string(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

type ApiResult<T> = Result<Json<T>, ServiceError>;

fn bad_query(e: QueryRejection) -> ServiceError {
    ServiceError::BadRequest(e.body_text())
}

fn bad_json(e: JsonRejection) -> ServiceError {
    ServiceError::BadRequest(e.body_text())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registered {
    pub fridge_id: String,
}

#[derive(Debug, Deserialize)]
struct HistoryQuery {
    since: Option<Timestamp>,
    item: Option<String>,
}

#[derive(Debug, Deserialize)]
struct PollQuery {
    cursor: Option<u64>,
    timeout_ms: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct NowQuery {
    now: Option<Timestamp>,
}

#[derive(Debug, Deserialize)]
struct SearchQuery {
    #[serde(default)]
    q: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedsView {
    pub fridge_id: String,
    pub leds: Vec<LedColor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionsView {
    pub fridge_id: String,
    pub now: Timestamp,
    pub items: Vec<Suggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchView {
    pub fridge_id: String,
    pub query: String,
    pub items: Vec<Suggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagsBody {
    pub tags: Vec<String>,
}

/// Body of `POST /fridges/{id}/sim/commands`: either a list of command
/// lines or one script text.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimRequest {
    #[serde(default)]
    pub commands: Vec<String>,
    #[serde(default)]
    pub script: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResponse {
    pub applied: usize,
    /// Virtual time after the batch.
    pub now: Timestamp,
    pub events: Vec<EventEnvelope>,
}

async fn register(State(hub): State<Arc<Hub>>) -> Result<(StatusCode, Json<Registered>), ServiceError> {
    let fridge_id = hub.register()?;
    Ok((StatusCode::CREATED, Json(Registered { fridge_id })))
}

async fn publish(
    State(hub): State<Arc<Hub>>,
    Path(id): Path<String>,
    body: Result<Json<IncomingEvent>, JsonRejection>,
) -> Result<(StatusCode, Json<EventEnvelope>), ServiceError> {
    let Json(event) = body.map_err(bad_json)?;
    let env = hub.publish(&id, event)?;
    Ok((StatusCode::CREATED, Json((*env).clone())))
}

async fn state(State(hub): State<Arc<Hub>>, Path(id): Path<String>) -> ApiResult<StateView> {
    let fridge = hub.fridge(&id)?;
    Ok(Json(fridge.state().view(&id)))
}

async fn history(
    State(hub): State<Arc<Hub>>,
    Path(id): Path<String>,
    query: Result<Query<HistoryQuery>, QueryRejection>,
) -> ApiResult<Vec<HistoryEntry>> {
    let Query(q) = query.map_err(bad_query)?;
    let fridge = hub.fridge(&id)?;
    Ok(Json(fridge.history(q.since, q.item.as_deref())))
}

async fn poll(
    State(hub): State<Arc<Hub>>,
    Path(id): Path<String>,
    query: Result<Query<PollQuery>, QueryRejection>,
) -> ApiResult<Vec<EventEnvelope>> {
    let Query(q) = query.map_err(bad_query)?;
    let fridge = hub.fridge(&id)?;
    let envelopes = fridge
        .poll(q.cursor.unwrap_or(0), Hub::poll_timeout(q.timeout_ms))
        .await;
    Ok(Json(envelopes.iter().map(|e| (**e).clone()).collect()))
}

async fn leds(
    State(hub): State<Arc<Hub>>,
    Path(id): Path<String>,
    query: Result<Query<NowQuery>, QueryRejection>,
) -> ApiResult<LedsView> {
    let Query(q) = query.map_err(bad_query)?;
    let fridge = hub.fridge(&id)?;
    let now = q.now.unwrap_or_else(|| fridge.now());
    Ok(Json(LedsView {
        leds: fridge.leds(now),
        fridge_id: id,
    }))
}

async fn alerts(
    State(hub): State<Arc<Hub>>,
    Path(id): Path<String>,
    query: Result<Query<NowQuery>, QueryRejection>,
) -> ApiResult<SuggestionsView> {
    let Query(q) = query.map_err(bad_query)?;
    let fridge = hub.fridge(&id)?;
    let now = q.now.unwrap_or_else(|| fridge.now());
    Ok(Json(SuggestionsView {
        items: fridge.alerts(now),
        fridge_id: id,
        now,
    }))
}

async fn recommendations(
    State(hub): State<Arc<Hub>>,
    Path(id): Path<String>,
    query: Result<Query<NowQuery>, QueryRejection>,
) -> ApiResult<SuggestionsView> {
    let Query(q) = query.map_err(bad_query)?;
    let fridge = hub.fridge(&id)?;
    let now = q.now.unwrap_or_else(|| fridge.now());
    Ok(Json(SuggestionsView {
        items: fridge.recommendations(now),
        fridge_id: id,
        now,
    }))
}

async fn search(
    State(hub): State<Arc<Hub>>,
    Path(id): Path<String>,
    query: Result<Query<SearchQuery>, QueryRejection>,
) -> ApiResult<SearchView> {
    let Query(q) = query.map_err(bad_query)?;
    let fridge = hub.fridge(&id)?;
    Ok(Json(SearchView {
        items: fridge.search(&q.q),
        fridge_id: id,
        query: q.q,
    }))
}

async fn put_tags(
    State(hub): State<Arc<Hub>>,
    Path((id, name)): Path<(String, String)>,
    body: Result<Json<TagsBody>, JsonRejection>,
) -> ApiResult<ItemTags> {
    let Json(body) = body.map_err(bad_json)?;
    let fridge = hub.fridge(&id)?;
    Ok(Json(fridge.set_tags(&name, body.tags)?))
}

async fn sim_commands(
    State(hub): State<Arc<Hub>>,
    Path(id): Path<String>,
    body: Result<Json<SimRequest>, JsonRejection>,
) -> ApiResult<SimResponse> {
    let Json(body) = body.map_err(bad_json)?;
    let mut script = body.commands.join("\n");
    if let Some(text) = body.script {
        script.push('\n');
        script.push_str(&text);
    }
    let hub2 = hub.clone();
    let outcome = tokio::task::spawn_blocking(move || hub2.sim_commands(&id, &script))
        .await
        .map_err(|e| ServiceError::SimCommand(e.to_string()))??;
    if let Some(error) = outcome.error {
        return Err(ServiceError::SimCommand(format!(
            "{error} ({} commands applied, {} events published)",
            outcome.applied,
            outcome.events.len()
        )));
    }
    Ok(Json(SimResponse {
        applied: outcome.applied,
        now: outcome.now,
        events: outcome.events.iter().map(|e| (**e).clone()).collect(),
    }))
}

async fn not_found(request: Request) -> ServiceError {
    ServiceError::NoRoute(format!("{} {}", request.method(), request.uri().path()))
}

fn valid_callback(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 128
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '$' | '.'))
}

async fn jsonp(request: Request, next: Next) -> Response {
    let callback = Query::<HashMap<String, String>>::try_from_uri(request.uri())
        .ok()
        .and_then(|Query(mut q)| q.remove("callback"));
    let Some(callback) = callback else {
        return next.run(request).await;
    };
    if !valid_callback(&callback) {
        return ServiceError::BadRequest(format!("invalid callback name {callback:?}")).into_response();
    }
    let response = next.run(request).await;
    let is_json = response
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    if !is_json {
        return response;
    }
    let (mut parts, body) = response.into_parts();
    let Ok(bytes) = to_bytes(body, usize::MAX).await else {
        return ServiceError::BadRequest("unreadable response body".into()).into_response();
    };
    let mut wrapped = Vec::with_capacity(bytes.len() + callback.len() + 8);
    wrapped.extend_from_slice(b"/**/");
    wrapped.extend_from_slice(callback.as_bytes());
    wrapped.push(b'(');
    wrapped.extend_from_slice(&bytes);
    wrapped.extend_from_slice(b");");
    parts.headers.insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static("application/javascript; charset=utf-8"),
    );
    parts.headers.remove(header::CONTENT_LENGTH);
    Response::from_parts(parts, Body::from(wrapped))
}

/// The full API. `console_dir`, when given, is served under `/console/`.
pub fn router(hub: Arc<Hub>, console_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/fridges", post(register))
        .route("/fridges/{id}/events", post(publish))
        .route("/fridges/{id}/state", get(state))
        .route("/fridges/{id}/history", get(history))
        .route("/fridges/{id}/poll", get(poll))
        .route("/fridges/{id}/leds", get(leds))
        .route("/fridges/{id}/alerts", get(alerts))
        .route("/fridges/{id}/recommendations", get(recommendations))
        .route("/fridges/{id}/search", get(search))
        .route("/fridges/{id}/items/{name}/tags", put(put_tags))
        .route("/fridges/{id}/sim/commands", post(sim_commands))
        .layer(middleware::from_fn(jsonp))
        .with_state(hub);
    let api = match console_dir {
        Some(dir) => api.nest_service("/console", ServeDir::new(dir)),
        None => api,
    };
    api.fallback(not_found)
}
