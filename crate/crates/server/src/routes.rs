use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use crafteam_core::session::{HumanAction, SessionEvent};
use crafteam_core::team::{MemberId, TeamConfig};
use futures::stream;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::app::{spawn_driver, AppState, Source};
use crate::error::ApiError;

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/teams", post(create_team))
        .route("/teams/{id}", get(get_team))
        .route("/teams/{id}/sessions", post(start_session))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/actions", post(submit_action))
        .route("/sessions/{id}/end", post(end_session))
        .route("/sessions/{id}/reflection", get(reflection))
        .route("/sessions/{id}/timeline", get(timeline))
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(state)
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(ApiError::malformed)
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", e.body_text()))
}

async fn blocking<R: Send + 'static>(
    f: impl FnOnce() -> Result<R, ApiError> + Send + 'static,
) -> Result<R, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

async fn create_team(State(app): Shared, body: Bytes) -> Result<Response, ApiError> {
    let config: TeamConfig = parse(&body)?;
    let id = app.create_team(&config)?;
    Ok((StatusCode::CREATED, Json(json!({ "team_id": id }))).into_response())
}

async fn get_team(State(app): Shared, Path(id): Path<String>) -> Result<Json<TeamConfig>, ApiError> {
    Ok(Json(app.team(&id)?))
}

#[derive(Deserialize)]
struct StartQuery {
    #[serde(default)]
    seed: u64,
    #[serde(default = "one")]
    time_scale: f64,
}

fn one() -> f64 {
    1.0
}

async fn start_session(
    State(app): Shared,
    Path(id): Path<String>,
    q: Result<Query<StartQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let q = query(q)?;
    let a = app.clone();
    let (session_id, live) = blocking(move || a.start_session(&id, q.seed, q.time_scale)).await?;
    if let Some(tick) = app.config.tick {
        spawn_driver(Arc::downgrade(&live), tick);
    }
    Ok((StatusCode::CREATED, Json(json!({ "session_id": session_id }))).into_response())
}

#[derive(Deserialize)]
struct EventsQuery {
    #[serde(default)]
    from_seq: u64,
}

fn frame(events: &[SessionEvent]) -> Bytes {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_json_line());
        out.push('\n');
    }
    Bytes::from(out)
}

/// One JSON event per line. A live session keeps the response open until
/// it is sealed; a stored log is sent whole.
async fn events(
    State(app): Shared,
    Path(id): Path<String>,
    q: Result<Query<EventsQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let q = query(q)?;
    let a = app.clone();
    let source = blocking(move || a.source(&id)).await?;
    let body = match source {
        Source::Stored(log) => Body::from(frame(log.since(q.from_seq))),
        Source::Live(live) => {
            let rx = live.subscribe();
            let s = stream::unfold(
                (live, rx, q.from_seq, false),
                |(live, mut rx, next, done)| async move {
                    if done {
                        return None;
                    }
                    loop {
                        rx.borrow_and_update();
                        let (events, sealed) = live.since(next);
                        if !events.is_empty() || sealed {
                            let next = next + events.len() as u64;
                            let chunk = Ok::<_, std::convert::Infallible>(frame(&events));
                            return Some((chunk, (live, rx, next, sealed)));
                        }
                        if rx.changed().await.is_err() {
                            return None;
                        }
                    }
                },
            );
            Body::from_stream(s)
        }
    };
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn submit_action(
    State(app): Shared,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Vec<SessionEvent>>, ApiError> {
    let action: HumanAction = parse(&body)?;
    Ok(Json(blocking(move || app.submit(&id, action)).await?))
}

async fn end_session(State(app): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    let sid = id.clone();
    let log = blocking(move || app.end(&sid)).await?;
    Ok(Json(json!({ "session_id": id, "events": log.len(), "sealed": log.is_sealed() })).into_response())
}

async fn reflection(State(app): Shared, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(blocking(move || app.reflection(&id)).await?).into_response())
}

#[derive(Deserialize)]
struct TimelineQuery {
    member: Option<String>,
    #[serde(default)]
    include_phases: bool,
}

async fn timeline(
    State(app): Shared,
    Path(id): Path<String>,
    q: Result<Query<TimelineQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let q = query(q)?;
    let member = q.member.map(MemberId::new);
    let entries = blocking(move || app.timeline(&id, member.as_ref(), q.include_phases)).await?;
    Ok(Json(entries).into_response())
}
