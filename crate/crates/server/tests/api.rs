use std::sync::Arc;
use std::time::Duration;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use crafteam_core::persistence::DataDir;
use crafteam_core::presets;
use crafteam_core::reflection::{reflect, timeline};
use crafteam_core::session::{RejectionRule, SessionEvent};
use crafteam_core::team::{validate_team, MemberId, TeamConfig};
use crafteam_server::error::CODES;
use crafteam_server::{router, team_id, ApiError, AppState, Config};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(dir: &std::path::Path, tick: Option<Duration>) -> Router {
    let config = Config {
        data_dir: dir.to_path_buf(),
        tick,
        ..Config::default()
    };
    router(Arc::new(AppState::new(config)))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, to_bytes(res.into_body(), usize::MAX).await.unwrap().to_vec())
}

fn error(body: &[u8]) -> ApiError {
    let e: ApiError = serde_json::from_slice(body).unwrap();
    let rules = [
        RejectionRule::NotAMember,
        RejectionRule::RoleViolation,
        RejectionRule::GateClosed,
        RejectionRule::AdjacencyViolation,
        RejectionRule::MissingTarget,
        RejectionRule::FeedbackBusy,
        RejectionRule::RecipientLacksRole,
        RejectionRule::NotAParty,
        RejectionRule::NotYourTurn,
        RejectionRule::FeedbackClosed,
    ];
    assert!(
        CODES.contains(&e.code.as_str()) || rules.iter().any(|r| r.code() == e.code),
        "code {} outside the published set",
        e.code
    );
    e
}

fn lines(body: &[u8]) -> Vec<SessionEvent> {
    std::str::from_utf8(body)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

async fn create(app: &Router, config: &TeamConfig) -> String {
    let (s, b) = call(app, "POST", "/teams", Some(serde_json::to_value(config).unwrap())).await;
    assert_eq!(s, StatusCode::CREATED);
    serde_json::from_slice::<Value>(&b).unwrap()["team_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn team_routes_mirror_validation() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);

    let mut small = presets::flat_team(1);
    small.members.truncate(2);
    small.edges.truncate(1);
    let (s, b) = call(&app, "POST", "/teams", Some(serde_json::to_value(&small).unwrap())).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let e = error(&b);
    assert_eq!(e.code, "invalid_config");
    assert_eq!(e.details.unwrap(), serde_json::to_value(validate_team(&small)).unwrap());

    let config = presets::multi_tier_team(3);
    let id = create(&app, &config).await;
    assert_eq!(id, team_id(&config));
    let (s, b) = call(&app, "GET", &format!("/teams/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<TeamConfig>(&b).unwrap(), config);

    let (s, b) = call(&app, "GET", "/teams/t-missing", None).await;
    assert_eq!((s, error(&b).code.as_str()), (StatusCode::NOT_FOUND, "not_found"));
    let (s, b) = call(&app, "POST", "/teams", Some(json!({"team_name": 3}))).await;
    assert_eq!((s, error(&b).code.as_str()), (StatusCode::BAD_REQUEST, "malformed_body"));
    let (s, b) = call(&app, "POST", &format!("/teams/{id}/sessions?seed=x"), None).await;
    assert_eq!((s, error(&b).code.as_str()), (StatusCode::BAD_REQUEST, "malformed_body"));
    let (s, _) = call(&app, "GET", "/sessions/s-none/events", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn session_routes_are_thin_adapters() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), None);
    let tid = create(&app, &presets::single_tier_team(3)).await;
    let (s, b) = call(&app, "POST", &format!("/teams/{tid}/sessions?seed=3&time_scale=0"), None).await;
    assert_eq!(s, StatusCode::CREATED);
    let sid = serde_json::from_slice::<Value>(&b).unwrap()["session_id"]
        .as_str()
        .unwrap()
        .to_string();
    let (s, _) = call(&app, "POST", &format!("/teams/{tid}/sessions?seed=3&time_scale=0"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);

    let (s, b) = call(&app, "GET", &format!("/sessions/{sid}/reflection"), None).await;
    assert_eq!((s, error(&b).code.as_str()), (StatusCode::CONFLICT, "not_sealed"));

    let eval = json!({"type": "evaluate", "idea_id": "idea-1", "novelty": 5, "completeness": 5, "quality": 5});
    let (s, b) = call(&app, "POST", &format!("/sessions/{sid}/actions"), Some(eval)).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    let e = error(&b);
    assert_eq!(e.code, "gate_closed");
    let logged: SessionEvent = serde_json::from_value(e.details.unwrap()).unwrap();
    assert_eq!(logged.payload.kind(), "action_rejected");

    let idea = json!({"type": "generate_idea", "title": "Pantry", "object": "o", "function": "f",
        "behavior": "b", "structure": "s"});
    let (s, b) = call(&app, "POST", &format!("/sessions/{sid}/actions"), Some(idea)).await;
    assert_eq!(s, StatusCode::OK);
    let events: Vec<SessionEvent> = serde_json::from_slice(&b).unwrap();
    assert_eq!(events[0].payload.kind(), "idea_generated");
    let (s, b) = call(&app, "POST", &format!("/sessions/{sid}/actions"), Some(json!({"type": "dance"}))).await;
    assert_eq!((s, error(&b).code.as_str()), (StatusCode::BAD_REQUEST, "malformed_body"));

    let (s, _) = call(&app, "POST", &format!("/sessions/{sid}/end"), None).await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = call(&app, "POST", &format!("/sessions/{sid}/end"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);

    let stored = DataDir::new(dir.path()).replay_session(&sid).unwrap().log;
    let (_, b) = call(&app, "GET", &format!("/sessions/{sid}/events"), None).await;
    assert_eq!(lines(&b), stored.events());
    let (_, b) = call(&app, "GET", &format!("/sessions/{sid}/events?from_seq=2"), None).await;
    assert_eq!(lines(&b), stored.since(2));

    let (s, b) = call(&app, "GET", &format!("/sessions/{sid}/reflection"), None).await;
    assert_eq!(s, StatusCode::OK);
    let direct = serde_json::to_value(reflect(&stored).unwrap()).unwrap();
    assert_eq!(serde_json::from_slice::<Value>(&b).unwrap(), direct);

    let (_, b) = call(&app, "GET", &format!("/sessions/{sid}/timeline?member=h"), None).await;
    let direct = serde_json::to_value(timeline(&stored, Some(&MemberId::new("h")), false).unwrap()).unwrap();
    assert_eq!(serde_json::from_slice::<Value>(&b).unwrap(), direct);
    let (s, _) = call(&app, "GET", &format!("/sessions/{sid}/timeline?member=zz"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn live_stream_is_ordered_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), Some(Duration::from_millis(1)));
    let tid = create(&app, &presets::flat_team(3)).await;
    let (_, b) = call(&app, "POST", &format!("/teams/{tid}/sessions?seed=8&time_scale=0"), None).await;
    let sid = serde_json::from_slice::<Value>(&b).unwrap()["session_id"]
        .as_str()
        .unwrap()
        .to_string();

    let ender = {
        let app = app.clone();
        let sid = sid.clone();
        tokio::spawn(async move {
            tokio::time::sleep(Duration::from_millis(300)).await;
            call(&app, "POST", &format!("/sessions/{sid}/end"), None).await
        })
    };
    let (s, b) = call(&app, "GET", &format!("/sessions/{sid}/events"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(ender.await.unwrap().0, StatusCode::OK);
    let streamed = lines(&b);
    assert!(streamed.len() > 10);
    assert!(streamed.iter().enumerate().all(|(i, e)| e.seq == i as u64));
    assert_eq!(streamed.last().unwrap().payload.kind(), "session_ended");

    let stored = DataDir::new(dir.path()).replay_session(&sid).unwrap().log;
    assert_eq!(streamed, stored.events());
    let k = streamed.len() as u64 / 2;
    let (_, b) = call(&app, "GET", &format!("/sessions/{sid}/events?from_seq={k}"), None).await;
    let mut joined = streamed[..k as usize].to_vec();
    joined.extend(lines(&b));
    assert_eq!(joined, streamed);
}

#[test]
fn config_reads_environment() {
    let env = |k: &str| match k {
        "PORT" => Some("9090".to_string()),
        "DATA_DIR" => Some("/tmp/x".to_string()),
        "TICK_MS" => Some("0".to_string()),
        _ => None,
    };
    let c = Config::from_lookup(env, Default::default).unwrap();
    assert_eq!(c.port, 9090);
    assert_eq!(c.tick, None);
    assert_eq!(c.data_dir, std::path::PathBuf::from("/tmp/x"));
    assert!(Config::from_lookup(|k| (k == "PROVIDER_MODE").then(|| "x".into()), Default::default).is_err());
}
