use std::collections::HashMap;
use std::sync::{Arc, Mutex, Weak};

use axum::http::StatusCode;
use crafteam_core::llm::{HttpProvider, LlmProvider, MockProvider};
use crafteam_core::persistence::DataDir;
use crafteam_core::reflection::{self, Reflection, TimelineEntry};
use crafteam_core::session::{derive_session_id, EventLog, HumanAction, Session, SessionEvent};
use crafteam_core::team::{validate_team, MemberId, TeamConfig};
use tokio::sync::watch;

use crate::config::{Config, ProviderMode};
use crate::error::ApiError;

/// A session still accepting events. `len` publishes the log length after
/// every commit.
pub struct Live {
    session: Mutex<Session>,
    len: watch::Sender<usize>,
}

impl Live {
    fn new(session: Session) -> Self {
        let (len, _) = watch::channel(session.log().len());
        Live {
            session: Mutex::new(session),
            len,
        }
    }

    /// Runs `f` on the session and publishes the new length.
    pub fn with<R>(&self, f: impl FnOnce(&mut Session) -> R) -> R {
        let mut s = self.session.lock().expect("session lock");
        let out = f(&mut s);
        self.len.send_replace(s.log().len());
        out
    }

    pub fn subscribe(&self) -> watch::Receiver<usize> {
        self.len.subscribe()
    }

    /// Events from `from` onward, and whether the log is sealed.
    pub fn since(&self, from: u64) -> (Vec<SessionEvent>, bool) {
        let s = self.session.lock().expect("session lock");
        (s.log().since(from).to_vec(), s.log().is_sealed())
    }
}

pub struct AppState {
    pub config: Config,
    data: DataDir,
    live: Mutex<HashMap<String, Arc<Live>>>,
}

/// Either a live session or a log read back from disk.
pub enum Source {
    Live(Arc<Live>),
    Stored(EventLog),
}

pub fn team_id(config: &TeamConfig) -> String {
    format!("t-{}", &config.digest()[..12])
}

impl AppState {
    pub fn new(config: Config) -> Self {
        AppState {
            data: DataDir::new(config.data_dir.clone()),
            config,
            live: Mutex::new(HashMap::new()),
        }
    }

    pub fn data(&self) -> &DataDir {
        &self.data
    }

    fn provider(&self, seed: u64) -> Result<Arc<dyn LlmProvider>, ApiError> {
        Ok(match &self.config.provider {
            ProviderMode::Mock => Arc::new(MockProvider::new(seed)),
            ProviderMode::Http(c) => Arc::new(HttpProvider::new(c.clone()).map_err(|e| {
                ApiError::new(StatusCode::BAD_GATEWAY, "provider_error", e.to_string())
            })?),
        })
    }

    pub fn create_team(&self, config: &TeamConfig) -> Result<String, ApiError> {
        let report = validate_team(config);
        if !report.is_ok() {
            return Err(
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_config", report.to_string())
                    .with_details(report),
            );
        }
        let id = team_id(config);
        self.data.save_team(&id, config)?;
        Ok(id)
    }

    pub fn team(&self, id: &str) -> Result<TeamConfig, ApiError> {
        Ok(self.data.load_team(id)?)
    }

    /// Starts and registers a session; blocking.
    pub fn start_session(&self, team: &str, seed: u64, time_scale: f64) -> Result<(String, Arc<Live>), ApiError> {
        let config = self.team(team)?;
        let id = derive_session_id(&config, seed, time_scale);
        if self.live.lock().expect("registry lock").contains_key(&id)
            || self.data.session_path(&id).exists()
        {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "session_exists",
                format!("session {id} already exists"),
            ));
        }
        let provider = self.provider(seed)?;
        let writer = self.data.create_session_log(&id, &config)?;
        let session = Session::start(
            config,
            provider,
            seed,
            time_scale,
            Default::default(),
            Some(Box::new(writer)),
        )?;
        let live = Arc::new(Live::new(session));
        self.live
            .lock()
            .expect("registry lock")
            .insert(id.clone(), live.clone());
        Ok((id, live))
    }

    pub fn live(&self, id: &str) -> Option<Arc<Live>> {
        self.live.lock().expect("registry lock").get(id).cloned()
    }

    pub fn source(&self, id: &str) -> Result<Source, ApiError> {
        if let Some(l) = self.live(id) {
            return Ok(Source::Live(l));
        }
        Ok(Source::Stored(self.data.replay_session(id)?.log))
    }

    fn live_or_404(&self, id: &str) -> Result<Arc<Live>, ApiError> {
        match self.live(id) {
            Some(l) => Ok(l),
            None if self.data.session_path(id).exists() => Err(ApiError::new(
                StatusCode::CONFLICT,
                "session_ended",
                format!("session {id} is no longer live"),
            )),
            None => Err(ApiError::not_found(format!("session {id}"))),
        }
    }

    pub fn submit(&self, id: &str, action: HumanAction) -> Result<Vec<SessionEvent>, ApiError> {
        let live = self.live_or_404(id)?;
        Ok(live.with(|s| s.submit_human_action(action))?)
    }

    /// Seals the session and drops it from the live registry.
    pub fn end(&self, id: &str) -> Result<EventLog, ApiError> {
        let live = self.live_or_404(id)?;
        let log = live.with(|s| s.end_session().cloned())?;
        self.live.lock().expect("registry lock").remove(id);
        Ok(log)
    }

    fn with_log<R>(&self, id: &str, f: impl FnOnce(&EventLog) -> Result<R, ApiError>) -> Result<R, ApiError> {
        match self.source(id)? {
            Source::Live(l) => l.with(|s| f(s.log())),
            Source::Stored(log) => f(&log),
        }
    }

    pub fn reflection(&self, id: &str) -> Result<Reflection, ApiError> {
        self.with_log(id, |log| Ok(reflection::reflect(log)?))
    }

    pub fn timeline(
        &self,
        id: &str,
        member: Option<&MemberId>,
        include_phases: bool,
    ) -> Result<Vec<TimelineEntry>, ApiError> {
        self.with_log(id, |log| {
            if let (Some(m), Some(c)) = (member, log.config()) {
                if !c.members.iter().any(|x| &x.member_id == m) {
                    return Err(ApiError::not_found(format!("member {m}")));
                }
            }
            Ok(reflection::timeline(log, member, include_phases)?)
        })
    }
}

/// Advances a live session one quantum per `tick` until it ends or is
/// dropped from the registry.
pub fn spawn_driver(live: Weak<Live>, tick: std::time::Duration) {
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(tick);
        interval.tick().await;
        loop {
            interval.tick().await;
            let Some(l) = live.upgrade() else { break };
            let done = tokio::task::spawn_blocking(move || {
                l.with(|s| {
                    if s.is_ended() {
                        return true;
                    }
                    match s.step() {
                        Ok(_) => false,
                        Err(e) => {
                            eprintln!("session {}: {e}", s.id());
                            true
                        }
                    }
                })
            })
            .await
            .unwrap_or(true);
            if done {
                break;
            }
        }
    });
}
