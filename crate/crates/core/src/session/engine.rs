use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::event::{EventPayload, FeedbackRef, RejectionRule, RequestableAction, SessionEvent};
use super::log::{EventLog, LogError};
use super::rules::{authorize, authorize_reply, authorize_request};
use super::state::{ApplyError, SessionState};
use crate::agent::{is_due, tick, AgentPhase, RuntimeSettings};
use crate::clock::VirtualTime;
use crate::idea::{Evaluation, Idea, IdeaId, Ofbs, SCORE_MAX, SCORE_MIN};
use crate::llm::LlmProvider;
use crate::persistence::{EventStore, PersistError};
use crate::team::{validate_team, MemberId, RoleKind, TeamConfig, ValidationReport};

/// Bound on phase steps one agent may take within a single quantum.
const MAX_PHASES_PER_QUANTUM: usize = 16;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid team configuration: {0}")]
    InvalidConfig(ValidationReport),
    #[error("session has ended")]
    Ended,
    #[error("time_scale must be finite and non-negative")]
    InvalidTimeScale,
    #[error(transparent)]
    Apply(#[from] ApplyError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

/// What the human can do, as submitted through the API.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HumanAction {
    GenerateIdea {
        title: String,
        #[serde(flatten)]
        content: Ofbs,
    },
    UpdateIdea {
        parent_id: IdeaId,
        title: String,
        #[serde(flatten)]
        content: Ofbs,
    },
    Evaluate {
        idea_id: IdeaId,
        novelty: u8,
        completeness: u8,
        quality: u8,
        #[serde(default)]
        comment: Option<String>,
    },
    OpenFeedback {
        recipient: MemberId,
        message: String,
    },
    ReplyFeedback {
        session_ref: FeedbackRef,
        message: String,
        #[serde(default)]
        conclude: bool,
    },
    Request {
        recipient: MemberId,
        action: RequestableAction,
        message: String,
    },
}

impl HumanAction {
    pub fn name(&self) -> &'static str {
        match self {
            HumanAction::GenerateIdea { .. } => "generate_idea",
            HumanAction::UpdateIdea { .. } => "update_idea",
            HumanAction::Evaluate { .. } => "evaluate",
            HumanAction::OpenFeedback { .. } => "open_feedback",
            HumanAction::ReplyFeedback { .. } => "reply_feedback",
            HumanAction::Request { .. } => "request",
        }
    }

    fn target(&self) -> Option<&MemberId> {
        match self {
            HumanAction::OpenFeedback { recipient, .. } | HumanAction::Request { recipient, .. } => {
                Some(recipient)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum HumanActionError {
    /// Refused by a permission rule; the refusal is logged as `event`.
    #[error("rejected: {rule}")]
    Rejected {
        rule: RejectionRule,
        event: Box<SessionEvent>,
    },
    #[error("bad action: {0}")]
    BadAction(String),
    #[error(transparent)]
    Session(#[from] SessionError),
}

/// Derived from the config, seed and time scale so reruns share an id.
pub fn derive_session_id(config: &TeamConfig, seed: u64, time_scale: f64) -> String {
    let mut h = Sha256::new();
    h.update(config.digest().as_bytes());
    h.update(seed.to_le_bytes());
    h.update(time_scale.to_bits().to_le_bytes());
    let d = h.finalize();
    format!("s-{}", &hex::encode(d)[..12])
}

/// A running session: state, its log and the agents' provider.
pub struct Session {
    state: SessionState,
    log: EventLog,
    provider: Arc<dyn LlmProvider>,
    settings: RuntimeSettings,
    store: Option<Box<dyn EventStore>>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("session_id", &self.state.session_id)
            .field("events", &self.log.len())
            .field("ended", &self.state.ended)
            .finish()
    }
}

pub fn start_session(
    config: TeamConfig,
    provider: Arc<dyn LlmProvider>,
    seed: u64,
    time_scale: f64,
) -> Result<Session, SessionError> {
    Session::start(config, provider, seed, time_scale, RuntimeSettings::default(), None)
}

impl Session {
    pub fn start(
        config: TeamConfig,
        provider: Arc<dyn LlmProvider>,
        seed: u64,
        time_scale: f64,
        settings: RuntimeSettings,
        store: Option<Box<dyn EventStore>>,
    ) -> Result<Session, SessionError> {
        let report = validate_team(&config);
        if !report.is_ok() {
            return Err(SessionError::InvalidConfig(report));
        }
        if !time_scale.is_finite() || time_scale < 0.0 {
            return Err(SessionError::InvalidTimeScale);
        }
        let session_id = derive_session_id(&config, seed, time_scale);
        let started = SessionEvent {
            seq: 0,
            at: VirtualTime::ZERO,
            payload: EventPayload::SessionStarted {
                session_id: session_id.clone(),
                config: config.clone(),
                seed,
                time_scale,
            },
        };
        let state = SessionState::fold([&started])?;
        let mut log = EventLog::new();
        log.push(started.clone())?;
        let mut store = store;
        if let Some(s) = store.as_mut() {
            s.append(&started)?;
        }
        Ok(Session {
            state,
            log,
            provider,
            settings,
            store,
        })
    }

    pub fn id(&self) -> &str {
        &self.state.session_id
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn now(&self) -> VirtualTime {
        self.state.now()
    }

    pub fn is_ended(&self) -> bool {
        self.state.ended
    }

    pub fn provider(&self) -> &Arc<dyn LlmProvider> {
        &self.provider
    }

    fn commit(&mut self, payload: EventPayload) -> Result<SessionEvent, SessionError> {
        let event = SessionEvent {
            seq: self.state.next_seq,
            at: self.state.now(),
            payload,
        };
        self.state.apply(&event)?;
        self.log.push(event.clone())?;
        if let Some(s) = self.store.as_mut() {
            s.append(&event)?;
        }
        Ok(event)
    }

    /// Advances the clock one quantum and runs every due agent, in member-id order.
    pub fn step(&mut self) -> Result<Vec<SessionEvent>, SessionError> {
        if self.state.ended {
            return Err(SessionError::Ended);
        }
        self.state.clock.advance();
        let now = self.state.now();
        let members: Vec<MemberId> = self.state.agents.keys().cloned().collect();
        let mut out = Vec::new();
        for m in members {
            for _ in 0..MAX_PHASES_PER_QUANTUM {
                if !is_due(&self.state.agents[&m], now) {
                    break;
                }
                let payloads = tick(&m, &self.state, self.provider.as_ref(), &self.settings);
                if payloads.is_empty() {
                    break;
                }
                for p in payloads {
                    out.push(self.commit(p)?);
                }
                if matches!(self.state.agents[&m].phase, AgentPhase::Wait { .. }) {
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Steps until the clock reaches `until`.
    pub fn run_until(&mut self, until: VirtualTime) -> Result<Vec<SessionEvent>, SessionError> {
        let mut out = Vec::new();
        while self.state.now() < until {
            out.extend(self.step()?);
        }
        Ok(out)
    }

    fn reject(
        &mut self,
        action: &HumanAction,
        rule: RejectionRule,
    ) -> Result<Vec<SessionEvent>, HumanActionError> {
        let actor = self.human()?;
        let event = self.commit(EventPayload::ActionRejected {
            actor,
            action: action.name().to_string(),
            target: action.target().cloned(),
            rule,
        })?;
        Err(HumanActionError::Rejected {
            rule,
            event: Box::new(event),
        })
    }

    fn human(&self) -> Result<MemberId, HumanActionError> {
        self.state
            .human_id()
            .cloned()
            .ok_or_else(|| HumanActionError::BadAction("team has no human member".into()))
    }

    /// Validates and applies one human action at the current virtual time.
    pub fn submit_human_action(
        &mut self,
        action: HumanAction,
    ) -> Result<Vec<SessionEvent>, HumanActionError> {
        if self.state.ended {
            return Err(SessionError::Ended.into());
        }
        let me = self.human()?;
        let now = self.state.now();
        let bad = |s: &str| Err(HumanActionError::BadAction(s.to_string()));

        let check = match &action {
            HumanAction::GenerateIdea { .. } | HumanAction::UpdateIdea { .. } => {
                authorize(&self.state, &me, RoleKind::IdeaGeneration, None)
            }
            HumanAction::Evaluate { .. } => authorize(&self.state, &me, RoleKind::IdeaEvaluation, None),
            HumanAction::OpenFeedback { recipient, .. } => {
                authorize(&self.state, &me, RoleKind::Feedback, Some(recipient))
            }
            HumanAction::ReplyFeedback { session_ref, .. } => {
                authorize_reply(&self.state, &me, session_ref)
            }
            HumanAction::Request {
                recipient, action, ..
            } => authorize_request(&self.state, &me, recipient, *action),
        };
        if let Err(rule) = check {
            return self.reject(&action, rule);
        }

        let payloads = match action {
            HumanAction::GenerateIdea { title, content } => {
                if title.trim().is_empty() {
                    return bad("title must not be empty");
                }
                if let Some(f) = content.missing_field() {
                    return bad(&format!("{f} must not be empty"));
                }
                vec![EventPayload::IdeaGenerated {
                    idea: Idea {
                        idea_id: self.state.board.next_id(),
                        title,
                        content,
                        author: me,
                        parent_id: None,
                        created_at: now,
                    },
                }]
            }
            HumanAction::UpdateIdea {
                parent_id,
                title,
                content,
            } => {
                if !self.state.board.contains(&parent_id) {
                    return bad(&format!("unknown idea {parent_id}"));
                }
                if title.trim().is_empty() {
                    return bad("title must not be empty");
                }
                if let Some(f) = content.missing_field() {
                    return bad(&format!("{f} must not be empty"));
                }
                vec![EventPayload::IdeaUpdated {
                    idea: Idea {
                        idea_id: self.state.board.next_id(),
                        title,
                        content,
                        author: me,
                        parent_id: Some(parent_id),
                        created_at: now,
                    },
                }]
            }
            HumanAction::Evaluate {
                idea_id,
                novelty,
                completeness,
                quality,
                comment,
            } => {
                if !self.state.board.contains(&idea_id) {
                    return bad(&format!("unknown idea {idea_id}"));
                }
                for s in [novelty, completeness, quality] {
                    if !(SCORE_MIN..=SCORE_MAX).contains(&s) {
                        return bad(&format!("score {s} outside {SCORE_MIN}..{SCORE_MAX}"));
                    }
                }
                vec![EventPayload::IdeaEvaluated {
                    evaluation: Evaluation {
                        idea_id,
                        evaluator: me,
                        novelty,
                        completeness,
                        quality,
                        comment,
                        created_at: now,
                    },
                }]
            }
            HumanAction::OpenFeedback { recipient, message } => {
                if message.trim().is_empty() {
                    return bad("message must not be empty");
                }
                vec![EventPayload::FeedbackOpened {
                    session_ref: self.state.next_feedback_ref(),
                    initiator: me,
                    recipient,
                    message,
                }]
            }
            HumanAction::ReplyFeedback {
                session_ref,
                message,
                conclude,
            } => {
                if message.trim().is_empty() {
                    return bad("message must not be empty");
                }
                let turns = self
                    .state
                    .transcript(&session_ref)
                    .map(|t| t.turns())
                    .unwrap_or(0);
                let at_cap = turns + 1 >= self.settings.max_feedback_turns;
                let mut v = vec![EventPayload::FeedbackMessage {
                    session_ref: session_ref.clone(),
                    author: me,
                    text: message,
                    conclude,
                }];
                if conclude || at_cap {
                    v.push(EventPayload::FeedbackClosed {
                        session_ref,
                        forced: !conclude,
                    });
                }
                v
            }
            HumanAction::Request {
                recipient,
                action,
                message,
            } => {
                if message.trim().is_empty() {
                    return bad("message must not be empty");
                }
                vec![EventPayload::RequestIssued {
                    request_ref: self.state.next_request_ref(),
                    from: me,
                    to: recipient,
                    action,
                    text: message,
                }]
            }
        };
        let mut out = Vec::new();
        for p in payloads {
            out.push(self.commit(p)?);
        }
        Ok(out)
    }

    /// Force-closes open feedback sessions, appends `session_ended` and seals
    /// the log. Calling it again is a no-op.
    pub fn end_session(&mut self) -> Result<&EventLog, SessionError> {
        if self.state.ended {
            return Ok(&self.log);
        }
        let open: Vec<FeedbackRef> = self
            .state
            .feedback
            .iter()
            .filter(|t| !t.closed)
            .map(|t| t.session_ref.clone())
            .collect();
        for session_ref in open {
            self.commit(EventPayload::FeedbackClosed {
                session_ref,
                forced: true,
            })?;
        }
        self.commit(EventPayload::SessionEnded)?;
        self.log.seal();
        if let Some(s) = self.store.as_mut() {
            s.flush()?;
        }
        Ok(&self.log)
    }
}
