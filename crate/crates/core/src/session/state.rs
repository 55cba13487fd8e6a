//! Session state as a fold over the event log. The live engine mutates state
//! only by applying the events it commits, so replaying a log rebuilds the
//! exact same state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::event::{EventPayload, FeedbackRef, RequestRef, RequestableAction, SessionEvent};
use crate::agent::{ActionKind, ActionRecord, AgentPhase, AgentState, ReflectTrigger, RequestItem};
use crate::clock::{VirtualClock, VirtualTime};
use crate::idea::{IdeaBoard, IdeaError};
use crate::team::{MemberId, TeamConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackLine {
    pub author: MemberId,
    pub text: String,
    pub at: VirtualTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub session_ref: FeedbackRef,
    pub initiator: MemberId,
    pub recipient: MemberId,
    pub messages: Vec<FeedbackLine>,
    pub closed: bool,
}

impl Transcript {
    pub fn involves(&self, m: &MemberId) -> bool {
        &self.initiator == m || &self.recipient == m
    }

    pub fn partner_of(&self, m: &MemberId) -> Option<&MemberId> {
        if &self.initiator == m {
            Some(&self.recipient)
        } else if &self.recipient == m {
            Some(&self.initiator)
        } else {
            None
        }
    }

    /// The party expected to speak next, while open.
    pub fn whose_turn(&self) -> Option<&MemberId> {
        if self.closed {
            return None;
        }
        let last = &self.messages.last()?.author;
        self.partner_of(last)
    }

    pub fn turns(&self) -> usize {
        self.messages.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestStatus {
    Pending,
    Fulfilled,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub request_ref: RequestRef,
    pub from: MemberId,
    pub to: MemberId,
    pub action: RequestableAction,
    pub text: String,
    pub at: VirtualTime,
    pub status: RequestStatus,
}

/// Something addressed to the human, surfaced for display only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InboxItem {
    Request {
        request_ref: RequestRef,
        from: MemberId,
        action: RequestableAction,
        text: String,
        at: VirtualTime,
    },
    FeedbackOpened {
        session_ref: FeedbackRef,
        from: MemberId,
        text: String,
        at: VirtualTime,
    },
    FeedbackMessage {
        session_ref: FeedbackRef,
        from: MemberId,
        text: String,
        at: VirtualTime,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("event {seq} out of sequence (expected {expected})")]
    Sequence { seq: u64, expected: u64 },
    #[error("event {0} precedes the previous event in time")]
    TimeTravel(u64),
    #[error("log must begin with session_started")]
    NotStarted,
    #[error("session already started")]
    AlreadyStarted,
    #[error("session already ended")]
    Ended,
    #[error("unknown feedback session `{0}`")]
    UnknownFeedback(FeedbackRef),
    #[error("unknown request `{0}`")]
    UnknownRequest(RequestRef),
    #[error("unknown agent `{0}`")]
    UnknownAgent(MemberId),
    #[error("reflection does not match the agent's next trigger")]
    TriggerMismatch,
    #[error(transparent)]
    Idea(#[from] IdeaError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub config: TeamConfig,
    pub seed: u64,
    pub clock: VirtualClock,
    pub board: IdeaBoard,
    pub agents: BTreeMap<MemberId, AgentState>,
    pub human_inbox: Vec<InboxItem>,
    pub feedback: Vec<Transcript>,
    pub requests: Vec<RequestRecord>,
    pub gate_open: bool,
    pub ended: bool,
    pub next_seq: u64,
}

impl SessionState {
    /// State right after `session_started`.
    pub fn initial(session_id: &str, config: &TeamConfig, seed: u64, time_scale: f64) -> Self {
        let agents = config
            .agents()
            .map(|m| (m.member_id.clone(), AgentState::new(config, &m.member_id)))
            .collect();
        SessionState {
            session_id: session_id.to_string(),
            config: config.clone(),
            seed,
            clock: VirtualClock::new(time_scale),
            board: IdeaBoard::new(),
            agents,
            human_inbox: Vec::new(),
            feedback: Vec::new(),
            requests: Vec::new(),
            gate_open: false,
            ended: false,
            next_seq: 1,
        }
    }

    /// Folds a complete event sequence into state.
    pub fn fold<'a>(
        events: impl IntoIterator<Item = &'a SessionEvent>,
    ) -> Result<SessionState, ApplyError> {
        let mut iter = events.into_iter();
        let first = iter.next().ok_or(ApplyError::NotStarted)?;
        let mut state = match &first.payload {
            EventPayload::SessionStarted {
                session_id,
                config,
                seed,
                time_scale,
            } if first.seq == 0 => SessionState::initial(session_id, config, *seed, *time_scale),
            _ => return Err(ApplyError::NotStarted),
        };
        state.clock.now = first.at;
        for e in iter {
            state.apply(e)?;
        }
        Ok(state)
    }

    pub fn now(&self) -> VirtualTime {
        self.clock.now
    }

    pub fn human_id(&self) -> Option<&MemberId> {
        self.config.human().map(|h| &h.member_id)
    }

    pub fn is_agent(&self, m: &MemberId) -> bool {
        self.agents.contains_key(m)
    }

    pub fn transcript(&self, r: &FeedbackRef) -> Option<&Transcript> {
        self.feedback.iter().find(|t| &t.session_ref == r)
    }

    fn transcript_mut(&mut self, r: &FeedbackRef) -> Result<&mut Transcript, ApplyError> {
        self.feedback
            .iter_mut()
            .find(|t| &t.session_ref == r)
            .ok_or_else(|| ApplyError::UnknownFeedback(r.clone()))
    }

    pub fn request(&self, r: &RequestRef) -> Option<&RequestRecord> {
        self.requests.iter().find(|q| &q.request_ref == r)
    }

    /// The open feedback session `m` is part of, if any.
    pub fn open_feedback_of(&self, m: &MemberId) -> Option<&Transcript> {
        self.feedback.iter().find(|t| !t.closed && t.involves(m))
    }

    pub fn in_feedback(&self, m: &MemberId) -> bool {
        self.open_feedback_of(m).is_some()
    }

    pub fn next_feedback_ref(&self) -> FeedbackRef {
        FeedbackRef::nth(self.feedback.len() + 1)
    }

    pub fn next_request_ref(&self) -> RequestRef {
        RequestRef::nth(self.requests.len() + 1)
    }

    fn record_action(&mut self, member: &MemberId, kind: ActionKind, summary: String, at: VirtualTime) {
        if let Some(agent) = self.agents.get_mut(member) {
            agent.stm.record_action(ActionRecord { at, kind, summary });
        }
    }

    fn agent_mut(&mut self, m: &MemberId) -> Result<&mut AgentState, ApplyError> {
        self.agents
            .get_mut(m)
            .ok_or_else(|| ApplyError::UnknownAgent(m.clone()))
    }

    /// Applies one event. Sequence numbers must be consecutive.
    pub fn apply(&mut self, event: &SessionEvent) -> Result<(), ApplyError> {
        if self.ended {
            return Err(ApplyError::Ended);
        }
        if event.seq != self.next_seq {
            return Err(ApplyError::Sequence {
                seq: event.seq,
                expected: self.next_seq,
            });
        }
        if event.at < self.clock.now {
            return Err(ApplyError::TimeTravel(event.seq));
        }
        let at = event.at;
        match &event.payload {
            EventPayload::SessionStarted { .. } => return Err(ApplyError::AlreadyStarted),
            EventPayload::IdeaGenerated { idea } | EventPayload::IdeaUpdated { idea } => {
                self.board.insert(idea.clone())?;
                if matches!(event.payload, EventPayload::IdeaGenerated { .. }) {
                    self.gate_open = true;
                }
                let summary = match &idea.parent_id {
                    Some(p) => format!("developed {} into {} \"{}\"", p, idea.idea_id, idea.title),
                    None => format!("generated {} \"{}\"", idea.idea_id, idea.title),
                };
                self.record_action(&idea.author, ActionKind::IdeaGeneration, summary, at);
            }
            EventPayload::IdeaEvaluated { evaluation } => {
                self.board.add_evaluation(evaluation.clone())?;
                let [n, c, q] = evaluation.scores();
                self.record_action(
                    &evaluation.evaluator,
                    ActionKind::IdeaEvaluation,
                    format!("rated {} novelty {n}, completeness {c}, quality {q}", evaluation.idea_id),
                    at,
                );
                let author = self
                    .board
                    .get(&evaluation.idea_id)
                    .map(|i| i.author.clone())
                    .expect("evaluated idea exists");
                if author != evaluation.evaluator {
                    if let Some(agent) = self.agents.get_mut(&author) {
                        agent.reflect_triggers.push_back(ReflectTrigger::Evaluation {
                            evaluation: evaluation.clone(),
                        });
                    }
                }
            }
            EventPayload::FeedbackOpened {
                session_ref,
                initiator,
                recipient,
                message,
            } => {
                self.feedback.push(Transcript {
                    session_ref: session_ref.clone(),
                    initiator: initiator.clone(),
                    recipient: recipient.clone(),
                    messages: vec![FeedbackLine {
                        author: initiator.clone(),
                        text: message.clone(),
                        at,
                    }],
                    closed: false,
                });
                for party in [initiator, recipient] {
                    if let Some(agent) = self.agents.get_mut(party) {
                        agent.stm.active_feedback = Some(session_ref.clone());
                    }
                }
                self.record_action(
                    initiator,
                    ActionKind::Feedback,
                    format!("opened feedback {session_ref} with {recipient}"),
                    at,
                );
                if Some(recipient) == self.human_id() {
                    self.human_inbox.push(InboxItem::FeedbackOpened {
                        session_ref: session_ref.clone(),
                        from: initiator.clone(),
                        text: message.clone(),
                        at,
                    });
                }
            }
            EventPayload::FeedbackMessage {
                session_ref,
                author,
                text,
                ..
            } => {
                let t = self.transcript_mut(session_ref)?;
                t.messages.push(FeedbackLine {
                    author: author.clone(),
                    text: text.clone(),
                    at,
                });
                let partner = t.partner_of(author).cloned();
                self.record_action(
                    author,
                    ActionKind::FeedbackResponse,
                    format!("replied in {session_ref}"),
                    at,
                );
                if partner.as_ref() == self.human_id() {
                    self.human_inbox.push(InboxItem::FeedbackMessage {
                        session_ref: session_ref.clone(),
                        from: author.clone(),
                        text: text.clone(),
                        at,
                    });
                }
            }
            EventPayload::FeedbackClosed { session_ref, .. } => {
                let t = self.transcript_mut(session_ref)?;
                t.closed = true;
                let parties = [t.initiator.clone(), t.recipient.clone()];
                for party in &parties {
                    if let Some(agent) = self.agents.get_mut(party) {
                        if agent.stm.active_feedback.as_ref() == Some(session_ref) {
                            agent.stm.active_feedback = None;
                        }
                        agent.reflect_triggers.push_back(ReflectTrigger::Feedback {
                            session_ref: session_ref.clone(),
                        });
                    }
                }
            }
            EventPayload::RequestIssued {
                request_ref,
                from,
                to,
                action,
                text,
            } => {
                self.requests.push(RequestRecord {
                    request_ref: request_ref.clone(),
                    from: from.clone(),
                    to: to.clone(),
                    action: *action,
                    text: text.clone(),
                    at,
                    status: RequestStatus::Pending,
                });
                if let Some(agent) = self.agents.get_mut(to) {
                    agent.enqueue_request(RequestItem {
                        request_ref: request_ref.clone(),
                        from: from.clone(),
                        action: *action,
                        message: text.clone(),
                    });
                } else {
                    self.human_inbox.push(InboxItem::Request {
                        request_ref: request_ref.clone(),
                        from: from.clone(),
                        action: *action,
                        text: text.clone(),
                        at,
                    });
                }
                self.record_action(
                    from,
                    ActionKind::Request,
                    format!("asked {to} for {}", action.as_str()),
                    at,
                );
            }
            EventPayload::RequestFulfilled { request_ref, by } => {
                let rec = self
                    .requests
                    .iter_mut()
                    .find(|r| &r.request_ref == request_ref)
                    .ok_or_else(|| ApplyError::UnknownRequest(request_ref.clone()))?;
                rec.status = RequestStatus::Fulfilled;
                if let Some(agent) = self.agents.get_mut(by) {
                    agent.stm.remove_request(request_ref);
                }
            }
            EventPayload::PhaseChanged {
                member,
                phase,
                intent,
            } => {
                let agent = self.agent_mut(member)?;
                agent.phase = *phase;
                agent.intent = match phase {
                    AgentPhase::Act => intent.clone(),
                    _ => None,
                };
                if matches!(phase, AgentPhase::Wait { .. }) {
                    agent.wait_draws += 1;
                }
            }
            EventPayload::ActionSkipped {
                member,
                request_ref,
                ..
            } => {
                if let Some(r) = request_ref {
                    if let Some(agent) = self.agents.get_mut(member) {
                        agent.stm.remove_request(r);
                    }
                    if let Some(rec) = self.requests.iter_mut().find(|q| &q.request_ref == r) {
                        rec.status = RequestStatus::Dropped;
                    }
                }
            }
            EventPayload::ActionRejected { .. } => {}
            EventPayload::Reflected {
                member,
                trigger,
                delta,
            } => {
                let agent = self.agent_mut(member)?;
                if agent.reflect_triggers.front() != Some(trigger) {
                    return Err(ApplyError::TriggerMismatch);
                }
                agent.reflect_triggers.pop_front();
                agent.ltm.apply(delta, at);
            }
            EventPayload::SessionEnded => {
                self.ended = true;
            }
        }
        self.clock.now = at;
        self.next_seq += 1;
        Ok(())
    }
}
