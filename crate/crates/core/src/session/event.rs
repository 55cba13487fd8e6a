use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentPhase, Intent, ReflectTrigger, ReflectionDelta};
use crate::clock::VirtualTime;
use crate::idea::{Evaluation, Idea};
use crate::team::{MemberId, RoleKind, TeamConfig};

macro_rules! string_ref {
    ($name:ident, $prefix:literal) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn nth(n: usize) -> Self {
                $name(format!(concat!($prefix, "-{}"), n))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

string_ref!(FeedbackRef, "fb");
string_ref!(RequestRef, "req");

/// Actions one member may ask another to perform. Request itself is not requestable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestableAction {
    IdeaGeneration,
    IdeaEvaluation,
    Feedback,
}

impl RequestableAction {
    pub const ALL: [RequestableAction; 3] = [
        RequestableAction::IdeaGeneration,
        RequestableAction::IdeaEvaluation,
        RequestableAction::Feedback,
    ];

    pub fn role(self) -> RoleKind {
        match self {
            RequestableAction::IdeaGeneration => RoleKind::IdeaGeneration,
            RequestableAction::IdeaEvaluation => RoleKind::IdeaEvaluation,
            RequestableAction::Feedback => RoleKind::Feedback,
        }
    }

    pub fn from_role(role: RoleKind) -> Option<Self> {
        match role {
            RoleKind::IdeaGeneration => Some(RequestableAction::IdeaGeneration),
            RoleKind::IdeaEvaluation => Some(RequestableAction::IdeaEvaluation),
            RoleKind::Feedback => Some(RequestableAction::Feedback),
            RoleKind::Request => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        self.role().as_str()
    }

    pub fn parse(s: &str) -> Option<Self> {
        RoleKind::parse(s).and_then(Self::from_role)
    }
}

/// Why an attempted action was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Error)]
#[serde(rename_all = "snake_case")]
pub enum RejectionRule {
    #[error("actor is not a member of this team")]
    NotAMember,
    #[error("actor does not hold the role for this action")]
    RoleViolation,
    #[error("only idea generation is available until the first idea exists")]
    GateClosed,
    #[error("target is not directly connected to the actor")]
    AdjacencyViolation,
    #[error("action requires a target member")]
    MissingTarget,
    #[error("a party is already in a feedback session")]
    FeedbackBusy,
    #[error("recipient does not hold the requested role")]
    RecipientLacksRole,
    #[error("actor is not a party to this feedback session")]
    NotAParty,
    #[error("it is not the actor's turn in this feedback session")]
    NotYourTurn,
    #[error("feedback session is closed")]
    FeedbackClosed,
}

impl RejectionRule {
    pub fn code(self) -> &'static str {
        match self {
            RejectionRule::NotAMember => "not_a_member",
            RejectionRule::RoleViolation => "role_violation",
            RejectionRule::GateClosed => "gate_closed",
            RejectionRule::AdjacencyViolation => "adjacency_violation",
            RejectionRule::MissingTarget => "missing_target",
            RejectionRule::FeedbackBusy => "feedback_busy",
            RejectionRule::RecipientLacksRole => "recipient_lacks_role",
            RejectionRule::NotAParty => "not_a_party",
            RejectionRule::NotYourTurn => "not_your_turn",
            RejectionRule::FeedbackClosed => "feedback_closed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventPayload {
    SessionStarted {
        session_id: String,
        config: TeamConfig,
        seed: u64,
        time_scale: f64,
    },
    IdeaGenerated {
        idea: Idea,
    },
    IdeaUpdated {
        idea: Idea,
    },
    IdeaEvaluated {
        evaluation: Evaluation,
    },
    /// Opens a one-on-one session; the opening message is its first turn.
    FeedbackOpened {
        session_ref: FeedbackRef,
        initiator: MemberId,
        recipient: MemberId,
        message: String,
    },
    FeedbackMessage {
        session_ref: FeedbackRef,
        author: MemberId,
        text: String,
        conclude: bool,
    },
    FeedbackClosed {
        session_ref: FeedbackRef,
        forced: bool,
    },
    RequestIssued {
        request_ref: RequestRef,
        from: MemberId,
        to: MemberId,
        action: RequestableAction,
        text: String,
    },
    RequestFulfilled {
        request_ref: RequestRef,
        by: MemberId,
    },
    PhaseChanged {
        member: MemberId,
        phase: AgentPhase,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intent: Option<Intent>,
    },
    ActionSkipped {
        member: MemberId,
        reason: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        request_ref: Option<RequestRef>,
    },
    ActionRejected {
        actor: MemberId,
        action: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<MemberId>,
        rule: RejectionRule,
    },
    /// Memory update produced by the reflection pipeline.
    Reflected {
        member: MemberId,
        trigger: ReflectTrigger,
        delta: ReflectionDelta,
    },
    SessionEnded,
}

impl EventPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            EventPayload::SessionStarted { .. } => "session_started",
            EventPayload::IdeaGenerated { .. } => "idea_generated",
            EventPayload::IdeaUpdated { .. } => "idea_updated",
            EventPayload::IdeaEvaluated { .. } => "idea_evaluated",
            EventPayload::FeedbackOpened { .. } => "feedback_opened",
            EventPayload::FeedbackMessage { .. } => "feedback_message",
            EventPayload::FeedbackClosed { .. } => "feedback_closed",
            EventPayload::RequestIssued { .. } => "request_issued",
            EventPayload::RequestFulfilled { .. } => "request_fulfilled",
            EventPayload::PhaseChanged { .. } => "phase_changed",
            EventPayload::ActionSkipped { .. } => "action_skipped",
            EventPayload::ActionRejected { .. } => "action_rejected",
            EventPayload::Reflected { .. } => "reflected",
            EventPayload::SessionEnded => "session_ended",
        }
    }

    /// Member performing the action this event records, if any.
    pub fn actor(&self) -> Option<&MemberId> {
        match self {
            EventPayload::IdeaGenerated { idea } | EventPayload::IdeaUpdated { idea } => {
                Some(&idea.author)
            }
            EventPayload::IdeaEvaluated { evaluation } => Some(&evaluation.evaluator),
            EventPayload::FeedbackOpened { initiator, .. } => Some(initiator),
            EventPayload::FeedbackMessage { author, .. } => Some(author),
            EventPayload::RequestIssued { from, .. } => Some(from),
            EventPayload::RequestFulfilled { by, .. } => Some(by),
            EventPayload::PhaseChanged { member, .. }
            | EventPayload::ActionSkipped { member, .. }
            | EventPayload::Reflected { member, .. } => Some(member),
            EventPayload::ActionRejected { actor, .. } => Some(actor),
            EventPayload::SessionStarted { .. }
            | EventPayload::FeedbackClosed { .. }
            | EventPayload::SessionEnded => None,
        }
    }

    /// One of the events an Act step produces as its single action.
    pub fn is_action(&self) -> bool {
        matches!(
            self,
            EventPayload::IdeaGenerated { .. }
                | EventPayload::IdeaUpdated { .. }
                | EventPayload::IdeaEvaluated { .. }
                | EventPayload::FeedbackOpened { .. }
                | EventPayload::FeedbackMessage { .. }
                | EventPayload::RequestIssued { .. }
                | EventPayload::ActionSkipped { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub at: VirtualTime,
    #[serde(flatten)]
    pub payload: EventPayload,
}

impl SessionEvent {
    /// Canonical single-line JSON encoding.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }
}
