//! Event-sourced ideation sessions: the event vocabulary, state fold,
//! permission rules and the engine that drives agents on a virtual clock.

mod builder;
mod engine;
mod event;
mod log;
mod rules;
mod state;

pub use builder::LogBuilder;
pub use engine::{derive_session_id, start_session, HumanAction, HumanActionError, Session, SessionError};
pub use event::{EventPayload, FeedbackRef, RejectionRule, RequestRef, RequestableAction, SessionEvent};
pub use log::{EventLog, LogError};
pub use rules::{authorize, authorize_reply, authorize_request};
pub use state::{
    ApplyError, FeedbackLine, InboxItem, RequestRecord, RequestStatus, SessionState, Transcript,
};
