use super::engine::derive_session_id;
use super::event::{EventPayload, SessionEvent};
use super::log::EventLog;
use super::state::{ApplyError, SessionState};
use crate::clock::VirtualTime;
use crate::team::TeamConfig;

/// Assembles a log event by event, checking each against the fold. Meant
/// for fixtures and tools that construct logs without running agents.
#[derive(Debug, Clone)]
pub struct LogBuilder {
    state: SessionState,
    log: EventLog,
}

impl LogBuilder {
    pub fn new(config: &TeamConfig, seed: u64) -> Self {
        let session_id = derive_session_id(config, seed, 1.0);
        let started = SessionEvent {
            seq: 0,
            at: VirtualTime::ZERO,
            payload: EventPayload::SessionStarted {
                session_id,
                config: config.clone(),
                seed,
                time_scale: 1.0,
            },
        };
        let state = SessionState::fold([&started]).expect("a started session folds");
        let mut log = EventLog::new();
        log.push(started).expect("first event");
        LogBuilder { state, log }
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn now(&self) -> VirtualTime {
        self.state.now()
    }

    /// Appends `payload` at `at`, which must not precede the previous event.
    pub fn push(&mut self, at: VirtualTime, payload: EventPayload) -> Result<&SessionEvent, ApplyError> {
        let event = SessionEvent {
            seq: self.state.next_seq,
            at,
            payload,
        };
        self.state.apply(&event)?;
        self.log.push(event).expect("builder keeps seq in step");
        Ok(self.log.events().last().expect("just pushed"))
    }

    /// Appends `session_ended` and returns the sealed log.
    pub fn finish(mut self) -> Result<EventLog, ApplyError> {
        let at = self.state.now();
        self.push(at, EventPayload::SessionEnded)?;
        self.log.seal();
        Ok(self.log)
    }
}
