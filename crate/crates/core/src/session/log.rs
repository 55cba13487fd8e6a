use serde::Serialize;
use thiserror::Error;

use super::event::{EventPayload, SessionEvent};
use crate::team::TeamConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("log is sealed")]
    Sealed,
    #[error("expected event {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },
}

/// Append-only, gap-free event sequence. Sealed once the session ends.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EventLog {
    events: Vec<SessionEvent>,
    sealed: bool,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a log from stored events; sealed if the last one ends the session.
    pub fn from_events(events: Vec<SessionEvent>) -> Result<Self, LogError> {
        let mut log = EventLog::new();
        for e in events {
            log.push(e)?;
        }
        if matches!(log.events.last().map(|e| &e.payload), Some(EventPayload::SessionEnded)) {
            log.sealed = true;
        }
        Ok(log)
    }

    pub fn push(&mut self, event: SessionEvent) -> Result<(), LogError> {
        if self.sealed {
            return Err(LogError::Sealed);
        }
        let expected = self.events.len() as u64;
        if event.seq != expected {
            return Err(LogError::SequenceGap {
                expected,
                got: event.seq,
            });
        }
        self.events.push(event);
        Ok(())
    }

    pub fn seal(&mut self) {
        self.sealed = true;
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events with `seq >= from`.
    pub fn since(&self, from: u64) -> &[SessionEvent] {
        let start = (from as usize).min(self.events.len());
        &self.events[start..]
    }

    pub fn config(&self) -> Option<&TeamConfig> {
        match &self.events.first()?.payload {
            EventPayload::SessionStarted { config, .. } => Some(config),
            _ => None,
        }
    }

    pub fn session_id(&self) -> Option<&str> {
        match &self.events.first()?.payload {
            EventPayload::SessionStarted { session_id, .. } => Some(session_id),
            _ => None,
        }
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_json_line());
            out.push('\n');
        }
        out
    }
}
