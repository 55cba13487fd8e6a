//! Flat-file storage: one JSONL file per session log and one JSON file per
//! team, under a data directory.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{ApplyError, EventLog, EventPayload, LogError, SessionEvent, SessionState};
use crate::team::TeamConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("expected event {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },
    #[error("corrupt log at line {line}: {detail}")]
    CorruptLog { line: usize, detail: String },
    #[error("unsupported log format: {0}")]
    UnsupportedVersion(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("replay failed: {0}")]
    Replay(#[from] ApplyError),
}

impl From<LogError> for PersistError {
    fn from(e: LogError) -> Self {
        match e {
            LogError::SequenceGap { expected, got } => PersistError::SequenceGap { expected, got },
            LogError::Sealed => PersistError::Replay(ApplyError::Ended),
        }
    }
}

/// Where the engine sends each committed event.
pub trait EventStore: Send {
    fn append(&mut self, event: &SessionEvent) -> Result<(), PersistError>;

    fn flush(&mut self) -> Result<(), PersistError> {
        Ok(())
    }
}

/// In-memory store, mainly for tests.
#[derive(Debug, Default)]
pub struct MemoryStore {
    pub events: Vec<SessionEvent>,
}

impl EventStore for MemoryStore {
    fn append(&mut self, event: &SessionEvent) -> Result<(), PersistError> {
        let expected = self.events.len() as u64;
        if event.seq != expected {
            return Err(PersistError::SequenceGap {
                expected,
                got: event.seq,
            });
        }
        self.events.push(event.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format_version: u32,
    pub session_id: String,
    pub config_digest: String,
}

impl LogHeader {
    pub fn new(session_id: &str, config: &TeamConfig) -> Self {
        LogHeader {
            format_version: FORMAT_VERSION,
            session_id: session_id.to_string(),
            config_digest: config.digest(),
        }
    }
}

/// Appends events to a JSONL log, one flushed line per event.
#[derive(Debug)]
pub struct JsonlWriter {
    file: File,
    next_seq: u64,
}

impl JsonlWriter {
    /// Creates (or replaces) a log file and writes its header.
    pub fn create(path: &Path, header: &LogHeader) -> Result<Self, PersistError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut file = File::create(path)?;
        let line = serde_json::to_string(header).expect("header serializes");
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
        file.flush()?;
        Ok(JsonlWriter { file, next_seq: 0 })
    }

    /// Reopens a log for appending. A partial final line left by a crash is
    /// cut off; the complete events before it are returned.
    pub fn open(path: &Path) -> Result<(Self, Vec<SessionEvent>), PersistError> {
        let mut file = OpenOptions::new().read(true).write(true).open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let keep = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        if keep < bytes.len() {
            file.set_len(keep as u64)?;
        }
        file.seek(SeekFrom::Start(keep as u64))?;
        let (_, events) = parse_log(&bytes[..keep])?;
        let next_seq = events.len() as u64;
        Ok((JsonlWriter { file, next_seq }, events))
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn append_event(&mut self, event: &SessionEvent) -> Result<(), PersistError> {
        if event.seq != self.next_seq {
            return Err(PersistError::SequenceGap {
                expected: self.next_seq,
                got: event.seq,
            });
        }
        let mut line = event.to_json_line();
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        self.next_seq += 1;
        Ok(())
    }
}

impl EventStore for JsonlWriter {
    fn append(&mut self, event: &SessionEvent) -> Result<(), PersistError> {
        self.append_event(event)
    }

    fn flush(&mut self) -> Result<(), PersistError> {
        self.file.sync_all()?;
        Ok(())
    }
}

/// Writes a complete log in one go.
pub fn write_log(path: &Path, log: &EventLog) -> Result<(), PersistError> {
    let (Some(id), Some(config)) = (log.session_id(), log.config()) else {
        return Err(PersistError::UnsupportedVersion("log has no session_started event".into()));
    };
    let mut w = JsonlWriter::create(path, &LogHeader::new(id, config))?;
    for e in log.events() {
        w.append_event(e)?;
    }
    Ok(())
}

fn parse_log(bytes: &[u8]) -> Result<(LogHeader, Vec<SessionEvent>), PersistError> {
    let mut lines = BufReader::new(bytes).lines();
    let header_line = match lines.next() {
        Some(l) => l?,
        None => return Err(PersistError::UnsupportedVersion("missing header".into())),
    };
    let header: LogHeader = serde_json::from_str(&header_line)
        .map_err(|e| PersistError::UnsupportedVersion(format!("unreadable header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(PersistError::UnsupportedVersion(format!(
            "format_version {} (expected {FORMAT_VERSION})",
            header.format_version
        )));
    }
    let mut events = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let event: SessionEvent =
            serde_json::from_str(&line).map_err(|e| PersistError::CorruptLog {
                line: line_no,
                detail: e.to_string(),
            })?;
        if event.seq != events.len() as u64 {
            return Err(PersistError::CorruptLog {
                line: line_no,
                detail: format!("expected seq {}, found {}", events.len(), event.seq),
            });
        }
        if let EventPayload::SessionStarted {
            session_id, config, ..
        } = &event.payload
        {
            if session_id != &header.session_id || config.digest() != header.config_digest {
                return Err(PersistError::CorruptLog {
                    line: line_no,
                    detail: "header does not match the embedded session".into(),
                });
            }
        }
        events.push(event);
    }
    Ok((header, events))
}

pub fn read_log(path: &Path) -> Result<(LogHeader, Vec<SessionEvent>), PersistError> {
    let bytes = fs::read(path)?;
    parse_log(&bytes)
}

#[derive(Debug, Clone)]
pub struct Replayed {
    pub header: LogHeader,
    pub state: SessionState,
    pub log: EventLog,
}

/// Reads a log file and folds it into session state.
pub fn replay(path: &Path) -> Result<Replayed, PersistError> {
    let (header, events) = read_log(path)?;
    let state = SessionState::fold(&events)?;
    let log = EventLog::from_events(events)?;
    Ok(Replayed { header, state, log })
}

/// Team and session files under one root directory.
#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn team_path(&self, team_id: &str) -> PathBuf {
        self.root.join("teams").join(format!("{team_id}.json"))
    }

    pub fn session_path(&self, session_id: &str) -> PathBuf {
        self.root
            .join("sessions")
            .join(format!("{session_id}.events.jsonl"))
    }

    pub fn save_team(&self, team_id: &str, config: &TeamConfig) -> Result<PathBuf, PersistError> {
        check_id(team_id)?;
        let path = self.team_path(team_id);
        fs::create_dir_all(path.parent().expect("team path has a parent"))?;
        let mut body = serde_json::to_string_pretty(config).expect("config serializes");
        body.push('\n');
        fs::write(&path, body)?;
        Ok(path)
    }

    pub fn load_team(&self, team_id: &str) -> Result<TeamConfig, PersistError> {
        check_id(team_id)?;
        let path = self.team_path(team_id);
        let body = fs::read_to_string(&path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => PersistError::NotFound(format!("team {team_id}")),
            _ => PersistError::Io(e),
        })?;
        serde_json::from_str(&body).map_err(|e| PersistError::CorruptLog {
            line: e.line(),
            detail: e.to_string(),
        })
    }

    /// A writer for a new session log.
    pub fn create_session_log(
        &self,
        session_id: &str,
        config: &TeamConfig,
    ) -> Result<JsonlWriter, PersistError> {
        check_id(session_id)?;
        JsonlWriter::create(&self.session_path(session_id), &LogHeader::new(session_id, config))
    }

    pub fn replay_session(&self, session_id: &str) -> Result<Replayed, PersistError> {
        check_id(session_id)?;
        let path = self.session_path(session_id);
        if !path.exists() {
            return Err(PersistError::NotFound(format!("session {session_id}")));
        }
        replay(&path)
    }
}

fn check_id(id: &str) -> Result<(), PersistError> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(PersistError::NotFound(format!("invalid id `{id}`")))
    }
}
