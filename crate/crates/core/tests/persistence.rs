use std::fs::{self, OpenOptions};
use std::io::Write;
use std::sync::Arc;

use crafteam_core::clock::VirtualTime;
use crafteam_core::llm::MockProvider;
use crafteam_core::persistence::*;
use crafteam_core::presets;
use crafteam_core::reflection::reflect;
use crafteam_core::session::{EventPayload, Session, SessionEvent};

fn simulated(seed: u64, store: Option<Box<dyn EventStore>>) -> Session {
    let mut s = Session::start(
        presets::mixed_team(),
        Arc::new(MockProvider::new(seed)),
        seed,
        1.0,
        Default::default(),
        store,
    )
    .unwrap();
    s.run_until(VirtualTime::from_secs(240)).unwrap();
    s.end_session().unwrap();
    s
}

fn started(config: &crafteam_core::team::TeamConfig) -> SessionEvent {
    SessionEvent {
        seq: 0,
        at: VirtualTime::ZERO,
        payload: EventPayload::SessionStarted {
            session_id: "s-test".into(),
            config: config.clone(),
            seed: 1,
            time_scale: 1.0,
        },
    }
}

fn at(seq: u64) -> SessionEvent {
    SessionEvent {
        seq,
        at: VirtualTime::from_secs(seq),
        payload: EventPayload::SessionEnded,
    }
}

#[test]
fn one_line_per_event_after_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.events.jsonl");
    let config = presets::flat_team(1);
    let mut w = JsonlWriter::create(&path, &LogHeader::new("s-test", &config)).unwrap();
    w.append_event(&started(&config)).unwrap();
    w.append_event(&at(1)).unwrap();
    w.append_event(&at(2)).unwrap();
    let body = fs::read_to_string(&path).unwrap();
    assert_eq!(body.lines().count(), 4);
    assert!(body.lines().next().unwrap().contains("\"format_version\":1"));
}

#[test]
fn skipped_seq_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = presets::flat_team(1);
    let mut w =
        JsonlWriter::create(&dir.path().join("x.jsonl"), &LogHeader::new("s-test", &config)).unwrap();
    w.append_event(&started(&config)).unwrap();
    let err = w.append_event(&at(2)).unwrap_err();
    assert!(matches!(err, PersistError::SequenceGap { expected: 1, got: 2 }));
    assert_eq!(w.next_seq(), 1);
}

#[test]
fn live_store_replays_to_live_state() {
    let dir = DataDir::new(tempfile::tempdir().unwrap().keep());
    let config = presets::mixed_team();
    let id = crafteam_core::session::derive_session_id(&config, 5, 1.0);
    let writer = dir.create_session_log(&id, &config).unwrap();
    let live = simulated(5, Some(Box::new(writer)));
    assert_eq!(live.id(), id);
    let replayed = dir.replay_session(&id).unwrap();
    assert_eq!(&replayed.state, live.state());
    assert_eq!(replayed.log.events(), live.log().events());
    assert!(replayed.log.is_sealed());
    assert_eq!(reflect(&replayed.log).unwrap(), reflect(live.log()).unwrap());
    fs::remove_dir_all(dir.root()).unwrap();
}

#[test]
fn crash_truncation_keeps_complete_events() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.events.jsonl");
    let live = simulated(9, None);
    write_log(&path, live.log()).unwrap();
    let total = live.log().len();
    let mut f = OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(b"{\"seq\":").unwrap();
    drop(f);

    let (w, events) = JsonlWriter::open(&path).unwrap();
    assert_eq!(events.len(), total);
    assert_eq!(w.next_seq(), total as u64);
    assert!(fs::read(&path).unwrap().ends_with(b"\n"));

    // drop the sealing event and half of the one before it
    let body = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    let mut cut = lines[..lines.len() - 2].join("\n");
    cut.push('\n');
    cut.push_str(&lines[lines.len() - 2][..10]);
    fs::write(&path, cut).unwrap();
    drop(w);
    let (mut w, events) = JsonlWriter::open(&path).unwrap();
    assert_eq!(events.len(), total - 2);
    assert_eq!(events.last(), live.log().events().get(total - 3));
    w.append_event(&live.log().events()[total - 2]).unwrap();
    w.append_event(&live.log().events()[total - 1]).unwrap();
    assert_eq!(&replay(&path).unwrap().state, live.state());
}

#[test]
fn tampered_line_reports_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.events.jsonl");
    write_log(&path, &presets::sample_log()).unwrap();
    let body = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = body.lines().map(String::from).collect();
    lines[4] = lines[4].replacen("\"seq\":3", "\"seq\":30", 1);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    match replay(&path) {
        Err(PersistError::CorruptLog { line, .. }) => assert_eq!(line, 5),
        other => panic!("expected CorruptLog, got {other:?}"),
    }
    lines[4] = "not json".into();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert!(matches!(replay(&path), Err(PersistError::CorruptLog { line: 5, .. })));
}

#[test]
fn empty_or_foreign_files_are_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.jsonl");
    fs::write(&path, "").unwrap();
    assert!(matches!(replay(&path), Err(PersistError::UnsupportedVersion(_))));
    fs::write(&path, "{\"format_version\":2,\"session_id\":\"s\",\"config_digest\":\"d\"}\n").unwrap();
    assert!(matches!(replay(&path), Err(PersistError::UnsupportedVersion(_))));
}

#[test]
fn teams_round_trip_and_missing_ids() {
    let dir = DataDir::new(tempfile::tempdir().unwrap().keep());
    let config = presets::multi_tier_team(3);
    dir.save_team("t-1", &config).unwrap();
    assert_eq!(dir.load_team("t-1").unwrap(), config);
    assert!(matches!(dir.load_team("t-2"), Err(PersistError::NotFound(_))));
    assert!(matches!(dir.replay_session("s-none"), Err(PersistError::NotFound(_))));
    assert!(dir.load_team("../etc").is_err());
    fs::remove_dir_all(dir.root()).unwrap();
}
