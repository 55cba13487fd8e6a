use std::collections::BTreeMap;
use std::sync::Arc;

use crafteam_core::agent::{is_legal_transition, AgentPhase, RECENT_ACTIONS_CAP};
use crafteam_core::clock::VirtualTime;
use crafteam_core::idea::Ofbs;
use crafteam_core::llm::MockProvider;
use crafteam_core::presets;
use crafteam_core::session::{
    start_session, EventPayload, HumanAction, HumanActionError, RejectionRule, RequestableAction,
    Session, SessionState,
};
use crafteam_core::team::{MemberId, RoleKind, TeamConfig};

fn run(config: TeamConfig, seed: u64, time_scale: f64, secs: u64) -> Session {
    let provider = Arc::new(MockProvider::new(seed));
    let mut s = start_session(config, provider, seed, time_scale).unwrap();
    s.run_until(VirtualTime::from_secs(secs)).unwrap();
    s.end_session().unwrap();
    s
}

fn kinds(s: &Session) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for e in s.log().events() {
        *m.entry(e.payload.kind()).or_default() += 1;
    }
    m
}

#[test]
fn agents_produce_every_kind_of_action() {
    let s = run(presets::mixed_team(), 42, 1.0, 600);
    let k = kinds(&s);
    for kind in [
        "idea_generated",
        "idea_evaluated",
        "feedback_opened",
        "feedback_message",
        "feedback_closed",
        "request_issued",
        "reflected",
    ] {
        assert!(k.get(kind).copied().unwrap_or(0) > 0, "no {kind} in {k:?}");
    }
    assert!(s.log().is_sealed());
}

#[test]
fn replay_equals_live_state() {
    for (seed, scale) in [(1, 1.0), (2, 0.0), (3, 0.25)] {
        let s = run(presets::multi_tier_team(4), seed, scale, 300);
        let replayed = SessionState::fold(s.log().events()).unwrap();
        assert_eq!(&replayed, s.state());
    }
}

#[test]
fn same_seed_same_log() {
    let a = run(presets::flat_team(3), 42, 0.0, 200);
    let b = run(presets::flat_team(3), 42, 0.0, 200);
    assert_eq!(a.log().to_jsonl(), b.log().to_jsonl());
    let c = run(presets::flat_team(3), 43, 0.0, 200);
    assert_ne!(a.log().to_jsonl(), c.log().to_jsonl());
}

#[test]
fn phases_follow_the_transition_table() {
    let s = run(presets::single_tier_team(4), 9, 1.0, 600);
    let mut phase: BTreeMap<MemberId, AgentPhase> = BTreeMap::new();
    let mut acts = BTreeMap::<MemberId, usize>::new();
    for e in s.log().events() {
        if let EventPayload::PhaseChanged { member, phase: to, .. } = &e.payload {
            let from = phase.get(member).copied().unwrap_or(AgentPhase::Plan);
            assert!(is_legal_transition(&from, to), "{from:?} -> {to:?}");
            if from == AgentPhase::Act {
                assert_eq!(acts.remove(member), Some(1), "one action per act for {member}");
            }
            if *to == AgentPhase::Act {
                acts.insert(member.clone(), 0);
            }
            phase.insert(member.clone(), *to);
        } else if e.payload.is_action() {
            if let Some(n) = e.payload.actor().and_then(|a| acts.get_mut(a)) {
                *n += 1;
            }
        }
    }
    for a in s.state().agents.values() {
        assert!(a.stm.recent_actions.len() <= RECENT_ACTIONS_CAP);
    }
}

#[test]
fn human_is_gated_until_first_idea() {
    let provider = Arc::new(MockProvider::new(5));
    let mut s = start_session(presets::single_tier_team(3), provider, 5, 1.0).unwrap();
    let err = s
        .submit_human_action(HumanAction::OpenFeedback {
            recipient: "a1".into(),
            message: "hello".into(),
        })
        .unwrap_err();
    match err {
        HumanActionError::Rejected { rule, event } => {
            assert_eq!(rule, RejectionRule::GateClosed);
            assert_eq!(event.payload.kind(), "action_rejected");
        }
        other => panic!("{other:?}"),
    }
    let out = s
        .submit_human_action(HumanAction::GenerateIdea {
            title: "Door buddy".into(),
            content: Ofbs::new("a door sensor", "reminds of keys", "beeps on exit", "sensor + app"),
        })
        .unwrap();
    assert_eq!(out[0].payload.kind(), "idea_generated");
    assert!(s.state().gate_open);
    s.submit_human_action(HumanAction::Request {
        recipient: "a2".into(),
        action: RequestableAction::IdeaEvaluation,
        message: "please rate idea-1".into(),
    })
    .unwrap();
    s.run_until(VirtualTime::from_secs(120)).unwrap();
    let fulfilled = s
        .log()
        .events()
        .iter()
        .any(|e| matches!(&e.payload, EventPayload::RequestFulfilled { by, .. } if by.as_str() == "a2"));
    assert!(fulfilled);
}

#[test]
fn human_role_and_adjacency_are_enforced() {
    let mut config = presets::multi_tier_team(3);
    config.members[0].roles = [RoleKind::IdeaGeneration, RoleKind::Feedback].into();
    let provider = Arc::new(MockProvider::new(5));
    let mut s = start_session(config, provider, 5, 1.0).unwrap();
    s.submit_human_action(HumanAction::GenerateIdea {
        title: "t".into(),
        content: Ofbs::new("o", "f", "b", "s"),
    })
    .unwrap();
    let rule = |r: Result<_, HumanActionError>| match r {
        Err(HumanActionError::Rejected { rule, .. }) => Some(rule),
        _ => None,
    };
    assert_eq!(
        rule(s.submit_human_action(HumanAction::Evaluate {
            idea_id: "idea-1".into(),
            novelty: 3,
            completeness: 3,
            quality: 3,
            comment: None,
        })),
        Some(RejectionRule::RoleViolation)
    );
    assert_eq!(
        rule(s.submit_human_action(HumanAction::OpenFeedback {
            recipient: "a2".into(),
            message: "hi".into(),
        })),
        Some(RejectionRule::AdjacencyViolation)
    );
    assert!(s
        .submit_human_action(HumanAction::OpenFeedback {
            recipient: "a1".into(),
            message: "hi".into(),
        })
        .is_ok());
    assert_eq!(
        rule(s.submit_human_action(HumanAction::OpenFeedback {
            recipient: "a1".into(),
            message: "again".into(),
        })),
        Some(RejectionRule::FeedbackBusy)
    );
}

#[test]
fn end_session_is_idempotent_and_closes_feedback() {
    let provider = Arc::new(MockProvider::new(5));
    let mut s = start_session(presets::single_tier_team(3), provider, 5, 1.0).unwrap();
    s.submit_human_action(HumanAction::GenerateIdea {
        title: "t".into(),
        content: Ofbs::new("o", "f", "b", "s"),
    })
    .unwrap();
    s.submit_human_action(HumanAction::OpenFeedback {
        recipient: "a1".into(),
        message: "hi".into(),
    })
    .unwrap();
    let n = s.end_session().unwrap().len();
    assert_eq!(s.end_session().unwrap().len(), n);
    let last_two: Vec<_> = s.log().events()[n - 2..].iter().map(|e| e.payload.kind()).collect();
    assert_eq!(last_two, ["feedback_closed", "session_ended"]);
    assert!(s.step().is_err());
}
