use std::sync::Arc;

use crafteam_core::clock::VirtualTime;
use crafteam_core::idea::{Evaluation, Idea, IdeaId, MeanRating, Ofbs};
use crafteam_core::llm::MockProvider;
use crafteam_core::presets;
use crafteam_core::reflection::*;
use crafteam_core::session::{start_session, EventPayload, LogBuilder, RequestableAction};
use crafteam_core::team::{MemberId, Persona, RoleKind, TeamConfig};

fn mid(s: &str) -> MemberId {
    MemberId::from(s)
}

#[test]
fn sample_log_counts() {
    let log = presets::sample_log();
    let s = summarize(&log).unwrap();
    assert_eq!(
        s,
        SessionSummary {
            participants: 3,
            total_ideas: 8,
            evaluations: 12,
            feedback_sessions: 10,
            requests: 8,
        }
    );
    let rows = member_activity(&log).unwrap();
    let jade = rows[&mid("h")];
    assert_eq!(
        (jade.idea_generation, jade.idea_evaluation, jade.feedback_sessions, jade.requests),
        (2, 3, 3, 5)
    );
    let ranked = rank_ideas(&log).unwrap();
    let top: Vec<String> = ranked[..3]
        .iter()
        .map(|r| r.mean_rating.unwrap().to_string())
        .collect();
    assert_eq!(top, ["6.2", "5.7", "4.9"]);
}

#[test]
fn empty_session_is_all_zero() {
    let log = LogBuilder::new(&presets::flat_team(2), 1).finish().unwrap();
    let s = summarize(&log).unwrap();
    assert_eq!((s.total_ideas, s.evaluations, s.feedback_sessions, s.requests), (0, 0, 0, 0));
    let rows = member_activity(&log).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.values().all(|r| *r == MemberCounts::default()));
    assert!(rank_ideas(&log).unwrap().is_empty());
}

#[test]
fn live_log_is_not_sealed() {
    let s = start_session(presets::flat_team(2), Arc::new(MockProvider::new(1)), 1, 1.0).unwrap();
    assert_eq!(summarize(s.log()), Err(ReflectionError::NotSealed));
    assert_eq!(timeline(s.log(), None, false), Err(ReflectionError::NotSealed));
}

#[test]
fn feedback_flow_is_directional() {
    let log = presets::sample_log();
    let f = flow(&log, FlowKind::Feedback).unwrap();
    assert_eq!(f.get(&mid("h"), &mid("a1")), 1);
    assert_eq!(f.get(&mid("a1"), &mid("h")), 1);
    assert_eq!(f.get(&mid("h"), &mid("a2")), 1);
    assert_eq!(f.get(&mid("a2"), &mid("h")), 0);
    assert_eq!(f.total(), 10);
    assert_eq!(flow(&log, FlowKind::Request).unwrap().total(), 8);
}

#[test]
fn timeline_filters_and_orders() {
    let log = presets::sample_log();
    let all = timeline(&log, None, false).unwrap();
    let actions = log
        .events()
        .iter()
        .filter(|e| on_timeline(&e.payload))
        .count();
    assert_eq!(all.len(), actions);
    assert!(all.windows(2).all(|w| w[0].seq < w[1].seq));
    let jade = timeline(&log, Some(&mid("h")), false).unwrap();
    // 2 ideas, 3 evaluations, 3 sessions x 3 events, 5 requests
    assert_eq!(jade.len(), 2 + 3 + 9 + 5);
}

fn idea(n: usize, at: u64) -> EventPayload {
    EventPayload::IdeaGenerated {
        idea: Idea {
            idea_id: IdeaId::new(format!("idea-{n}")),
            title: format!("i{n}"),
            content: Ofbs::new("o", "f", "b", "s"),
            author: "h".into(),
            parent_id: None,
            created_at: VirtualTime::from_secs(at),
        },
    }
}

fn eval(n: usize, by: &str, s: [u8; 3], at: u64) -> EventPayload {
    EventPayload::IdeaEvaluated {
        evaluation: Evaluation {
            idea_id: IdeaId::new(format!("idea-{n}")),
            evaluator: by.into(),
            novelty: s[0],
            completeness: s[1],
            quality: s[2],
            comment: None,
            created_at: VirtualTime::from_secs(at),
        },
    }
}

#[test]
fn ranking_ties_and_unrated() {
    let mut b = LogBuilder::new(&presets::flat_team(2), 1);
    for n in 1..=4 {
        b.push(VirtualTime::from_secs(n as u64), idea(n, n as u64)).unwrap();
    }
    b.push(VirtualTime::from_secs(10), eval(3, "a1", [4, 4, 4], 10)).unwrap();
    b.push(VirtualTime::from_secs(11), eval(2, "a1", [4, 4, 4], 11)).unwrap();
    let log = b.finish().unwrap();
    let order: Vec<String> = rank_ideas(&log)
        .unwrap()
        .into_iter()
        .map(|r| r.idea_id.to_string())
        .collect();
    assert_eq!(order, ["idea-2", "idea-3", "idea-1", "idea-4"]);

    let mut b = LogBuilder::new(&presets::flat_team(2), 1);
    for n in 1..=3 {
        b.push(VirtualTime::from_secs(n as u64), idea(n, n as u64)).unwrap();
    }
    let order: Vec<String> = rank_ideas(&b.finish().unwrap())
        .unwrap()
        .into_iter()
        .map(|r| r.idea_id.to_string())
        .collect();
    assert_eq!(order, ["idea-1", "idea-2", "idea-3"]);
}

#[test]
fn pooled_mean_rating() {
    let mut b = LogBuilder::new(&presets::flat_team(2), 1);
    b.push(VirtualTime::from_secs(1), idea(1, 1)).unwrap();
    b.push(VirtualTime::from_secs(2), eval(1, "a1", [3, 5, 4], 2)).unwrap();
    let ranked = rank_ideas(&b.clone().finish().unwrap()).unwrap();
    assert_eq!(ranked[0].mean_rating, MeanRating::from_ratio(12, 3));
    assert_eq!(ranked[0].mean_rating.unwrap().to_string(), "4.0");
    b.push(VirtualTime::from_secs(3), eval(1, "a2", [7, 6, 6], 3)).unwrap();
    // (12 + 19) / 6 = 5.1666...
    let ranked = rank_ideas(&b.finish().unwrap()).unwrap();
    assert_eq!(ranked[0].mean_rating.unwrap().to_string(), "5.2");
}

fn sized(n: usize) -> TeamConfig {
    presets::flat_team(n - 1)
}

#[test]
fn formation_size_mean_and_population_sd() {
    let stats = formation_stats(&[vec![sized(5), sized(5), sized(4)]]).unwrap();
    let c = &stats.cycles[0];
    assert_eq!(format!("{:.2}", c.team_size.mean), "4.67");
    assert_eq!(format!("{:.2}", c.team_size.sd), "0.47");
    assert_eq!(c.structure.flat, 3);
    assert_eq!(stats.sd, "population");
    assert_eq!(formation_stats(&[vec![]]), Err(ReflectionError::EmptyInput(1)));
}

#[test]
fn persona_completion_percentages() {
    let mut c = presets::flat_team(2);
    for m in c.members.iter_mut().skip(1) {
        m.persona = Persona::named("x");
        m.persona.social.age = Some(30);
        m.persona.social.gender = Some("f".into());
        m.persona.social.education = Some("MSc".into());
        m.persona.social.occupation = Some("nurse".into());
        m.persona.personal.skills = Some("sketching".into());
    }
    let stats = formation_stats(&[vec![c]]).unwrap();
    let p = stats.cycles[0].persona_completion;
    assert_eq!(p.social, 100.0);
    assert_eq!(p.personal, 50.0);
    assert_eq!(p.life_context, 0.0);
}

#[test]
fn ideation_per_member_and_pairing() {
    let mut config = presets::flat_team(3);
    config.members[3].roles = [RoleKind::IdeaEvaluation].into();
    let mut b = LogBuilder::new(&config, 1);
    for (n, author) in [(1, "a1"), (2, "a2"), (3, "a1"), (4, "a2")] {
        let mut p = idea(n, n as u64);
        if let EventPayload::IdeaGenerated { idea } = &mut p {
            idea.author = author.into();
        }
        b.push(VirtualTime::from_secs(n as u64), p).unwrap();
    }
    let log = b.finish().unwrap();
    let stats = ideation_stats(&[vec![(log.clone(), config.clone())]]).unwrap();
    let agents = &stats.cycles[0].by_class[&ActorClass::Agent];
    assert_eq!(agents.idea_generation.count, 4);
    assert_eq!(agents.idea_generation.per_member.n, 2);
    assert_eq!(agents.idea_generation.per_member.mean, 2.0);
    let other = presets::flat_team(2);
    assert!(matches!(
        ideation_stats(&[vec![(log, other)]]),
        Err(ReflectionError::PairingError(_))
    ));
}

#[test]
fn request_types_partition_total() {
    let log = presets::sample_log();
    let stats = ideation_stats(&[vec![(log, presets::sample_team())]]).unwrap();
    let mut total = 0;
    for class in stats.cycles[0].by_class.values() {
        let sum: usize = class.request.by_action.values().sum();
        assert_eq!(sum, class.request.count);
        total += sum;
    }
    assert_eq!(total, 8);
    let human = &stats.cycles[0].by_class[&ActorClass::Human];
    assert_eq!(human.request.by_action[&RequestableAction::IdeaGeneration], 2);
    assert_eq!(human.feedback.sessions, 2);
    let (header, rows) = ideation_rows(&stats);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.len() == header.len()));
}
