//! Ready-made teams in the three canonical structures, used by the CLI
//! fixtures and the test suites.

use crate::clock::VirtualTime;
use crate::idea::{Evaluation, Idea, IdeaId, Ofbs};
use crate::session::{EventLog, LogBuilder};
use crate::team::{
    EdgeKind, MemberId, MemberKind, MemberSpec, Persona, RoleKind, SharedMentalModel,
    StructureEdge, TeamConfig,
};

pub const DEFAULT_TOPIC: &str = "smart home services for people living alone";

pub fn member(id: &str, kind: MemberKind, name: &str, roles: &[RoleKind]) -> MemberSpec {
    MemberSpec {
        member_id: MemberId::new(id),
        kind,
        persona: Persona::named(name),
        roles: roles.iter().copied().collect(),
    }
}

fn human() -> MemberSpec {
    let mut m = member("h", MemberKind::Human, "Jade", &RoleKind::ALL);
    m.persona.social.occupation = Some("product designer".into());
    m
}

fn agent(i: usize, roles: &[RoleKind]) -> MemberSpec {
    const NAMES: [&str; 5] = ["Ada", "Ben", "Cleo", "Dev", "Eun"];
    const JOBS: [&str; 5] = [
        "UX researcher",
        "hardware engineer",
        "service designer",
        "data scientist",
        "marketing strategist",
    ];
    let mut m = member(&format!("a{i}"), MemberKind::Agent, NAMES[(i - 1) % 5], roles);
    m.persona.social.occupation = Some(JOBS[(i - 1) % 5].into());
    m.persona.social.age = Some(28 + 4 * i as i64);
    m.persona.personal.personality = Some(["curious", "pragmatic", "warm", "skeptical", "bold"][(i - 1) % 5].into());
    m
}

fn smm() -> SharedMentalModel {
    SharedMentalModel {
        task_model: "Propose services that respect privacy and work without expert setup.".into(),
        team_model: "Build on each other's ideas; evaluate honestly; answer requests promptly.".into(),
    }
}

fn config(name: &str, members: Vec<MemberSpec>, edges: Vec<StructureEdge>) -> TeamConfig {
    TeamConfig {
        team_name: name.into(),
        topic: DEFAULT_TOPIC.into(),
        members,
        edges,
        smm: smm(),
    }
}

/// Everyone connected to everyone as peers.
pub fn flat_team(agents: usize) -> TeamConfig {
    let mut members = vec![human()];
    members.extend((1..=agents).map(|i| agent(i, &RoleKind::ALL)));
    let ids: Vec<MemberId> = members.iter().map(|m| m.member_id.clone()).collect();
    let mut edges = Vec::new();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            edges.push(StructureEdge::peer(a.clone(), b.clone()));
        }
    }
    config("Flat Team", members, edges)
}

/// The human supervises every agent directly.
pub fn single_tier_team(agents: usize) -> TeamConfig {
    let mut members = vec![human()];
    members.extend((1..=agents).map(|i| agent(i, &RoleKind::ALL)));
    let edges = (1..=agents)
        .map(|i| StructureEdge::superior("h", format!("a{i}").as_str()))
        .collect();
    config("Single-tier Team", members, edges)
}

/// Human over a lead agent, who supervises the remaining agents.
pub fn multi_tier_team(agents: usize) -> TeamConfig {
    assert!(agents >= 2, "a multi-tier team needs a lead and a report");
    let mut members = vec![human()];
    members.extend((1..=agents).map(|i| agent(i, &RoleKind::ALL)));
    let mut edges = vec![StructureEdge::superior("h", "a1")];
    for i in 2..=agents {
        edges.push(StructureEdge::superior("a1", format!("a{i}").as_str()));
    }
    config("Multi-tier Team", members, edges)
}

/// Four agents with specialised roles around a hierarchical human lead and
/// a peer ring among the agents.
pub fn mixed_team() -> TeamConfig {
    use RoleKind::*;
    let members = vec![
        human(),
        agent(1, &[IdeaGeneration, Request]),
        agent(2, &[IdeaGeneration, IdeaEvaluation]),
        agent(3, &[IdeaEvaluation, Feedback]),
        agent(4, &[IdeaGeneration, Feedback, Request]),
    ];
    let mut edges: Vec<StructureEdge> = (1..=4)
        .map(|i| StructureEdge {
            a: "h".into(),
            b: MemberId::new(format!("a{i}")),
            kind: EdgeKind::Hierarchical,
        })
        .collect();
    for (a, b) in [("a1", "a2"), ("a2", "a3"), ("a3", "a4"), ("a4", "a1")] {
        edges.push(StructureEdge::peer(a, b));
    }
    config("Mixed Team", members, edges)
}

/// Three-member flat team used by [`sample_log`].
pub fn sample_team() -> TeamConfig {
    let mut c = flat_team(2);
    c.team_name = "Sample Team".into();
    c
}

/// A hand-built sealed log with known totals: 3 participants, 8 ideas,
/// 12 evaluations, 10 feedback sessions and 8 requests. Jade (`h`) authors
/// 2 ideas, gives 3 evaluations, joins 3 feedback sessions and issues 5
/// requests. The three best-rated ideas average 6.2, 5.7 and 4.9.
pub fn sample_log() -> EventLog {
    use crate::session::{EventPayload as P, FeedbackRef, RequestRef, RequestableAction as A};
    let mut b = LogBuilder::new(&sample_team(), 7);
    let push = |b: &mut LogBuilder, p: P| {
        let at = b.now().plus_millis(5_000);
        b.push(at, p).expect("fixture event is valid");
    };
    let idea = |n: usize, author: &str, parent: Option<usize>, at: u64| Idea {
        idea_id: IdeaId::new(format!("idea-{n}")),
        title: format!("Sample idea {n}"),
        content: Ofbs::new(
            format!("Object of idea {n}"),
            "Helps residents with a daily chore",
            "Reacts to context and asks before acting",
            "App, hub and cloud service",
        ),
        author: author.into(),
        parent_id: parent.map(|p| IdeaId::new(format!("idea-{p}"))),
        created_at: VirtualTime::from_secs(at),
    };
    let authors = ["h", "a1", "a2", "a1", "h", "a2", "a1", "a2"];
    for (i, author) in authors.iter().enumerate() {
        let n = i + 1;
        let at = 5 * (n as u64);
        let p = if n == 5 {
            P::IdeaUpdated { idea: idea(n, author, Some(2), at) }
        } else {
            P::IdeaGenerated { idea: idea(n, author, None, at) }
        };
        push(&mut b, p);
    }
    let evals: [(usize, &str, [u8; 3]); 12] = [
        (2, "h", [7, 6, 6]),
        (3, "h", [6, 6, 5]),
        (4, "h", [4, 4, 4]),
        (2, "a2", [6, 6, 6]),
        (3, "a1", [6, 5, 6]),
        (1, "a1", [5, 5, 5]),
        (1, "a2", [5, 5, 4]),
        (1, "a1", [5, 5, 5]),
        (6, "a1", [4, 4, 4]),
        (7, "a2", [3, 4, 3]),
        (8, "a1", [4, 3, 4]),
        (5, "a2", [4, 4, 4]),
    ];
    for (i, (n, who, [nv, c, q])) in evals.into_iter().enumerate() {
        let at = b.now().plus_millis(5_000);
        push(
            &mut b,
            P::IdeaEvaluated {
                evaluation: Evaluation {
                    idea_id: IdeaId::new(format!("idea-{n}")),
                    evaluator: who.into(),
                    novelty: nv,
                    completeness: c,
                    quality: q,
                    comment: Some(format!("Sample comment {}", i + 1)),
                    created_at: at,
                },
            },
        );
    }
    let sessions = [
        ("h", "a1"),
        ("a1", "h"),
        ("h", "a2"),
        ("a1", "a2"),
        ("a2", "a1"),
        ("a1", "a2"),
        ("a2", "a1"),
        ("a1", "a2"),
        ("a2", "a1"),
        ("a1", "a2"),
    ];
    for (i, (from, to)) in sessions.into_iter().enumerate() {
        let session_ref = FeedbackRef::nth(i + 1);
        push(
            &mut b,
            P::FeedbackOpened {
                session_ref: session_ref.clone(),
                initiator: from.into(),
                recipient: to.into(),
                message: "The concept is clear; how would onboarding work?".into(),
            },
        );
        push(
            &mut b,
            P::FeedbackMessage {
                session_ref: session_ref.clone(),
                author: to.into(),
                text: "A guided first week with sensible defaults.".into(),
                conclude: true,
            },
        );
        push(&mut b, P::FeedbackClosed { session_ref, forced: false });
    }
    let requests = [
        ("h", "a1", A::IdeaGeneration),
        ("h", "a2", A::IdeaEvaluation),
        ("h", "a1", A::Feedback),
        ("h", "a2", A::IdeaGeneration),
        ("h", "a1", A::IdeaEvaluation),
        ("a1", "a2", A::IdeaEvaluation),
        ("a1", "h", A::IdeaEvaluation),
        ("a2", "h", A::Feedback),
    ];
    for (i, (from, to, action)) in requests.into_iter().enumerate() {
        push(
            &mut b,
            P::RequestIssued {
                request_ref: RequestRef::nth(i + 1),
                from: from.into(),
                to: to.into(),
                action,
                text: format!("Could you take on {}?", action.as_str()),
            },
        );
    }
    b.finish().expect("fixture seals")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::team::{classify_structure, validate_team, StructureClass};

    #[test]
    fn presets_are_valid_and_classified() {
        for (c, class) in [
            (flat_team(3), StructureClass::Flat),
            (single_tier_team(4), StructureClass::SingleTier),
            (multi_tier_team(4), StructureClass::MultiTier),
            (mixed_team(), StructureClass::SingleTier),
        ] {
            assert!(validate_team(&c).is_ok(), "{}", validate_team(&c));
            assert_eq!(classify_structure(&c).unwrap(), class);
        }
    }
}
