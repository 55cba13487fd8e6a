//! Fuzzed sessions and brute-force oracles for the acceptance suite.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crafteam_cli::policy::{ReactiveRule, ScriptStep};
use crafteam_cli::{preset, simulate, HumanPolicy, SimOptions};
use crafteam_core::llm::{CompletionRequest, LlmProvider, MockProvider};
use crafteam_core::persistence::{JsonlWriter, LogHeader};
use crafteam_core::presets;
use crafteam_core::session::{derive_session_id, EventLog, EventPayload, SessionState};
use crafteam_core::team::{EdgeKind, MemberId, MemberKind, RoleKind, StructureEdge, TeamConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_roles(r: &mut ChaCha8Rng) -> Vec<RoleKind> {
    loop {
        let roles: Vec<RoleKind> = RoleKind::ALL.into_iter().filter(|_| r.random_bool(0.6)).collect();
        if !roles.is_empty() {
            return roles;
        }
    }
}

/// Members h, a1.. with random roles and hierarchical edges that respect a
/// random rank order, so the hierarchy is acyclic. `connected` adds a
/// random spanning tree first.
pub fn random_structure(r: &mut ChaCha8Rng, size: usize, connected: bool, density: f64) -> TeamConfig {
    let mut members = vec![presets::member("h", MemberKind::Human, "Jade", &random_roles(r))];
    for i in 1..size {
        let mut m = presets::member(&format!("a{i}"), MemberKind::Agent, &format!("Agent {i}"), &random_roles(r));
        if r.random_bool(0.5) {
            m.persona.social.occupation = Some("designer".into());
        }
        if r.random_bool(0.3) {
            m.persona.personal.skills = Some("prototyping".into());
        }
        if r.random_bool(0.2) {
            m.persona.life_context.likes = Some("hiking".into());
        }
        members.push(m);
    }
    if !members.iter().any(|m| m.roles.contains(&RoleKind::IdeaGeneration)) {
        let k = r.random_range(0..size);
        members[k].roles.insert(RoleKind::IdeaGeneration);
    }
    let ids: Vec<MemberId> = members.iter().map(|m| m.member_id.clone()).collect();
    let mut rank: Vec<usize> = (0..size).collect();
    rank.shuffle(r);
    let mut pairs = BTreeSet::new();
    if connected {
        for i in 1..size {
            let j = r.random_range(0..i);
            pairs.insert((j, i));
        }
    }
    for i in 0..size {
        for j in i + 1..size {
            if r.random_bool(density) {
                pairs.insert((i, j));
            }
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            let (hi, lo) = if rank[i] < rank[j] { (i, j) } else { (j, i) };
            StructureEdge {
                a: ids[hi].clone(),
                b: ids[lo].clone(),
                kind: if r.random_bool(0.4) {
                    EdgeKind::Hierarchical
                } else {
                    EdgeKind::Peer
                },
            }
        })
        .collect();
    TeamConfig {
        team_name: format!("Fuzz team of {size}"),
        topic: presets::DEFAULT_TOPIC.into(),
        members,
        edges,
        smm: Default::default(),
    }
}

/// Longest chain of superior-subordinate links, by enumerating every
/// sequence of distinct members.
pub fn brute_force_chain(config: &TeamConfig) -> usize {
    let ids: Vec<&MemberId> = config.members.iter().map(|m| &m.member_id).collect();
    let over = |a: &MemberId, b: &MemberId| {
        config
            .edges
            .iter()
            .any(|e| e.kind == EdgeKind::Hierarchical && &e.a == a && &e.b == b)
    };
    fn extend(path: &mut Vec<usize>, ids: &[&MemberId], over: &dyn Fn(&MemberId, &MemberId) -> bool, best: &mut usize) {
        *best = (*best).max(path.len() - 1);
        for k in 0..ids.len() {
            if path.contains(&k) {
                continue;
            }
            if over(ids[*path.last().unwrap()], ids[k]) {
                path.push(k);
                extend(path, ids, over, best);
                path.pop();
            }
        }
    }
    let mut best = 0;
    for start in 0..ids.len() {
        extend(&mut vec![start], &ids, &over, &mut best);
    }
    best
}

fn random_action(r: &mut ChaCha8Rng, config: &TeamConfig) -> Value {
    let anyone = |r: &mut ChaCha8Rng| {
        let k = r.random_range(0..config.members.len());
        Value::from(config.members[k].member_id.as_str())
    };
    let action = ["idea_generation", "idea_evaluation", "feedback"][r.random_range(0..3)];
    match r.random_range(0..7) {
        0 => json!({"type": "generate_idea", "title": "Fuzz idea ${n}", "object": "lamp",
            "function": "reminds", "behavior": "glows", "structure": "led strip"}),
        1 => json!({"type": "update_idea", "parent_id": "$latest_idea", "title": "Revised ${n}",
            "object": "lamp", "function": "reminds gently", "behavior": "dims", "structure": "led strip"}),
        2 => json!({"type": "evaluate", "idea_id": "$unrated_idea", "novelty": "$score",
            "completeness": "$score", "quality": "$score", "comment": "fuzz"}),
        3 => json!({"type": "evaluate", "idea_id": format!("idea-{}", r.random_range(1..30)),
            "novelty": r.random_range(0..9), "completeness": 4, "quality": 4}),
        4 => json!({"type": "open_feedback", "recipient": anyone(r), "message": "Thoughts on my idea?"}),
        5 => json!({"type": "reply_feedback", "session_ref": format!("fb-{}", r.random_range(1..12)),
            "message": "noted", "conclude": r.random_bool(0.5)}),
        _ => json!({"type": "request", "recipient": anyone(r), "action": action, "message": "please"}),
    }
}

/// A random script plus the rules of a random preset.
pub fn random_policy(r: &mut ChaCha8Rng, config: &TeamConfig, duration: f64) -> HumanPolicy {
    let mut times: Vec<f64> = (0..r.random_range(4..16)).map(|_| r.random_range(0.0..duration).floor()).collect();
    times.sort_by(f64::total_cmp);
    let script = times
        .into_iter()
        .map(|at| ScriptStep {
            at,
            action: random_action(r, config),
        })
        .collect();
    let name = ["evaluator-heavy", "requester-heavy", "passive"][r.random_range(0..3)];
    let rules: Vec<ReactiveRule> = preset(name).unwrap().rules;
    HumanPolicy { script, rules }
}

pub struct Fuzzed {
    pub index: usize,
    pub config: TeamConfig,
    pub log: EventLog,
    pub state: SessionState,
    pub traffic: Vec<CompletionRequest>,
    pub path: PathBuf,
}

pub fn fuzz_session(index: usize, dir: &Path) -> Fuzzed {
    let mut r = rng(1000 + index as u64);
    let size = r.random_range(3..=6);
    let config = random_structure(&mut r, size, true, 0.3);
    assert!(crafteam_core::team::validate_team(&config).is_ok());
    let duration = r.random_range(60..=150) as f64;
    let time_scale = [0.0, 0.05, 0.2, 1.0][r.random_range(0..4)];
    let policy = random_policy(&mut r, &config, duration);
    policy.validate(&config).unwrap();
    let seed = r.random::<u32>() as u64;
    let mock = Arc::new(MockProvider::new(seed));
    let id = derive_session_id(&config, seed, time_scale);
    let path = dir.join(format!("{index:02}-{id}.events.jsonl"));
    let writer = JsonlWriter::create(&path, &LogHeader::new(&id, &config)).unwrap();
    let opts = SimOptions {
        seed,
        duration_secs: duration,
        time_scale,
    };
    let provider: Arc<dyn LlmProvider> = mock.clone();
    let (session, _) = simulate(config.clone(), &policy, provider, opts, Some(Box::new(writer))).unwrap();
    Fuzzed {
        index,
        config,
        log: session.log().clone(),
        state: session.state().clone(),
        traffic: mock.record_traffic().unwrap(),
        path,
    }
}

/// Exact decimal rendering of `sum / count` to one place, rounding half up,
/// by long division.
pub fn one_decimal(sum: u64, count: u64) -> String {
    let whole = sum / count;
    let mut rem = sum % count;
    let mut digits = Vec::new();
    for _ in 0..2 {
        rem *= 10;
        digits.push(rem / count);
        rem %= count;
    }
    let (mut w, mut t) = (whole, digits[0]);
    if digits[1] >= 5 {
        t += 1;
        if t == 10 {
            t = 0;
            w += 1;
        }
    }
    format!("{w}.{t}")
}

pub fn adjacent(config: &TeamConfig, a: &MemberId, b: &MemberId) -> bool {
    a != b
        && config
            .edges
            .iter()
            .any(|e| (&e.a == a && &e.b == b) || (&e.a == b && &e.b == a))
}

pub fn holds(config: &TeamConfig, m: &MemberId, role: RoleKind) -> bool {
    config
        .members
        .iter()
        .any(|s| &s.member_id == m && s.roles.contains(&role))
}

pub fn is_generation(p: &EventPayload) -> bool {
    matches!(p, EventPayload::IdeaGenerated { .. } | EventPayload::IdeaUpdated { .. })
}

/// Role actions other than idea generation.
pub fn is_non_generation_action(p: &EventPayload) -> bool {
    matches!(
        p,
        EventPayload::IdeaEvaluated { .. }
            | EventPayload::FeedbackOpened { .. }
            | EventPayload::FeedbackMessage { .. }
            | EventPayload::RequestIssued { .. }
    )
}

/// Per-member (ideas, evaluations, closed feedback sessions joined,
/// requests issued), recounted from scratch.
pub fn recount_members(log: &EventLog, config: &TeamConfig) -> BTreeMap<MemberId, [usize; 4]> {
    let mut out = BTreeMap::new();
    for m in &config.members {
        let me = &m.member_id;
        let mut row = [0; 4];
        for e in log.events() {
            match &e.payload {
                EventPayload::IdeaGenerated { idea } | EventPayload::IdeaUpdated { idea } if &idea.author == me => {
                    row[0] += 1
                }
                EventPayload::IdeaEvaluated { evaluation } if &evaluation.evaluator == me => row[1] += 1,
                EventPayload::FeedbackClosed { session_ref, .. } => {
                    let joined = log.events().iter().any(|o| {
                        matches!(&o.payload, EventPayload::FeedbackOpened { session_ref: s, initiator, recipient, .. }
                            if s == session_ref && (initiator == me || recipient == me))
                    });
                    if joined {
                        row[2] += 1;
                    }
                }
                EventPayload::RequestIssued { from, .. } if from == me => row[3] += 1,
                _ => {}
            }
        }
        out.insert(me.clone(), row);
    }
    out
}

pub fn population_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sq = values.iter().map(|v| v * v).sum::<f64>() / n;
    (mean, (sq - mean * mean).max(0.0).sqrt())
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}
