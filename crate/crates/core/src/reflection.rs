//! Read-side analytics over sealed logs: the per-session reflection panels
//! and descriptive statistics across formation cycles.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::VirtualTime;
use crate::idea::{IdeaBoard, IdeaId, MeanRating};
use crate::session::{EventLog, EventPayload, FeedbackRef, RequestableAction, SessionEvent};
use crate::team::{classify_structure, MemberId, MemberKind, RoleKind, StructureClass, TeamConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReflectionError {
    #[error("log is not sealed")]
    NotSealed,
    #[error("cycle {0} has no inputs")]
    EmptyInput(usize),
    #[error("log and config do not match: {0}")]
    PairingError(String),
    #[error("log cannot be folded: {0}")]
    InvalidLog(String),
}

fn sealed(log: &EventLog) -> Result<&[SessionEvent], ReflectionError> {
    if log.is_sealed() {
        Ok(log.events())
    } else {
        Err(ReflectionError::NotSealed)
    }
}

fn config_of(log: &EventLog) -> Result<&TeamConfig, ReflectionError> {
    log.config()
        .ok_or_else(|| ReflectionError::InvalidLog("missing session_started".into()))
}

/// Initiator and recipient of every feedback session in the log.
fn feedback_parties(events: &[SessionEvent]) -> BTreeMap<&FeedbackRef, (&MemberId, &MemberId)> {
    events
        .iter()
        .filter_map(|e| match &e.payload {
            EventPayload::FeedbackOpened {
                session_ref,
                initiator,
                recipient,
                ..
            } => Some((session_ref, (initiator, recipient))),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub participants: usize,
    pub total_ideas: usize,
    pub evaluations: usize,
    pub feedback_sessions: usize,
    pub requests: usize,
}

pub fn summarize(log: &EventLog) -> Result<SessionSummary, ReflectionError> {
    let events = sealed(log)?;
    let mut s = SessionSummary {
        participants: config_of(log)?.members.len(),
        ..Default::default()
    };
    for e in events {
        match e.payload {
            EventPayload::IdeaGenerated { .. } | EventPayload::IdeaUpdated { .. } => s.total_ideas += 1,
            EventPayload::IdeaEvaluated { .. } => s.evaluations += 1,
            EventPayload::FeedbackClosed { .. } => s.feedback_sessions += 1,
            EventPayload::RequestIssued { .. } => s.requests += 1,
            _ => {}
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberCounts {
    pub idea_generation: usize,
    pub idea_evaluation: usize,
    pub feedback_sessions: usize,
    pub requests: usize,
}

/// One row per team member, including members with no activity.
pub type MemberActivity = BTreeMap<MemberId, MemberCounts>;

pub fn member_activity(log: &EventLog) -> Result<MemberActivity, ReflectionError> {
    let events = sealed(log)?;
    let mut rows: MemberActivity = config_of(log)?
        .members
        .iter()
        .map(|m| (m.member_id.clone(), MemberCounts::default()))
        .collect();
    let parties = feedback_parties(events);
    for e in events {
        match &e.payload {
            EventPayload::IdeaGenerated { idea } | EventPayload::IdeaUpdated { idea } => {
                rows.entry(idea.author.clone()).or_default().idea_generation += 1;
            }
            EventPayload::IdeaEvaluated { evaluation } => {
                rows.entry(evaluation.evaluator.clone()).or_default().idea_evaluation += 1;
            }
            EventPayload::FeedbackClosed { session_ref, .. } => {
                if let Some((i, r)) = parties.get(session_ref) {
                    rows.entry((*i).clone()).or_default().feedback_sessions += 1;
                    rows.entry((*r).clone()).or_default().feedback_sessions += 1;
                }
            }
            EventPayload::RequestIssued { from, .. } => {
                rows.entry(from.clone()).or_default().requests += 1;
            }
            _ => {}
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    Feedback,
    Request,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowCell {
    pub from: MemberId,
    pub to: MemberId,
    pub count: usize,
}

/// Directed interaction counts; only nonzero cells are listed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowMatrix {
    pub kind: FlowKind,
    pub cells: Vec<FlowCell>,
}

impl FlowMatrix {
    pub fn get(&self, from: &MemberId, to: &MemberId) -> usize {
        self.cells
            .iter()
            .find(|c| &c.from == from && &c.to == to)
            .map_or(0, |c| c.count)
    }

    pub fn total(&self) -> usize {
        self.cells.iter().map(|c| c.count).sum()
    }
}

pub fn flow(log: &EventLog, kind: FlowKind) -> Result<FlowMatrix, ReflectionError> {
    let events = sealed(log)?;
    let parties = feedback_parties(events);
    let mut cells: BTreeMap<(MemberId, MemberId), usize> = BTreeMap::new();
    for e in events {
        let pair = match (&e.payload, kind) {
            (EventPayload::FeedbackClosed { session_ref, .. }, FlowKind::Feedback) => parties
                .get(session_ref)
                .map(|(i, r)| ((*i).clone(), (*r).clone())),
            (EventPayload::RequestIssued { from, to, .. }, FlowKind::Request) => {
                Some((from.clone(), to.clone()))
            }
            _ => None,
        };
        if let Some(p) = pair {
            *cells.entry(p).or_default() += 1;
        }
    }
    Ok(FlowMatrix {
        kind,
        cells: cells
            .into_iter()
            .map(|((from, to), count)| FlowCell { from, to, count })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub seq: u64,
    pub at: VirtualTime,
    pub actor: Option<MemberId>,
    pub kind: String,
    pub text: String,
}

/// Events shown on the timeline unless phase changes are requested too.
pub fn on_timeline(payload: &EventPayload) -> bool {
    !matches!(
        payload,
        EventPayload::SessionStarted { .. }
            | EventPayload::SessionEnded
            | EventPayload::PhaseChanged { .. }
            | EventPayload::Reflected { .. }
    )
}

fn describe(payload: &EventPayload, parties: &BTreeMap<&FeedbackRef, (&MemberId, &MemberId)>) -> String {
    match payload {
        EventPayload::IdeaGenerated { idea } => {
            format!("{} generated {} \"{}\"", idea.author, idea.idea_id, idea.title)
        }
        EventPayload::IdeaUpdated { idea } => format!(
            "{} developed {} into {} \"{}\"",
            idea.author,
            idea.parent_id.as_ref().map(|p| p.as_str()).unwrap_or("?"),
            idea.idea_id,
            idea.title
        ),
        EventPayload::IdeaEvaluated { evaluation: e } => format!(
            "{} evaluated {} (novelty {}, completeness {}, quality {})",
            e.evaluator, e.idea_id, e.novelty, e.completeness, e.quality
        ),
        EventPayload::FeedbackOpened {
            session_ref,
            initiator,
            recipient,
            message,
        } => format!("{initiator} opened feedback {session_ref} with {recipient}: {message}"),
        EventPayload::FeedbackMessage {
            session_ref,
            author,
            text,
            ..
        } => format!("{author} in {session_ref}: {text}"),
        EventPayload::FeedbackClosed { session_ref, forced } => {
            let who = parties
                .get(session_ref)
                .map(|(i, r)| format!(" between {i} and {r}"))
                .unwrap_or_default();
            let how = if *forced { "was closed" } else { "concluded" };
            format!("feedback {session_ref}{who} {how}")
        }
        EventPayload::RequestIssued {
            request_ref,
            from,
            to,
            action,
            text,
        } => format!("{from} asked {to} for {} ({request_ref}): {text}", action.as_str()),
        EventPayload::RequestFulfilled { request_ref, by } => format!("{by} fulfilled {request_ref}"),
        EventPayload::ActionSkipped { member, reason, .. } => format!("{member} skipped: {reason}"),
        EventPayload::ActionRejected {
            actor, action, rule, ..
        } => format!("{actor} was refused {action} ({})", rule.code()),
        EventPayload::PhaseChanged { member, phase, .. } => {
            format!("{member} entered {}", phase.name())
        }
        EventPayload::Reflected { member, .. } => format!("{member} reflected"),
        EventPayload::SessionStarted { .. } => "session started".into(),
        EventPayload::SessionEnded => "session ended".into(),
    }
}

fn involves(payload: &EventPayload, m: &MemberId, parties: &BTreeMap<&FeedbackRef, (&MemberId, &MemberId)>) -> bool {
    if payload.actor() == Some(m) {
        return true;
    }
    let session = match payload {
        EventPayload::FeedbackOpened { session_ref, .. }
        | EventPayload::FeedbackMessage { session_ref, .. }
        | EventPayload::FeedbackClosed { session_ref, .. } => session_ref,
        _ => return false,
    };
    parties
        .get(session)
        .is_some_and(|(i, r)| *i == m || *r == m)
}

/// Chronological entries, optionally limited to one member's actions and
/// feedback sessions.
pub fn timeline(
    log: &EventLog,
    member: Option<&MemberId>,
    include_phases: bool,
) -> Result<Vec<TimelineEntry>, ReflectionError> {
    let events = sealed(log)?;
    let parties = feedback_parties(events);
    Ok(events
        .iter()
        .filter(|e| {
            on_timeline(&e.payload)
                || (include_phases && matches!(e.payload, EventPayload::PhaseChanged { .. }))
        })
        .filter(|e| member.is_none_or(|m| involves(&e.payload, m, &parties)))
        .map(|e| TimelineEntry {
            seq: e.seq,
            at: e.at,
            actor: e.payload.actor().cloned(),
            kind: e.payload.kind().to_string(),
            text: describe(&e.payload, &parties),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedIdea {
    pub idea_id: IdeaId,
    pub title: String,
    pub author: MemberId,
    pub mean_rating: Option<MeanRating>,
    pub evaluation_count: usize,
    pub created_at: VirtualTime,
}

fn board_of(events: &[SessionEvent]) -> Result<IdeaBoard, ReflectionError> {
    let mut board = IdeaBoard::new();
    for e in events {
        let r = match &e.payload {
            EventPayload::IdeaGenerated { idea } | EventPayload::IdeaUpdated { idea } => {
                board.insert(idea.clone())
            }
            EventPayload::IdeaEvaluated { evaluation } => board.add_evaluation(evaluation.clone()),
            _ => Ok(()),
        };
        r.map_err(|err| ReflectionError::InvalidLog(err.to_string()))?;
    }
    Ok(board)
}

/// Highest mean first; ties by earlier creation; unrated ideas last in
/// creation order.
pub fn rank_ideas(log: &EventLog) -> Result<Vec<RankedIdea>, ReflectionError> {
    let board = board_of(sealed(log)?)?;
    let mut out: Vec<RankedIdea> = board
        .ideas
        .iter()
        .map(|i| RankedIdea {
            idea_id: i.idea_id.clone(),
            title: i.title.clone(),
            author: i.author.clone(),
            mean_rating: board.mean_rating(&i.idea_id).ok().flatten(),
            evaluation_count: board.evaluations_of(&i.idea_id).count(),
            created_at: i.created_at,
        })
        .collect();
    out.sort_by(|a, b| match (a.mean_rating, b.mean_rating) {
        (Some(x), Some(y)) => y.cmp(&x).then(a.created_at.cmp(&b.created_at)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.created_at.cmp(&b.created_at),
    });
    Ok(out)
}

/// Everything the reflection screen shows for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    pub session_id: String,
    pub summary: SessionSummary,
    pub members: MemberActivity,
    pub feedback_flow: FlowMatrix,
    pub request_flow: FlowMatrix,
    pub ranked_ideas: Vec<RankedIdea>,
}

pub fn reflect(log: &EventLog) -> Result<Reflection, ReflectionError> {
    Ok(Reflection {
        session_id: log.session_id().unwrap_or_default().to_string(),
        summary: summarize(log)?,
        members: member_activity(log)?,
        feedback_flow: flow(log, FlowKind::Feedback)?,
        request_flow: flow(log, FlowKind::Request)?,
        ranked_ideas: rank_ideas(log)?,
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> MeanSd {
        if values.is_empty() {
            return MeanSd::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanSd {
            n: values.len(),
            mean,
            sd: var.sqrt(),
        }
    }

    pub fn of_counts(values: &[usize]) -> MeanSd {
        MeanSd::of(&values.iter().map(|v| *v as f64).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureCounts {
    pub flat: usize,
    pub single_tier: usize,
    pub multi_tier: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RoleSpread {
    pub all: MeanSd,
    pub agents: MeanSd,
    pub human: MeanSd,
}

/// Filled attributes as a percentage of all attributes, per persona section.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PersonaCompletion {
    pub social: f64,
    pub personal: f64,
    pub life_context: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleFormation {
    /// 1-based; 0 marks the all-cycles total.
    pub cycle: usize,
    pub teams: usize,
    pub team_size: MeanSd,
    pub agent_count: MeanSd,
    pub structure: StructureCounts,
    pub roles_per_member: RoleSpread,
    pub agents_per_role: BTreeMap<RoleKind, MeanSd>,
    pub persona_completion: PersonaCompletion,
    pub smm_length_chars: MeanSd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationStats {
    pub sd: String,
    pub cycles: Vec<CycleFormation>,
    pub total: CycleFormation,
}

fn pct(filled: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * filled as f64 / total as f64
    }
}

fn formation_of(cycle: usize, configs: &[&TeamConfig]) -> CycleFormation {
    let mut structure = StructureCounts::default();
    for c in configs {
        match classify_structure(c) {
            Ok(StructureClass::Flat) => structure.flat += 1,
            Ok(StructureClass::SingleTier) => structure.single_tier += 1,
            Ok(StructureClass::MultiTier) => structure.multi_tier += 1,
            Err(_) => {}
        }
    }
    let members = || configs.iter().flat_map(|c| c.members.iter());
    let roles = |kind: Option<MemberKind>| {
        let v: Vec<usize> = members()
            .filter(|m| kind.is_none_or(|k| m.kind == k))
            .map(|m| m.roles.len())
            .collect();
        MeanSd::of_counts(&v)
    };
    let agents_per_role = RoleKind::ALL
        .iter()
        .map(|r| {
            let v: Vec<usize> = configs
                .iter()
                .map(|c| c.agents().filter(|m| m.has_role(*r)).count())
                .collect();
            (*r, MeanSd::of_counts(&v))
        })
        .collect();
    let mut sections = [(0, 0); 3];
    for m in members().filter(|m| m.kind == MemberKind::Agent) {
        for (i, c) in [
            m.persona.social_completion(),
            m.persona.personal_completion(),
            m.persona.life_context_completion(),
        ]
        .into_iter()
        .enumerate()
        {
            sections[i].0 += c.filled;
            sections[i].1 += c.total;
        }
    }
    CycleFormation {
        cycle,
        teams: configs.len(),
        team_size: MeanSd::of_counts(&configs.iter().map(|c| c.members.len()).collect::<Vec<_>>()),
        agent_count: MeanSd::of_counts(&configs.iter().map(|c| c.agents().count()).collect::<Vec<_>>()),
        structure,
        roles_per_member: RoleSpread {
            all: roles(None),
            agents: roles(Some(MemberKind::Agent)),
            human: roles(Some(MemberKind::Human)),
        },
        agents_per_role,
        persona_completion: PersonaCompletion {
            social: pct(sections[0].0, sections[0].1),
            personal: pct(sections[1].0, sections[1].1),
            life_context: pct(sections[2].0, sections[2].1),
        },
        smm_length_chars: MeanSd::of_counts(
            &configs.iter().map(|c| c.smm.text_length_chars()).collect::<Vec<_>>(),
        ),
    }
}

/// Formation statistics per cycle, plus a pooled total.
pub fn formation_stats(cycles: &[Vec<TeamConfig>]) -> Result<FormationStats, ReflectionError> {
    if cycles.is_empty() {
        return Err(ReflectionError::EmptyInput(0));
    }
    let mut out = Vec::new();
    for (i, c) in cycles.iter().enumerate() {
        if c.is_empty() {
            return Err(ReflectionError::EmptyInput(i + 1));
        }
        out.push(formation_of(i + 1, &c.iter().collect::<Vec<_>>()));
    }
    let all: Vec<&TeamConfig> = cycles.iter().flatten().collect();
    Ok(FormationStats {
        sd: "population".into(),
        cycles: out,
        total: formation_of(0, &all),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorClass {
    Human,
    Agent,
}

impl ActorClass {
    pub fn of(kind: MemberKind) -> Self {
        match kind {
            MemberKind::Human => ActorClass::Human,
            MemberKind::Agent => ActorClass::Agent,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActorClass::Human => "human",
            ActorClass::Agent => "agent",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub count: usize,
    pub new_ideas: usize,
    pub updates: usize,
    /// Over (session, member) pairs holding the role.
    pub per_member: MeanSd,
    /// Characters across the four OFBS fields.
    pub text_length_chars: MeanSd,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationStats {
    pub count: usize,
    pub per_member: MeanSd,
    pub comment_length_chars: MeanSd,
    pub novelty: MeanSd,
    pub completeness: MeanSd,
    pub quality: MeanSd,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeedbackStats {
    /// Closed sessions, attributed to the initiator.
    pub sessions: usize,
    pub per_member: MeanSd,
    pub turns: MeanSd,
    /// Every message authored by the class, in any session.
    pub message_length_chars: MeanSd,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RequestStats {
    pub count: usize,
    pub per_member: MeanSd,
    pub by_action: BTreeMap<RequestableAction, usize>,
    pub message_length_chars: MeanSd,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassIdeation {
    pub idea_generation: GenerationStats,
    pub idea_evaluation: EvaluationStats,
    pub feedback: FeedbackStats,
    pub request: RequestStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleIdeation {
    pub cycle: usize,
    pub sessions: usize,
    pub by_class: BTreeMap<ActorClass, ClassIdeation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdeationStats {
    pub sd: String,
    pub cycles: Vec<CycleIdeation>,
}

#[derive(Default)]
struct Acc {
    gen: usize,
    new_ideas: usize,
    updates: usize,
    gen_len: Vec<usize>,
    gen_per: Vec<usize>,
    eval_len: Vec<usize>,
    eval_per: Vec<usize>,
    scores: [Vec<usize>; 3],
    fb_sessions: usize,
    fb_per: Vec<usize>,
    fb_turns: Vec<usize>,
    fb_len: Vec<usize>,
    req: usize,
    req_per: Vec<usize>,
    req_len: Vec<usize>,
    by_action: BTreeMap<RequestableAction, usize>,
}

impl Acc {
    fn finish(self) -> ClassIdeation {
        ClassIdeation {
            idea_generation: GenerationStats {
                count: self.gen,
                new_ideas: self.new_ideas,
                updates: self.updates,
                per_member: MeanSd::of_counts(&self.gen_per),
                text_length_chars: MeanSd::of_counts(&self.gen_len),
            },
            idea_evaluation: EvaluationStats {
                count: self.eval_len.len(),
                per_member: MeanSd::of_counts(&self.eval_per),
                comment_length_chars: MeanSd::of_counts(&self.eval_len),
                novelty: MeanSd::of_counts(&self.scores[0]),
                completeness: MeanSd::of_counts(&self.scores[1]),
                quality: MeanSd::of_counts(&self.scores[2]),
            },
            feedback: FeedbackStats {
                sessions: self.fb_sessions,
                per_member: MeanSd::of_counts(&self.fb_per),
                turns: MeanSd::of_counts(&self.fb_turns),
                message_length_chars: MeanSd::of_counts(&self.fb_len),
            },
            request: RequestStats {
                count: self.req,
                per_member: MeanSd::of_counts(&self.req_per),
                by_action: self.by_action,
                message_length_chars: MeanSd::of_counts(&self.req_len),
            },
        }
    }
}

fn chars(s: &str) -> usize {
    s.chars().count()
}

fn accumulate(acc: &mut BTreeMap<ActorClass, Acc>, config: &TeamConfig, events: &[SessionEvent]) {
    let class_of = |m: &MemberId| config.member(m).map(|s| ActorClass::of(s.kind));
    let mut per: BTreeMap<&MemberId, [usize; 4]> = BTreeMap::new();
    let mut turns: BTreeMap<&FeedbackRef, usize> = BTreeMap::new();
    let parties = feedback_parties(events);
    for e in events {
        let Some(actor) = e.payload.actor() else {
            if let EventPayload::FeedbackClosed { session_ref, .. } = &e.payload {
                if let Some((init, _)) = parties.get(session_ref) {
                    if let Some(c) = class_of(init) {
                        let a = acc.entry(c).or_default();
                        a.fb_sessions += 1;
                        a.fb_turns.push(turns.get(session_ref).copied().unwrap_or(0));
                        per.entry(init).or_default()[2] += 1;
                    }
                }
            }
            continue;
        };
        let Some(class) = class_of(actor) else { continue };
        let a = acc.entry(class).or_default();
        match &e.payload {
            EventPayload::IdeaGenerated { idea } | EventPayload::IdeaUpdated { idea } => {
                a.gen += 1;
                if idea.parent_id.is_some() {
                    a.updates += 1;
                } else {
                    a.new_ideas += 1;
                }
                a.gen_len.push(idea.content.text_length_chars());
                per.entry(actor).or_default()[0] += 1;
            }
            EventPayload::IdeaEvaluated { evaluation: ev } => {
                a.eval_len.push(ev.comment.as_deref().map_or(0, chars));
                for (i, s) in ev.scores().into_iter().enumerate() {
                    a.scores[i].push(s as usize);
                }
                per.entry(actor).or_default()[1] += 1;
            }
            EventPayload::FeedbackOpened {
                session_ref,
                message,
                ..
            } => {
                a.fb_len.push(chars(message));
                *turns.entry(session_ref).or_default() += 1;
            }
            EventPayload::FeedbackMessage {
                session_ref, text, ..
            } => {
                a.fb_len.push(chars(text));
                *turns.entry(session_ref).or_default() += 1;
            }
            EventPayload::RequestIssued { action, text, .. } => {
                a.req += 1;
                a.req_len.push(chars(text));
                *a.by_action.entry(*action).or_default() += 1;
                per.entry(actor).or_default()[3] += 1;
            }
            _ => {}
        }
    }
    for m in &config.members {
        let counts = per.get(&m.member_id).copied().unwrap_or_default();
        let a = acc.entry(ActorClass::of(m.kind)).or_default();
        for (i, role) in RoleKind::ALL.iter().enumerate() {
            if m.has_role(*role) {
                let v = counts[i];
                match role {
                    RoleKind::IdeaGeneration => a.gen_per.push(v),
                    RoleKind::IdeaEvaluation => a.eval_per.push(v),
                    RoleKind::Feedback => a.fb_per.push(v),
                    RoleKind::Request => a.req_per.push(v),
                }
            }
        }
    }
}

/// Ideation statistics per cycle and actor class. Each inner list pairs a
/// sealed log with the config it ran.
pub fn ideation_stats(cycles: &[Vec<(EventLog, TeamConfig)>]) -> Result<IdeationStats, ReflectionError> {
    let mut out = Vec::new();
    for (i, sessions) in cycles.iter().enumerate() {
        if sessions.is_empty() {
            return Err(ReflectionError::EmptyInput(i + 1));
        }
        let mut acc: BTreeMap<ActorClass, Acc> = BTreeMap::new();
        acc.entry(ActorClass::Human).or_default();
        acc.entry(ActorClass::Agent).or_default();
        for (log, config) in sessions {
            let events = sealed(log)?;
            let embedded = config_of(log)?;
            if embedded.digest() != config.digest() {
                return Err(ReflectionError::PairingError(format!(
                    "session {} ran a different team than `{}`",
                    log.session_id().unwrap_or("?"),
                    config.team_name
                )));
            }
            accumulate(&mut acc, config, events);
        }
        out.push(CycleIdeation {
            cycle: i + 1,
            sessions: sessions.len(),
            by_class: acc.into_iter().map(|(k, v)| (k, v.finish())).collect(),
        });
    }
    Ok(IdeationStats {
        sd: "population".into(),
        cycles: out,
    })
}

/// Header and rows for the formation table, one row per cycle.
pub fn formation_rows(stats: &FormationStats) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = [
        "cycle",
        "teams",
        "team_size_mean",
        "team_size_sd",
        "agents_mean",
        "agents_sd",
        "flat",
        "single_tier",
        "multi_tier",
        "roles_all_mean",
        "roles_all_sd",
        "roles_agents_mean",
        "roles_agents_sd",
        "roles_human_mean",
        "roles_human_sd",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for r in RoleKind::ALL {
        header.push(format!("agents_{}_mean", r.as_str()));
        header.push(format!("agents_{}_sd", r.as_str()));
    }
    for s in [
        "persona_social_pct",
        "persona_personal_pct",
        "persona_life_context_pct",
        "smm_length_mean",
        "smm_length_sd",
    ] {
        header.push(s.into());
    }
    let f = |x: f64| format!("{x:.2}");
    let rows = stats
        .cycles
        .iter()
        .map(|c| {
            let mut row = vec![
                c.cycle.to_string(),
                c.teams.to_string(),
                f(c.team_size.mean),
                f(c.team_size.sd),
                f(c.agent_count.mean),
                f(c.agent_count.sd),
                c.structure.flat.to_string(),
                c.structure.single_tier.to_string(),
                c.structure.multi_tier.to_string(),
                f(c.roles_per_member.all.mean),
                f(c.roles_per_member.all.sd),
                f(c.roles_per_member.agents.mean),
                f(c.roles_per_member.agents.sd),
                f(c.roles_per_member.human.mean),
                f(c.roles_per_member.human.sd),
            ];
            for r in RoleKind::ALL {
                let m = c.agents_per_role.get(&r).copied().unwrap_or_default();
                row.push(f(m.mean));
                row.push(f(m.sd));
            }
            row.push(f(c.persona_completion.social));
            row.push(f(c.persona_completion.personal));
            row.push(f(c.persona_completion.life_context));
            row.push(f(c.smm_length_chars.mean));
            row.push(f(c.smm_length_chars.sd));
            row
        })
        .collect();
    (header, rows)
}

/// Header and rows for the ideation table, one row per cycle and class.
pub fn ideation_rows(stats: &IdeationStats) -> (Vec<String>, Vec<Vec<String>>) {
    let header: Vec<String> = [
        "cycle",
        "class",
        "ideas",
        "ideas_per_member_mean",
        "ideas_per_member_sd",
        "idea_length_mean",
        "idea_length_sd",
        "evaluations",
        "evaluations_per_member_mean",
        "evaluations_per_member_sd",
        "comment_length_mean",
        "novelty_mean",
        "completeness_mean",
        "quality_mean",
        "feedback_sessions",
        "feedback_per_member_mean",
        "feedback_per_member_sd",
        "feedback_turns_mean",
        "feedback_turns_sd",
        "feedback_message_length_mean",
        "requests",
        "requests_per_member_mean",
        "requests_per_member_sd",
        "requests_idea_generation",
        "requests_idea_evaluation",
        "requests_feedback",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let f = |x: f64| format!("{x:.2}");
    let mut rows = Vec::new();
    for c in &stats.cycles {
        for (class, s) in &c.by_class {
            let by = |a| s.request.by_action.get(&a).copied().unwrap_or(0).to_string();
            rows.push(vec![
                c.cycle.to_string(),
                class.as_str().to_string(),
                s.idea_generation.count.to_string(),
                f(s.idea_generation.per_member.mean),
                f(s.idea_generation.per_member.sd),
                f(s.idea_generation.text_length_chars.mean),
                f(s.idea_generation.text_length_chars.sd),
                s.idea_evaluation.count.to_string(),
                f(s.idea_evaluation.per_member.mean),
                f(s.idea_evaluation.per_member.sd),
                f(s.idea_evaluation.comment_length_chars.mean),
                f(s.idea_evaluation.novelty.mean),
                f(s.idea_evaluation.completeness.mean),
                f(s.idea_evaluation.quality.mean),
                s.feedback.sessions.to_string(),
                f(s.feedback.per_member.mean),
                f(s.feedback.per_member.sd),
                f(s.feedback.turns.mean),
                f(s.feedback.turns.sd),
                f(s.feedback.message_length_chars.mean),
                s.request.count.to_string(),
                f(s.request.per_member.mean),
                f(s.request.per_member.sd),
                by(RequestableAction::IdeaGeneration),
                by(RequestableAction::IdeaEvaluation),
                by(RequestableAction::Feedback),
            ]);
        }
    }
    (header, rows)
}

/// Members that appear in any nonzero flow cell.
pub fn flow_members(m: &FlowMatrix) -> BTreeSet<&MemberId> {
    m.cells.iter().flat_map(|c| [&c.from, &c.to]).collect()
}
