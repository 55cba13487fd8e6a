use super::{wait_duration_ms, AgentPhase, AgentState, Intent};
use crate::clock::VirtualTime;
use crate::idea::{Evaluation, Idea};
use crate::llm::LlmProvider;
use crate::pipelines::{
    evaluable_ideas, feedback_partners, interaction_of, request_pairs, run_evaluation,
    run_feedback_initiation, run_feedback_response, run_generation, run_plan, run_reflection,
    run_request, Ctx, PipelineError,
};
use crate::session::{
    authorize, authorize_request, EventPayload, FeedbackRef, RequestRecord, RequestRef,
    RequestStatus, RequestableAction, SessionState,
};
use crate::team::{MemberId, RoleKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuntimeSettings {
    /// Feedback sessions are force-closed once they reach this many turns.
    pub max_feedback_turns: usize,
}

impl Default for RuntimeSettings {
    fn default() -> Self {
        RuntimeSettings {
            max_feedback_turns: 12,
        }
    }
}

pub fn is_due(agent: &AgentState, now: VirtualTime) -> bool {
    match agent.phase {
        AgentPhase::Wait { until } => now >= until,
        _ => true,
    }
}

/// Roles the agent could usefully perform now, in role order.
pub fn plan_options(state: &SessionState, member: &MemberId) -> Vec<RoleKind> {
    let Some(spec) = state.config.member(member) else {
        return Vec::new();
    };
    spec.roles
        .iter()
        .copied()
        .filter(|role| {
            if !state.gate_open && *role != RoleKind::IdeaGeneration {
                return false;
            }
            match role {
                RoleKind::IdeaGeneration => true,
                RoleKind::IdeaEvaluation => !evaluable_ideas(state, member).is_empty(),
                RoleKind::Feedback => !feedback_partners(state, member).is_empty(),
                RoleKind::Request => !request_pairs(state, member).is_empty(),
            }
        })
        .collect()
}

fn reply_due(state: &SessionState, member: &MemberId) -> Option<FeedbackRef> {
    let t = state.open_feedback_of(member)?;
    (t.whose_turn() == Some(member)).then(|| t.session_ref.clone())
}

/// Work that bypasses planning: a feedback turn owed, then the oldest request
/// that can be served now.
fn obligation(state: &SessionState, agent: &AgentState) -> Option<Intent> {
    if let Some(session_ref) = reply_due(state, &agent.member_id) {
        return Some(Intent::RespondFeedback { session_ref });
    }
    agent
        .stm
        .pending_requests
        .iter()
        .find(|r| {
            r.action != RequestableAction::Feedback
                || !(state.in_feedback(&agent.member_id) || state.in_feedback(&r.from))
        })
        .map(|r| Intent::FulfillRequest {
            request_ref: r.request_ref.clone(),
        })
}

fn to_act(member: &MemberId, intent: Intent) -> EventPayload {
    EventPayload::PhaseChanged {
        member: member.clone(),
        phase: AgentPhase::Act,
        intent: Some(intent),
    }
}

fn to_wait(state: &SessionState, agent: &AgentState) -> EventPayload {
    let ms = wait_duration_ms(state.seed, &agent.member_id, agent.wait_draws);
    EventPayload::PhaseChanged {
        member: agent.member_id.clone(),
        phase: AgentPhase::Wait {
            until: state.now().plus_millis(state.clock.scaled(ms)),
        },
        intent: None,
    }
}

fn skipped(member: &MemberId, reason: impl ToString, request_ref: Option<RequestRef>) -> EventPayload {
    EventPayload::ActionSkipped {
        member: member.clone(),
        reason: reason.to_string(),
        request_ref,
    }
}

/// Advances one agent by one phase and returns the events to commit, in order.
pub fn tick(
    member: &MemberId,
    state: &SessionState,
    provider: &dyn LlmProvider,
    settings: &RuntimeSettings,
) -> Vec<EventPayload> {
    let Some(agent) = state.agents.get(member) else {
        return Vec::new();
    };
    let ctx = Ctx::new(state, agent, provider);
    match agent.phase {
        AgentPhase::Wait { .. } => match obligation(state, agent) {
            Some(intent) => vec![to_act(member, intent)],
            None => vec![EventPayload::PhaseChanged {
                member: member.clone(),
                phase: AgentPhase::Plan,
                intent: None,
            }],
        },
        AgentPhase::Plan => {
            if let Some(intent) = obligation(state, agent) {
                return vec![to_act(member, intent)];
            }
            let options = plan_options(state, member);
            if options.is_empty() {
                return vec![to_wait(state, agent)];
            }
            match run_plan(ctx, &options) {
                Ok(d) => match d.choice {
                    Some(role) => vec![to_act(
                        member,
                        Intent::Role {
                            role,
                            rationale: d.rationale,
                        },
                    )],
                    None => vec![to_wait(state, agent)],
                },
                Err(_) => vec![to_wait(state, agent)],
            }
        }
        AgentPhase::Act => {
            let mut events = act(ctx, settings);
            let closes_feedback = events
                .iter()
                .any(|e| matches!(e, EventPayload::FeedbackClosed { .. }));
            if closes_feedback || !agent.reflect_triggers.is_empty() {
                events.push(EventPayload::PhaseChanged {
                    member: member.clone(),
                    phase: AgentPhase::Reflect,
                    intent: None,
                });
            } else {
                events.push(to_wait(state, agent));
            }
            events
        }
        AgentPhase::Reflect => match agent.reflect_triggers.front() {
            Some(trigger) => {
                let delta = run_reflection(ctx, trigger).unwrap_or_else(|_| {
                    crate::agent::ReflectionDelta {
                        interacted_with: interaction_of(ctx, trigger),
                        ..Default::default()
                    }
                });
                vec![EventPayload::Reflected {
                    member: member.clone(),
                    trigger: trigger.clone(),
                    delta,
                }]
            }
            None => vec![to_wait(state, agent)],
        },
    }
}

/// Executes the committed intent. Always yields exactly one action event.
fn act(ctx: Ctx<'_>, settings: &RuntimeSettings) -> Vec<EventPayload> {
    let me = &ctx.agent.member_id;
    let state = ctx.state;
    match ctx.agent.intent.clone() {
        None => vec![skipped(me, "no intent", None)],
        Some(Intent::Role { role, .. }) => {
            perform(ctx, role, None).unwrap_or_else(|reason| vec![skipped(me, reason, None)])
        }
        Some(Intent::FulfillRequest { request_ref }) => {
            let rec = match state.request(&request_ref) {
                Some(r) if r.status == RequestStatus::Pending => r,
                _ => return vec![skipped(me, "request is no longer pending", Some(request_ref))],
            };
            match perform(ctx, rec.action.role(), Some(rec)) {
                Ok(mut events) => {
                    events.push(EventPayload::RequestFulfilled {
                        request_ref,
                        by: me.clone(),
                    });
                    events
                }
                Err(ActFailure::Deferred(reason)) => vec![skipped(me, reason, None)],
                Err(other) => vec![skipped(me, other, Some(request_ref))],
            }
        }
        Some(Intent::RespondFeedback { session_ref }) => {
            let Some(t) = state.transcript(&session_ref) else {
                return vec![skipped(me, "unknown feedback session", None)];
            };
            match run_feedback_response(ctx, t) {
                Ok(turn) => {
                    let at_cap = t.turns() + 1 >= settings.max_feedback_turns;
                    let mut events = vec![EventPayload::FeedbackMessage {
                        session_ref: session_ref.clone(),
                        author: me.clone(),
                        text: turn.message,
                        conclude: turn.conclude,
                    }];
                    if turn.conclude || at_cap {
                        events.push(EventPayload::FeedbackClosed {
                            session_ref,
                            forced: !turn.conclude,
                        });
                    }
                    events
                }
                Err(e) => vec![skipped(me, e, None)],
            }
        }
    }
}

#[derive(Debug)]
enum ActFailure {
    Deferred(String),
    Failed(String),
}

impl std::fmt::Display for ActFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ActFailure::Deferred(s) | ActFailure::Failed(s) => f.write_str(s),
        }
    }
}

impl From<PipelineError> for ActFailure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Deferred(s) => ActFailure::Deferred(format!("deferred: {s}")),
            other => ActFailure::Failed(other.to_string()),
        }
    }
}

fn perform(
    ctx: Ctx<'_>,
    role: RoleKind,
    request: Option<&RequestRecord>,
) -> Result<Vec<EventPayload>, ActFailure> {
    let me = &ctx.agent.member_id;
    let state = ctx.state;
    let now = state.now();
    let check = |r: Result<(), crate::session::RejectionRule>| {
        r.map_err(|rule| ActFailure::Failed(format!("not permitted: {}", rule.code())))
    };
    match role {
        RoleKind::IdeaGeneration => {
            check(authorize(state, me, role, None))?;
            let g = run_generation(ctx, request)?;
            let idea = Idea {
                idea_id: state.board.next_id(),
                title: g.title,
                content: g.content,
                author: me.clone(),
                parent_id: g.parent_id,
                created_at: now,
            };
            Ok(vec![if idea.parent_id.is_some() {
                EventPayload::IdeaUpdated { idea }
            } else {
                EventPayload::IdeaGenerated { idea }
            }])
        }
        RoleKind::IdeaEvaluation => {
            check(authorize(state, me, role, None))?;
            let r = run_evaluation(ctx, request)?;
            let [novelty, completeness, quality] = r.scores;
            Ok(vec![EventPayload::IdeaEvaluated {
                evaluation: Evaluation {
                    idea_id: r.idea_id,
                    evaluator: me.clone(),
                    novelty,
                    completeness,
                    quality,
                    comment: Some(r.comment),
                    created_at: now,
                },
            }])
        }
        RoleKind::Feedback => {
            if let Some(r) = request {
                if state.in_feedback(me) || state.in_feedback(&r.from) {
                    return Err(ActFailure::Deferred(format!("deferred: {} is busy", r.from)));
                }
            }
            let o = run_feedback_initiation(ctx, request)?;
            check(authorize(state, me, role, Some(&o.recipient)))?;
            Ok(vec![EventPayload::FeedbackOpened {
                session_ref: state.next_feedback_ref(),
                initiator: me.clone(),
                recipient: o.recipient,
                message: o.message,
            }])
        }
        RoleKind::Request => {
            let d = run_request(ctx)?;
            check(authorize_request(state, me, &d.to, d.action))?;
            Ok(vec![EventPayload::RequestIssued {
                request_ref: state.next_request_ref(),
                from: me.clone(),
                to: d.to,
                action: d.action,
                text: d.text,
            }])
        }
    }
}
