//! The seven LLM pipelines. Each builds its prompts from session and agent
//! state, calls the provider with a schema, and returns a checked result.

pub mod prompts;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::agent::{AgentState, ReflectTrigger, ReflectionDelta, StrategyKey};
use crate::idea::{Idea, IdeaId, Ofbs, SCORE_MAX, SCORE_MIN};
use crate::llm::schema::*;
use crate::llm::{
    allowed_values_line, complete_structured, labels, CompletionRequest, LlmProvider,
    ProviderError,
};
use crate::session::{RequestRecord, RequestableAction, SessionState, Transcript};
use crate::team::{MemberId, RoleKind};

use prompts::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("no idea is available to evaluate")]
    NothingToEvaluate,
    #[error("no teammate is available: {0}")]
    Deferred(String),
    #[error("it is not this agent's turn to speak")]
    NotYourTurn,
}

/// Everything a pipeline reads.
#[derive(Clone, Copy)]
pub struct Ctx<'a> {
    pub state: &'a SessionState,
    pub agent: &'a AgentState,
    pub provider: &'a dyn LlmProvider,
}

impl<'a> Ctx<'a> {
    pub fn new(state: &'a SessionState, agent: &'a AgentState, provider: &'a dyn LlmProvider) -> Self {
        Ctx {
            state,
            agent,
            provider,
        }
    }

    fn me(&self) -> &MemberId {
        &self.agent.member_id
    }

    fn call<T, F>(&self, schema: SchemaId, user: String, check: F) -> Result<T, ProviderError>
    where
        T: serde::de::DeserializeOwned,
        F: Fn(&T) -> Result<(), String>,
    {
        let req = CompletionRequest::new(schema, self.agent.profile_prompt.clone(), user);
        complete_structured(self.provider, req, check)
    }
}

fn one_of<T: PartialEq + std::fmt::Debug>(value: &T, allowed: &[T], field: &str) -> Result<(), String> {
    if allowed.contains(value) {
        Ok(())
    } else {
        Err(format!("`{field}` must be one of {allowed:?}"))
    }
}

fn non_empty(fields: &[(&str, &str)]) -> Result<(), String> {
    for (name, v) in fields {
        if v.trim().is_empty() {
            return Err(format!("`{name}` must not be empty"));
        }
    }
    Ok(())
}

/// Ideas `member` may evaluate: anything on the board it did not author.
pub fn evaluable_ideas<'s>(state: &'s SessionState, member: &MemberId) -> Vec<&'s Idea> {
    visible_ideas(&state.board)
        .iter()
        .filter(|i| &i.author != member)
        .collect()
}

/// Neighbours `member` could open a feedback session with right now.
pub fn feedback_partners(state: &SessionState, member: &MemberId) -> Vec<MemberId> {
    if state.in_feedback(member) {
        return Vec::new();
    }
    state
        .config
        .neighbors(member)
        .into_iter()
        .filter(|n| !state.in_feedback(n))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RequestPair {
    pub recipient: MemberId,
    pub action: RequestableAction,
}

/// (neighbour, action) pairs where the neighbour holds the requested role.
pub fn request_pairs(state: &SessionState, member: &MemberId) -> Vec<RequestPair> {
    let mut out = Vec::new();
    for n in state.config.neighbors(member) {
        let Some(spec) = state.config.member(&n) else {
            continue;
        };
        for action in RequestableAction::ALL {
            if spec.has_role(action.role()) {
                out.push(RequestPair {
                    recipient: n.clone(),
                    action,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanDecision {
    /// `None` means wait.
    pub choice: Option<RoleKind>,
    pub rationale: String,
}

pub fn run_plan(ctx: Ctx<'_>, options: &[RoleKind]) -> Result<PlanDecision, ProviderError> {
    let mut allowed: Vec<String> = options.iter().map(|r| r.as_str().to_string()).collect();
    allowed.push("wait".into());
    let user = format!(
        "{}\n\n{}\n{}\n{}\n{}\n{}\nDecide your next action.\n{}\n{}",
        context_header(ctx.state, ctx.agent),
        recent_actions(ctx.agent),
        design_knowledge(ctx.agent),
        strategy(ctx.agent, StrategyKey::Plan),
        relationships(ctx.agent),
        idea_list(&ctx.state.board),
        allowed_values_line("chosen", &allowed),
        json_instruction("\"chosen\" and \"rationale\""),
    );
    let out: PlanOutput = ctx.call(SchemaId::Plan, user, |o: &PlanOutput| {
        one_of(&o.chosen, &allowed, "chosen")
    })?;
    Ok(PlanDecision {
        choice: RoleKind::parse(&out.chosen),
        rationale: out.rationale,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedIdea {
    pub parent_id: Option<IdeaId>,
    pub title: String,
    pub content: Ofbs,
}

/// Strategy call, then the creative call with OFBS exemplars.
pub fn run_generation(
    ctx: Ctx<'_>,
    request: Option<&RequestRecord>,
) -> Result<GeneratedIdea, PipelineError> {
    let board = &ctx.state.board;
    let targets: Vec<String> = visible_ideas(board)
        .iter()
        .map(|i| i.idea_id.to_string())
        .collect();
    let modes: Vec<&str> = if targets.is_empty() {
        vec!["new"]
    } else {
        vec!["new", "update"]
    };
    let req_text = request.map(request_details).unwrap_or_default();
    let user = format!(
        "{}\n\n{}\n{}\n{}\n{}\n{req_text}Choose whether to create a new idea or develop an existing one, and how.\n{}\n{}\n{}",
        context_header(ctx.state, ctx.agent),
        recent_actions(ctx.agent),
        design_knowledge(ctx.agent),
        strategy(ctx.agent, StrategyKey::IdeaGeneration),
        idea_list(board),
        allowed_values_line("mode", &modes),
        allowed_values_line("target", &targets),
        json_instruction("\"mode\", \"target\" (an idea id, or null for a new idea) and \"strategy\""),
    );
    let plan: PreGenerationOutput = ctx.call(SchemaId::PreGeneration, user, |o: &PreGenerationOutput| {
        one_of(&o.mode.as_str(), &modes, "mode")?;
        if o.mode == "update" {
            match &o.target {
                Some(t) => one_of(t, &targets, "target"),
                None => Err("`target` is required when mode is update".into()),
            }
        } else {
            Ok(())
        }
    })?;
    let parent = match (plan.mode.as_str(), &plan.target) {
        ("update", Some(t)) => board.get(&IdeaId::new(t.as_str())),
        _ => None,
    };

    let mut user = format!(
        "{}: {}\n{}: {}\n\nWrite one design idea in the Object-Function-Behavior-Structure format.\n\n{OFBS_EXEMPLARS}\n\nYour approach: {}\n",
        labels::TOPIC,
        ctx.state.config.topic,
        labels::AGENT,
        ctx.me(),
        plan.strategy
    );
    if let Some(p) = parent {
        user.push_str(&format!(
            "{}: {}\nDevelop this idea into an improved version:\n{}\n",
            labels::BASE_IDEA,
            p.idea_id,
            idea_card(board, p)
        ));
    }
    user.push_str(&req_text);
    user.push_str(&json_instruction(
        "\"title\", \"object\", \"function\", \"behavior\" and \"structure\", each a non-empty string",
    ));
    let out: GenerationOutput = ctx.call(SchemaId::Generation, user, |o: &GenerationOutput| {
        non_empty(&[
            ("title", &o.title),
            ("object", &o.object),
            ("function", &o.function),
            ("behavior", &o.behavior),
            ("structure", &o.structure),
        ])
    })?;
    Ok(GeneratedIdea {
        parent_id: parent.map(|p| p.idea_id.clone()),
        title: out.title,
        content: Ofbs::new(out.object, out.function, out.behavior, out.structure),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationResult {
    pub idea_id: IdeaId,
    pub scores: [u8; 3],
    pub comment: String,
}

pub fn run_evaluation(
    ctx: Ctx<'_>,
    request: Option<&RequestRecord>,
) -> Result<EvaluationResult, PipelineError> {
    let board = &ctx.state.board;
    let candidates = evaluable_ideas(ctx.state, ctx.me());
    if candidates.is_empty() {
        return Err(PipelineError::NothingToEvaluate);
    }
    let unrated: Vec<&Idea> = candidates
        .iter()
        .copied()
        .filter(|i| !board.evaluations_of(&i.idea_id).any(|e| &e.evaluator == ctx.me()))
        .collect();
    let pool = if unrated.is_empty() { candidates } else { unrated };
    let targets: Vec<String> = pool.iter().map(|i| i.idea_id.to_string()).collect();
    let req_text = request.map(request_details).unwrap_or_default();
    let mut cards = String::from("Ideas you may evaluate:\n");
    for i in &pool {
        cards.push_str(&format!("- {}\n", idea_card(board, i)));
    }
    let user = format!(
        "{}\n\n{}\n{}\n{cards}{req_text}Pick the idea to evaluate and how you will judge it.\n{}\n{}",
        context_header(ctx.state, ctx.agent),
        design_knowledge(ctx.agent),
        strategy(ctx.agent, StrategyKey::IdeaEvaluation),
        allowed_values_line("target", &targets),
        json_instruction("\"target\" and \"approach\""),
    );
    let pick: PreEvaluationOutput = ctx.call(SchemaId::PreEvaluation, user, |o: &PreEvaluationOutput| {
        one_of(&o.target, &targets, "target")
    })?;
    let idea = board
        .get(&IdeaId::new(pick.target.as_str()))
        .expect("target was checked against the board");

    let user = format!(
        "{}: {}\n{}: {}\n\nEvaluate this idea:\n{}\n\nYour approach: {}\n\
         Score novelty, completeness and quality on a {SCORE_MIN}-{SCORE_MAX} scale \
         ({SCORE_MIN} = very poor, {SCORE_MAX} = excellent) and explain each score in the comment.\n{}",
        labels::TOPIC,
        ctx.state.config.topic,
        labels::AGENT,
        ctx.me(),
        idea_card(board, idea),
        pick.approach,
        json_instruction("\"novelty\", \"completeness\", \"quality\" (integers) and \"comment\""),
    );
    let out: EvaluationOutput = ctx.call(SchemaId::Evaluation, user, |o: &EvaluationOutput| {
        for (name, s) in [
            ("novelty", o.novelty),
            ("completeness", o.completeness),
            ("quality", o.quality),
        ] {
            if !(SCORE_MIN as i64..=SCORE_MAX as i64).contains(&s) {
                return Err(format!("`{name}` must be an integer from {SCORE_MIN} to {SCORE_MAX}"));
            }
        }
        non_empty(&[("comment", &o.comment)])
    })?;
    Ok(EvaluationResult {
        idea_id: idea.idea_id.clone(),
        scores: [out.novelty as u8, out.completeness as u8, out.quality as u8],
        comment: out.comment,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackOpening {
    pub recipient: MemberId,
    pub message: String,
}

/// Chooses a partner and writes the opening turn. A request for feedback
/// is answered to its sender.
pub fn run_feedback_initiation(
    ctx: Ctx<'_>,
    request: Option<&RequestRecord>,
) -> Result<FeedbackOpening, PipelineError> {
    let partners = feedback_partners(ctx.state, ctx.me());
    let allowed: Vec<String> = match request {
        Some(r) if partners.contains(&r.from) => vec![r.from.to_string()],
        Some(r) => return Err(PipelineError::Deferred(format!("{} is busy", r.from))),
        None if partners.is_empty() => {
            return Err(PipelineError::Deferred("all neighbours are busy".into()))
        }
        None => partners.iter().map(|p| p.to_string()).collect(),
    };
    let req_text = request.map(request_details).unwrap_or_default();
    let user = format!(
        "{}\n\n{}\n{}\n{}\n{}\n{req_text}Choose who to give feedback to and what to focus on.\n{}\n{}",
        context_header(ctx.state, ctx.agent),
        recent_actions(ctx.agent),
        strategy(ctx.agent, StrategyKey::Feedback),
        relationships(ctx.agent),
        idea_list(&ctx.state.board),
        allowed_values_line("recipient", &allowed),
        json_instruction("\"recipient\" and \"focus\""),
    );
    let pick: PreFeedbackOutput = ctx.call(SchemaId::PreFeedback, user, |o: &PreFeedbackOutput| {
        one_of(&o.recipient, &allowed, "recipient")
    })?;
    let recipient = MemberId::new(pick.recipient);

    let their_ideas: Vec<String> = visible_ideas(&ctx.state.board)
        .iter()
        .filter(|i| i.author == recipient)
        .map(|i| format!("- {}", idea_card(&ctx.state.board, i)))
        .collect();
    let subject = if their_ideas.is_empty() {
        idea_list(&ctx.state.board)
    } else {
        format!("Ideas by {recipient}:\n{}\n", their_ideas.join("\n"))
    };
    let user = format!(
        "{}\n{}: {}\n{}: 1\n\nYou are opening a feedback conversation with {recipient}.\n{subject}\n\
         Focus: {}\n{FEEDBACK_TAXONOMY}\n{req_text}{}",
        context_header(ctx.state, ctx.agent),
        labels::FEEDBACK_SESSION,
        ctx.state.next_feedback_ref(),
        labels::TURN_NUMBER,
        pick.focus,
        json_instruction("\"message\" and \"conclude\" (false when opening)"),
    );
    let out: FeedbackTurnOutput = ctx.call(SchemaId::FeedbackOpening, user, |o: &FeedbackTurnOutput| {
        non_empty(&[("message", &o.message)])
    })?;
    Ok(FeedbackOpening {
        recipient,
        message: out.message,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackTurn {
    pub message: String,
    pub conclude: bool,
}

pub fn run_feedback_response(ctx: Ctx<'_>, t: &Transcript) -> Result<FeedbackTurn, PipelineError> {
    if t.whose_turn() != Some(ctx.me()) {
        return Err(PipelineError::NotYourTurn);
    }
    let user = format!(
        "{}\n\n{}{}: {}\n\n{FEEDBACK_TAXONOMY}\n{}\nContinue the conversation. Set \"conclude\" to true once the exchange has reached a useful end.\n{}",
        context_header(ctx.state, ctx.agent),
        transcript(t),
        labels::TURN_NUMBER,
        t.turns() + 1,
        strategy(ctx.agent, StrategyKey::Feedback),
        json_instruction("\"message\" and \"conclude\""),
    );
    let out: FeedbackTurnOutput = ctx.call(SchemaId::FeedbackResponse, user, |o: &FeedbackTurnOutput| {
        non_empty(&[("message", &o.message)])
    })?;
    Ok(FeedbackTurn {
        message: out.message,
        conclude: out.conclude,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestDecision {
    pub to: MemberId,
    pub action: RequestableAction,
    pub text: String,
}

pub fn run_request(ctx: Ctx<'_>) -> Result<RequestDecision, PipelineError> {
    let pairs = request_pairs(ctx.state, ctx.me());
    if pairs.is_empty() {
        return Err(PipelineError::Deferred("no teammate can take a request".into()));
    }
    let user = format!(
        "{}\n\n{}\n{}\n{}\n{}\nChoose a teammate and the action to ask of them.\n{}\n{}",
        context_header(ctx.state, ctx.agent),
        recent_actions(ctx.agent),
        strategy(ctx.agent, StrategyKey::Request),
        relationships(ctx.agent),
        idea_list(&ctx.state.board),
        allowed_values_line("recipient_action", &pairs),
        json_instruction("\"recipient\" and \"action\""),
    );
    let pick: PreRequestOutput = ctx.call(SchemaId::PreRequest, user, |o: &PreRequestOutput| {
        let ok = pairs
            .iter()
            .any(|p| p.recipient.as_str() == o.recipient && p.action.as_str() == o.action);
        if ok {
            Ok(())
        } else {
            Err(format!(
                "(`recipient`, `action`) must be one of {}",
                serde_json::to_string(&pairs).unwrap_or_default()
            ))
        }
    })?;
    let action = RequestableAction::parse(&pick.action).expect("checked above");
    let to = MemberId::new(pick.recipient);
    let user = format!(
        "{}\n{}: {}\nRecipient: {to}\n\nWrite a short message asking {to} to perform this action.\n{}",
        context_header(ctx.state, ctx.agent),
        labels::REQUESTED_ACTION,
        action.as_str(),
        json_instruction("\"message\""),
    );
    let out: RequestMessageOutput = ctx.call(SchemaId::RequestMessage, user, |o: &RequestMessageOutput| {
        non_empty(&[("message", &o.message)])
    })?;
    Ok(RequestDecision {
        to,
        action,
        text: out.message,
    })
}

/// Member whose conduct the trigger is about, if any.
pub fn trigger_counterpart(state: &SessionState, me: &MemberId, trigger: &ReflectTrigger) -> Option<MemberId> {
    match trigger {
        ReflectTrigger::Evaluation { evaluation } => Some(evaluation.evaluator.clone()),
        ReflectTrigger::Feedback { session_ref } => state
            .transcript(session_ref)
            .and_then(|t| t.partner_of(me).cloned()),
    }
}

fn describe_trigger(state: &SessionState, trigger: &ReflectTrigger) -> (String, String) {
    match trigger {
        ReflectTrigger::Evaluation { evaluation: e } => {
            let label = format!("evaluation of {} by {}", e.idea_id, e.evaluator);
            let body = format!(
                "{} rated your idea {}: novelty {}, completeness {}, quality {}.\nComment: {}\n",
                e.evaluator,
                e.idea_id,
                e.novelty,
                e.completeness,
                e.quality,
                e.comment.as_deref().unwrap_or("(none)")
            );
            (label, body)
        }
        ReflectTrigger::Feedback { session_ref } => {
            let body = state.transcript(session_ref).map(transcript).unwrap_or_default();
            (format!("feedback session {session_ref}"), body)
        }
    }
}

/// Distils a trigger into a memory delta. Only adjacent members' relationship
/// entries and the agent's own strategy keys may change.
pub fn run_reflection(ctx: Ctx<'_>, trigger: &ReflectTrigger) -> Result<ReflectionDelta, PipelineError> {
    let (label, body) = describe_trigger(ctx.state, trigger);
    let members: Vec<String> = ctx.agent.ltm.relationships.keys().map(|m| m.to_string()).collect();
    let keys: Vec<&str> = ctx
        .agent
        .ltm
        .action_strategies
        .keys()
        .map(|k| k.as_str())
        .collect();
    let mut strategies = String::from("Your current strategies:\n");
    for (k, v) in &ctx.agent.ltm.action_strategies {
        strategies.push_str(&format!("- {}: {v}\n", k.as_str()));
    }
    let user = format!(
        "{}\n{}: {label}\n\n{body}\n{}\n{strategies}\n{}\n\
         Reflect on what happened. Record new design knowledge, revise strategies that should change, \
         and update what you believe about teammates involved.\n{}\n{}\n{}",
        context_header(ctx.state, ctx.agent),
        labels::TRIGGER,
        design_knowledge(ctx.agent),
        relationships(ctx.agent),
        allowed_values_line("strategy_revisions", &keys),
        allowed_values_line("relationship_updates", &members),
        json_instruction(
            "\"new_knowledge\" (list of strings), \"strategy_revisions\" (object keyed by strategy) \
             and \"relationship_updates\" (object keyed by member id)"
        ),
    );
    let out: ReflectionOutput = ctx.call(SchemaId::Reflection, user, |o: &ReflectionOutput| {
        for k in o.strategy_revisions.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(format!("unknown strategy key `{k}`; allowed: {keys:?}"));
            }
        }
        for m in o.relationship_updates.keys() {
            if !members.contains(m) {
                return Err(format!("`{m}` is not one of your direct teammates {members:?}"));
            }
        }
        Ok(())
    })?;
    let mut delta = ReflectionDelta {
        new_knowledge: out
            .new_knowledge
            .into_iter()
            .filter(|k| !k.trim().is_empty())
            .collect(),
        strategy_revisions: out
            .strategy_revisions
            .into_iter()
            .filter_map(|(k, v)| Some((StrategyKey::parse(&k)?, v)))
            .collect(),
        relationship_updates: out
            .relationship_updates
            .into_iter()
            .map(|(k, v)| (MemberId::new(k), v))
            .collect(),
        interacted_with: Vec::new(),
    };
    delta.interacted_with = interaction_of(ctx, trigger);
    Ok(delta)
}

/// Adjacent counterpart whose interaction count a trigger advances.
pub fn interaction_of(ctx: Ctx<'_>, trigger: &ReflectTrigger) -> Vec<MemberId> {
    trigger_counterpart(ctx.state, ctx.me(), trigger)
        .filter(|m| ctx.agent.ltm.relationships.contains_key(m))
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}
