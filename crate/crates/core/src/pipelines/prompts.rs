//! Prompt sections shared by the pipelines. The wording is ours; what each
//! pipeline includes is fixed by its inputs.

use std::fmt::Write;

use crate::agent::{AgentState, StrategyKey};
use crate::idea::{Idea, IdeaBoard};
use crate::llm::labels;
use crate::session::{RequestRecord, SessionState, Transcript};

/// Upper bound on the design-knowledge section; oldest entries go first.
pub const KNOWLEDGE_BUDGET_CHARS: usize = 4000;
/// Ideas shown to the model, newest last.
pub const IDEA_WINDOW: usize = 30;

pub const FEEDBACK_TAXONOMY: &str = "\
Feedback guide. Cover, briefly and in this order where it applies:
- Strengths: what works in the idea and should be kept.
- Risks: a weakness, gap or likely failure for the target users.
- Suggestions: one concrete, actionable change.
- Questions: an open question that pushes the idea further.";

pub const OFBS_EXEMPLARS: &str = "\
Example idea 1
Title: Shared Tool Library Locker
Object: A neighbourhood locker network for lending household tools
Function: Lets residents borrow rarely used tools instead of buying them
Behavior: Members reserve a tool in an app, unlock the locker with their phone and return it within a set window
Structure: Smart lockers with RFID-tagged tools, a booking app and a deposit-based membership service

Example idea 2
Title: Quiet-Hour Study Planner
Object: A planning assistant for students sharing a dorm room
Function: Coordinates study and rest times so roommates disturb each other less
Behavior: Each roommate enters classes and habits; the planner proposes quiet hours and nudges before they start
Structure: A mobile app with shared calendars, a suggestion engine and optional smart-light signals";

pub fn context_header(state: &SessionState, agent: &AgentState) -> String {
    format!(
        "{}: {}\n{}: {}\nCurrent time: {}",
        labels::TOPIC,
        state.config.topic,
        labels::AGENT,
        agent.member_id,
        state.now()
    )
}

pub fn recent_actions(agent: &AgentState) -> String {
    let mut out = String::from("Your most recent actions:\n");
    if agent.stm.recent_actions.is_empty() {
        out.push_str("- none yet\n");
    }
    for r in &agent.stm.recent_actions {
        let _ = writeln!(out, "- [{}] {}", r.at, r.summary);
    }
    out
}

pub fn design_knowledge(agent: &AgentState) -> String {
    let mut kept = Vec::new();
    let mut used = 0;
    for entry in agent.ltm.design_knowledge.iter().rev() {
        let n = entry.chars().count();
        if used + n > KNOWLEDGE_BUDGET_CHARS {
            break;
        }
        used += n;
        kept.push(entry.as_str());
    }
    kept.reverse();
    let mut out = String::from("Design knowledge you have gathered:\n");
    if kept.is_empty() {
        out.push_str("- nothing yet\n");
    }
    for k in kept {
        let _ = writeln!(out, "- {k}");
    }
    out
}

pub fn strategy(agent: &AgentState, key: StrategyKey) -> String {
    let text = agent
        .ltm
        .action_strategies
        .get(&key)
        .map(String::as_str)
        .unwrap_or(key.default_text());
    format!("Your strategy for {}: {text}\n", key.as_str())
}

pub fn relationships(agent: &AgentState) -> String {
    let mut out = String::from("Your teammates and what you believe about them:\n");
    if agent.ltm.relationships.is_empty() {
        out.push_str("- no direct connections\n");
    }
    for (id, r) in &agent.ltm.relationships {
        let _ = write!(out, "- {id}: {}", r.belief);
        if r.interactions > 0 {
            let _ = write!(out, " ({})", r.responsiveness_note);
        }
        out.push('\n');
    }
    out
}

pub fn visible_ideas(board: &IdeaBoard) -> &[Idea] {
    let start = board.ideas.len().saturating_sub(IDEA_WINDOW);
    &board.ideas[start..]
}

pub fn idea_card(board: &IdeaBoard, idea: &Idea) -> String {
    let rating = match board.mean_rating(&idea.idea_id).ok().flatten() {
        Some(r) => format!(
            "rated {r} over {} evaluation(s)",
            board.evaluations_of(&idea.idea_id).count()
        ),
        None => "not yet rated".into(),
    };
    let lineage = idea
        .parent_id
        .as_ref()
        .map(|p| format!(", developed from {p}"))
        .unwrap_or_default();
    format!(
        "{} by {}{lineage}: \"{}\"\n  Object: {}\n  Function: {}\n  Behavior: {}\n  Structure: {}\n  ({rating})",
        idea.idea_id,
        idea.author,
        idea.title,
        idea.content.object,
        idea.content.function,
        idea.content.behavior,
        idea.content.structure,
    )
}

pub fn idea_list(board: &IdeaBoard) -> String {
    let ideas = visible_ideas(board);
    let mut out = String::from("Ideas on the board:\n");
    if ideas.is_empty() {
        out.push_str("- no ideas yet\n");
    }
    for i in ideas {
        let _ = writeln!(out, "- {}", idea_card(board, i));
    }
    out
}

/// Request details appended verbatim whenever a request drives the action.
pub fn request_details(request: &RequestRecord) -> String {
    format!(
        "This action answers request {} from {} asking you to perform {}.\nRequest message: {}\n",
        request.request_ref,
        request.from,
        request.action.as_str(),
        request.text
    )
}

pub fn transcript(t: &Transcript) -> String {
    let mut out = format!(
        "{}: {}\nConversation between {} (initiator) and {}:\n",
        labels::FEEDBACK_SESSION,
        t.session_ref,
        t.initiator,
        t.recipient
    );
    for m in &t.messages {
        let _ = writeln!(out, "{}: {}", m.author, m.text);
    }
    out
}

pub fn json_instruction(fields: &str) -> String {
    format!("Reply with a single JSON object with the fields {fields}.")
}
