//! Scripted and reactive stand-ins for the human member.
//!
//! A policy has a timed `script` and a list of reactive `rules`. Actions are
//! JSON templates of [`HumanAction`]: a string equal to `$name` is replaced
//! by the bound value, and `${name}` inside a longer string is replaced
//! textually.
//!
//! Bindings available to every template: `$latest_idea`, `$unrated_idea`,
//! `$neighbor` (next agent adjacent to the human, round-robin), `$score`
//! (seeded draw in 3..=7) and `$n` (fire count of the rule or step). Rules
//! also bind `$actor`, `$idea_id`, `$session_ref`, `$request_ref` and
//! `$from` when the triggering event carries them.

use std::collections::BTreeMap;

use crafteam_core::session::{EventPayload, HumanAction, RequestableAction, SessionEvent, SessionState};
use crafteam_core::team::{MemberId, TeamConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptStep {
    /// Virtual seconds from session start.
    pub at: f64,
    pub action: Value,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorFilter {
    #[default]
    Agent,
    Human,
    Any,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPattern {
    /// Event kind, e.g. `idea_generated`.
    pub kind: String,
    #[serde(default)]
    pub by: ActorFilter,
    /// Only events addressed to the human: feedback opened with or continued
    /// toward them, or requests sent to them.
    #[serde(default)]
    pub to_human: bool,
    /// For `request_issued`, the requested action.
    #[serde(default)]
    pub action: Option<RequestableAction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactiveRule {
    pub on: EventPattern,
    pub respond: Value,
    #[serde(default)]
    pub delay_secs: f64,
    /// Fire on every n-th match only.
    #[serde(default)]
    pub every: Option<usize>,
    #[serde(default)]
    pub max_fires: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HumanPolicy {
    #[serde(default)]
    pub script: Vec<ScriptStep>,
    #[serde(default)]
    pub rules: Vec<ReactiveRule>,
}

pub const PRESETS: [(&str, &str); 3] = [
    ("evaluator-heavy", include_str!("../presets/evaluator-heavy.json")),
    ("requester-heavy", include_str!("../presets/requester-heavy.json")),
    ("passive", include_str!("../presets/passive.json")),
];

pub fn preset(name: &str) -> Option<HumanPolicy> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, body)| serde_json::from_str(body).expect("preset policies parse"))
}

const VARIABLES: [&str; 10] = [
    "latest_idea",
    "unrated_idea",
    "neighbor",
    "score",
    "n",
    "actor",
    "idea_id",
    "session_ref",
    "request_ref",
    "from",
];

/// Replaces placeholders in `template`. Fails on a placeholder with no
/// binding.
pub fn fill(template: &Value, vars: &BTreeMap<&str, Value>) -> Result<Value, String> {
    Ok(match template {
        Value::String(s) => {
            if let Some(name) = s.strip_prefix('$').filter(|n| !n.starts_with('{')) {
                vars.get(name)
                    .cloned()
                    .ok_or_else(|| format!("no value for ${name}"))?
            } else {
                let mut out = s.clone();
                while let Some(start) = out.find("${") {
                    let end = out[start..]
                        .find('}')
                        .map(|e| start + e)
                        .ok_or_else(|| format!("unterminated placeholder in {s:?}"))?;
                    let name = &out[start + 2..end];
                    let v = vars.get(name).ok_or_else(|| format!("no value for ${{{name}}}"))?;
                    let text = match v {
                        Value::String(t) => t.clone(),
                        other => other.to_string(),
                    };
                    out.replace_range(start..=end, &text);
                }
                Value::String(out)
            }
        }
        Value::Array(items) => Value::Array(items.iter().map(|v| fill(v, vars)).collect::<Result<_, _>>()?),
        Value::Object(map) => Value::Object(
            map.iter()
                .map(|(k, v)| Ok((k.clone(), fill(v, vars)?)))
                .collect::<Result<_, String>>()?,
        ),
        other => other.clone(),
    })
}

/// Values drawn from the trigger event.
pub fn event_bindings(event: &SessionEvent) -> BTreeMap<&'static str, Value> {
    let mut b = BTreeMap::new();
    if let Some(a) = event.payload.actor() {
        b.insert("actor", Value::from(a.as_str()));
    }
    match &event.payload {
        EventPayload::IdeaGenerated { idea } | EventPayload::IdeaUpdated { idea } => {
            b.insert("idea_id", Value::from(idea.idea_id.as_str()));
        }
        EventPayload::IdeaEvaluated { evaluation } => {
            b.insert("idea_id", Value::from(evaluation.idea_id.as_str()));
        }
        EventPayload::FeedbackOpened {
            session_ref, initiator, ..
        } => {
            b.insert("session_ref", Value::from(session_ref.as_str()));
            b.insert("from", Value::from(initiator.as_str()));
        }
        EventPayload::FeedbackMessage {
            session_ref, author, ..
        } => {
            b.insert("session_ref", Value::from(session_ref.as_str()));
            b.insert("from", Value::from(author.as_str()));
        }
        EventPayload::RequestIssued {
            request_ref, from, ..
        } => {
            b.insert("request_ref", Value::from(request_ref.as_str()));
            b.insert("from", Value::from(from.as_str()));
        }
        _ => {}
    }
    b
}

impl EventPattern {
    /// Matches against an event already applied to `state`.
    pub fn matches(&self, event: &SessionEvent, state: &SessionState) -> bool {
        if event.payload.kind() != self.kind {
            return false;
        }
        let human = state.human_id();
        let by_human = event.payload.actor().is_some() && event.payload.actor() == human;
        let actor_ok = match self.by {
            ActorFilter::Agent => event.payload.actor().is_some() && !by_human,
            ActorFilter::Human => by_human,
            ActorFilter::Any => true,
        };
        if !actor_ok {
            return false;
        }
        if let Some(want) = self.action {
            match &event.payload {
                EventPayload::RequestIssued { action, .. } if *action == want => {}
                _ => return false,
            }
        }
        if self.to_human {
            let Some(h) = human else { return false };
            let addressed = match &event.payload {
                EventPayload::FeedbackOpened { recipient, .. } => recipient == h,
                EventPayload::RequestIssued { to, .. } => to == h,
                EventPayload::FeedbackMessage { session_ref, .. } => state
                    .transcript(session_ref)
                    .is_some_and(|t| !t.closed && t.whose_turn() == Some(h)),
                _ => false,
            };
            if !addressed {
                return false;
            }
        }
        true
    }
}

impl HumanPolicy {
    /// Checks timing and that every template resolves to a well-formed
    /// action whose literal member references exist in `config`. Whether an
    /// action is permitted is left to the session, which logs refusals.
    pub fn validate(&self, config: &TeamConfig) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        let mut last = 0.0;
        for (i, step) in self.script.iter().enumerate() {
            if !step.at.is_finite() || step.at < 0.0 {
                problems.push(format!("script[{i}]: time must be a non-negative number"));
            } else if step.at < last {
                problems.push(format!("script[{i}]: times must be non-decreasing"));
            } else {
                last = step.at;
            }
            if let Err(e) = check_template(&step.action, config) {
                problems.push(format!("script[{i}]: {e}"));
            }
        }
        for (i, rule) in self.rules.iter().enumerate() {
            if !rule.delay_secs.is_finite() || rule.delay_secs < 0.0 {
                problems.push(format!("rules[{i}]: delay_secs must be a non-negative number"));
            }
            if rule.every == Some(0) {
                problems.push(format!("rules[{i}]: every must be at least 1"));
            }
            if let Err(e) = check_template(&rule.respond, config) {
                problems.push(format!("rules[{i}]: {e}"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }
}

fn check_template(template: &Value, config: &TeamConfig) -> Result<(), String> {
    let member = config
        .members
        .first()
        .map(|m| m.member_id.as_str().to_string())
        .unwrap_or_default();
    let mut dummy: BTreeMap<&str, Value> = BTreeMap::new();
    for v in VARIABLES {
        dummy.insert(v, Value::from(format!("{v}-1")));
    }
    dummy.insert("score", Value::from(4));
    dummy.insert("n", Value::from(1));
    for v in ["actor", "neighbor", "from"] {
        dummy.insert(v, Value::from(member.clone()));
    }
    let filled = fill(template, &dummy)?;
    let action: HumanAction = serde_json::from_value(filled).map_err(|e| format!("not an action: {e}"))?;
    let target = match &action {
        HumanAction::OpenFeedback { recipient, .. } | HumanAction::Request { recipient, .. } => Some(recipient),
        _ => None,
    };
    if let Some(t) = target {
        if !config.is_member(t) {
            return Err(format!("unknown member `{t}`"));
        }
    }
    Ok(())
}

/// Agents adjacent to the human, falling back to all agents.
pub fn human_neighbors(config: &TeamConfig) -> Vec<MemberId> {
    let Some(h) = config.human() else {
        return Vec::new();
    };
    let mut n: Vec<MemberId> = config
        .neighbors(&h.member_id)
        .into_iter()
        .filter(|m| config.member(m).is_some_and(|s| !s.is_human()))
        .collect();
    if n.is_empty() {
        n = config.agents().map(|a| a.member_id.clone()).collect();
    }
    n.sort();
    n
}
