//! Deterministic offline provider.
//!
//! Replies are a pure function of the seed, the schema, a digest of both
//! prompts and a per-(schema, system prompt) call counter. Choices are read
//! from the `Allowed values` lines the pipelines embed, so every reply is
//! legal by construction.

use std::collections::HashMap;
use std::sync::Mutex;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::labels;
use super::{parse_allowed_values, prompt_field, CompletionRequest, LlmProvider, ProviderError};
use super::{SchemaId, DEFAULT_MAX_RETRIES};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockConfig {
    pub seed: u64,
    /// Every feedback session is concluded no later than this turn.
    pub feedback_turn_cap: u32,
    /// Percent of sessions that run to the cap; the rest stop one turn earlier.
    pub full_length_percent: u64,
}

impl MockConfig {
    pub fn new(seed: u64) -> Self {
        MockConfig {
            seed,
            feedback_turn_cap: 6,
            full_length_percent: 62,
        }
    }
}

pub struct MockProvider {
    config: MockConfig,
    counters: Mutex<HashMap<(SchemaId, [u8; 32]), u64>>,
    traffic: Mutex<Vec<CompletionRequest>>,
}

fn digest(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

fn to_u64(d: &[u8; 32]) -> u64 {
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

fn pick(values: &[Value], h: u64) -> Option<&Value> {
    if values.is_empty() {
        None
    } else {
        Some(&values[(h % values.len() as u64) as usize])
    }
}

fn as_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        Self::with_config(MockConfig::new(seed))
    }

    pub fn with_config(config: MockConfig) -> Self {
        MockProvider {
            config,
            counters: Mutex::new(HashMap::new()),
            traffic: Mutex::new(Vec::new()),
        }
    }

    pub fn config(&self) -> &MockConfig {
        &self.config
    }

    fn next_count(&self, schema: SchemaId, system: &[u8; 32]) -> u64 {
        let mut counters = self.counters.lock().unwrap();
        let c = counters.entry((schema, *system)).or_insert(0);
        let n = *c;
        *c += 1;
        n
    }

    fn reply(&self, req: &CompletionRequest, counter: u64) -> Value {
        let seed = self.config.seed.to_le_bytes();
        let schema = req.schema_id.as_str().as_bytes();
        let system = digest(&[req.system_prompt.as_bytes()]);
        let h = to_u64(&digest(&[
            &seed,
            schema,
            &system,
            req.user_prompt.as_bytes(),
            &counter.to_le_bytes(),
        ]));
        // stable per agent, independent of the changing user prompt
        let offset = to_u64(&digest(&[&seed, schema, &system]));
        let user = req.user_prompt.as_str();
        let topic = prompt_field(user, labels::TOPIC).unwrap_or("the design brief");
        let allowed = |field: &str| parse_allowed_values(user, field).unwrap_or_default();

        match req.schema_id {
            SchemaId::Plan => {
                let options: Vec<Value> = allowed("chosen")
                    .into_iter()
                    .filter(|v| v != "wait")
                    .collect();
                let rr = (offset.wrapping_add(counter) % options.len().max(1) as u64) as usize;
                let chosen = options.get(rr).map(as_text).unwrap_or_else(|| "wait".into());
                json!({
                    "chosen": chosen,
                    "rationale": format!("Next step for {topic}: {chosen}."),
                })
            }
            SchemaId::PreGeneration => {
                let targets = allowed("target");
                match pick(&targets, h) {
                    Some(t) if counter % 3 == 2 => json!({
                        "mode": "update",
                        "target": as_text(t),
                        "strategy": "Extend the chosen idea with a complementary feature.",
                    }),
                    _ => json!({
                        "mode": "new",
                        "target": null,
                        "strategy": format!("Explore an unaddressed user need in {topic}."),
                    }),
                }
            }
            SchemaId::Generation => {
                let n = counter + 1;
                let refined = prompt_field(user, labels::BASE_IDEA).is_some();
                let title = if refined {
                    format!("Idea-{n} on {topic} (refined)")
                } else {
                    format!("Idea-{n} on {topic}")
                };
                json!({
                    "title": title,
                    "object": format!("A service concept for {topic} (variant {n})"),
                    "function": format!("Helps people with everyday tasks related to {topic}"),
                    "behavior": "Senses context, proposes an action and adapts to user responses",
                    "structure": "Mobile app front end, sensor hub and a cloud recommendation engine",
                })
            }
            SchemaId::PreEvaluation => {
                let target = pick(&allowed("target"), h).map(as_text).unwrap_or_default();
                json!({
                    "target": target,
                    "approach": "Weigh novelty against feasibility for the target users.",
                })
            }
            SchemaId::Evaluation => {
                let score = |shift: u32| 3 + ((h >> shift) % 5) as i64;
                let (n, c, q) = (score(0), score(8), score(16));
                json!({
                    "novelty": n,
                    "completeness": c,
                    "quality": q,
                    "comment": format!(
                        "Novelty {n}: the concept is distinct. Completeness {c}: the structure \
                         needs more detail. Quality {q}: a plausible fit for {topic}."
                    ),
                })
            }
            SchemaId::PreFeedback => {
                let recipient = pick(&allowed("recipient"), h).map(as_text).unwrap_or_default();
                json!({
                    "recipient": recipient,
                    "focus": "Strengths first, then one concrete risk and a suggestion.",
                })
            }
            SchemaId::FeedbackOpening => json!({
                "message": format!(
                    "I looked at the latest ideas on {topic}. The core concept is promising; \
                     what would make it easier to adopt?"
                ),
                "conclude": false,
            }),
            SchemaId::FeedbackResponse => {
                let session = prompt_field(user, labels::FEEDBACK_SESSION).unwrap_or("");
                let turn: u32 = prompt_field(user, labels::TURN_NUMBER)
                    .and_then(|t| t.parse().ok())
                    .unwrap_or(1);
                let cap = self.config.feedback_turn_cap.max(2);
                let length_roll = to_u64(&digest(&[&seed, session.as_bytes()])) % 100;
                let target = if length_roll < self.config.full_length_percent {
                    cap
                } else {
                    cap - 1
                };
                let conclude = turn >= target;
                let message = if conclude {
                    format!("Thanks, that settles it. I will fold this into the next iteration (turn {turn}).")
                } else {
                    format!("Good point. One more consideration is cost and onboarding (turn {turn}).")
                };
                json!({ "message": message, "conclude": conclude })
            }
            SchemaId::PreRequest => {
                let pairs = allowed("recipient_action");
                let p = pick(&pairs, h).cloned().unwrap_or(Value::Null);
                json!({
                    "recipient": p.get("recipient").map(as_text).unwrap_or_default(),
                    "action": p.get("action").map(as_text).unwrap_or_default(),
                })
            }
            SchemaId::RequestMessage => {
                let action = prompt_field(user, labels::REQUESTED_ACTION).unwrap_or("help");
                json!({
                    "message": format!("Could you take on {action} for {topic}? A fresh angle would help the team."),
                })
            }
            SchemaId::Reflection => {
                let trigger = prompt_field(user, labels::TRIGGER).unwrap_or("recent activity");
                let members = allowed("relationship_updates");
                let strategies = allowed("strategy_revisions");
                let mut rel = serde_json::Map::new();
                for m in members {
                    rel.insert(as_text(&m), json!("Engaged and responsive in our last exchange."));
                }
                let mut strat = serde_json::Map::new();
                if let Some(k) = pick(&strategies, h) {
                    strat.insert(as_text(k), json!(format!("Build on feedback from {trigger}.")));
                }
                json!({
                    "new_knowledge": [format!("Lesson from {trigger} about {topic}.")],
                    "strategy_revisions": strat,
                    "relationship_updates": rel,
                })
            }
        }
    }
}

impl LlmProvider for MockProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        self.traffic.lock().unwrap().push(request.clone());
        let system = digest(&[request.system_prompt.as_bytes()]);
        let counter = self.next_count(request.schema_id, &system);
        Ok(self.reply(request, counter).to_string())
    }

    fn max_retries(&self) -> u32 {
        DEFAULT_MAX_RETRIES
    }

    fn record_traffic(&self) -> Result<Vec<CompletionRequest>, ProviderError> {
        Ok(self.traffic.lock().unwrap().clone())
    }
}

#[cfg(test)]
mod tests {
    use super::super::schema::*;
    use super::super::{allowed_values_line, complete_structured};
    use super::*;

    fn req(schema: SchemaId, user: &str) -> CompletionRequest {
        CompletionRequest::new(schema, "You are Ada, an agent.".into(), user.into())
    }

    #[test]
    fn plan_reply_is_schema_valid() {
        let m = MockProvider::new(1);
        let user = allowed_values_line("chosen", &["idea_generation", "wait"]);
        let out: PlanOutput = complete_structured(&m, req(SchemaId::Plan, &user), |_| Ok(())).unwrap();
        assert_eq!(out.chosen, "idea_generation");
    }

    #[test]
    fn same_seed_same_replies() {
        let run = |seed| {
            let m = MockProvider::new(seed);
            (0..5)
                .map(|i| {
                    m.complete(&req(SchemaId::Evaluation, &format!("Topic: parks {i}")))
                        .unwrap()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn plan_round_robin_alternates() {
        let m = MockProvider::new(3);
        let user = allowed_values_line("chosen", &["idea_generation", "feedback", "wait"]);
        let picks: Vec<String> = (0..4)
            .map(|_| {
                let o: PlanOutput =
                    complete_structured(&m, req(SchemaId::Plan, &user), |_| Ok(())).unwrap();
                o.chosen
            })
            .collect();
        assert_ne!(picks[0], picks[1]);
        assert_eq!(picks[0], picks[2]);
        assert_eq!(picks[1], picks[3]);
    }

    #[test]
    fn feedback_concludes_by_cap() {
        let m = MockProvider::new(11);
        for s in 0..40 {
            let mut concluded_at = None;
            for turn in 2..=6 {
                let user = format!("Feedback session: fb-{s}\nTurn number: {turn}");
                let o: FeedbackTurnOutput =
                    complete_structured(&m, req(SchemaId::FeedbackResponse, &user), |_| Ok(()))
                        .unwrap();
                if o.conclude {
                    concluded_at = Some(turn);
                    break;
                }
            }
            let t = concluded_at.expect("concluded by the sixth turn");
            assert!(t == 5 || t == 6);
        }
    }

    #[test]
    fn evaluation_scores_in_range() {
        let m = MockProvider::new(5);
        for i in 0..50 {
            let o: EvaluationOutput =
                complete_structured(&m, req(SchemaId::Evaluation, &format!("x{i}")), |_| Ok(()))
                    .unwrap();
            for s in [o.novelty, o.completeness, o.quality] {
                assert!((1..=7).contains(&s));
            }
            assert!(!o.comment.is_empty());
        }
    }

    #[test]
    fn traffic_is_recorded_in_order() {
        let m = MockProvider::new(0);
        assert!(m.record_traffic().unwrap().is_empty());
        m.complete(&req(SchemaId::Plan, "a")).unwrap();
        m.complete(&req(SchemaId::Generation, "b")).unwrap();
        let t = m.record_traffic().unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].temperature, 0.8);
        assert_eq!(t[0].temperature, 0.5);
    }
}
