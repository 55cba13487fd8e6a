//! Chat-completion backends behind a structured-output contract.
//!
//! Every pipeline call names a [`SchemaId`]; [`complete_structured`] decodes
//! the model output into the matching record, runs the caller's semantic
//! check, and re-asks with the error appended when either fails.

mod http;
mod mock;
pub mod schema;
mod scripted;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpProvider, ProviderConfig};
pub use mock::{MockConfig, MockProvider};
pub use schema::SchemaId;
pub use scripted::ScriptedProvider;

pub const GENERAL_TEMPERATURE: f64 = 0.5;
pub const CREATIVE_TEMPERATURE: f64 = 0.8;
pub const DEFAULT_MAX_RETRIES: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub temperature: f64,
    pub schema_id: SchemaId,
    pub max_tokens: u32,
}

impl CompletionRequest {
    /// Builds a request at the temperature its schema calls for.
    pub fn new(schema_id: SchemaId, system_prompt: String, user_prompt: String) -> Self {
        let temperature = if schema_id.is_generation() {
            CREATIVE_TEMPERATURE
        } else {
            GENERAL_TEMPERATURE
        };
        let max_tokens = match schema_id {
            SchemaId::Generation | SchemaId::Reflection => 1200,
            SchemaId::Evaluation | SchemaId::FeedbackOpening | SchemaId::FeedbackResponse => 800,
            _ => 400,
        };
        CompletionRequest {
            system_prompt,
            user_prompt,
            temperature,
            schema_id,
            max_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider unreachable: {0}")]
    ProviderUnreachable(String),
    #[error("provider timed out")]
    ProviderTimeout,
    #[error("malformed output for {schema}: {detail}")]
    MalformedOutput { schema: SchemaId, detail: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("operation not supported by this provider")]
    Unsupported,
}

pub trait LlmProvider: Send + Sync {
    /// Returns the raw assistant text for one request.
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;

    fn max_retries(&self) -> u32 {
        DEFAULT_MAX_RETRIES
    }

    /// Every request issued so far, in order. Only recording providers support this.
    fn record_traffic(&self) -> Result<Vec<CompletionRequest>, ProviderError> {
        Err(ProviderError::Unsupported)
    }
}

/// Strips code fences and surrounding prose down to the outermost JSON object.
fn extract_json(raw: &str) -> &str {
    let start = raw.find('{');
    let end = raw.rfind('}');
    match (start, end) {
        (Some(s), Some(e)) if e > s => &raw[s..=e],
        _ => raw.trim(),
    }
}

/// Issues `request`, decodes it as `T` and validates it with `check`.
///
/// Malformed or invalid output is re-asked up to the provider's retry budget
/// with the error appended to the user prompt. Transport errors are returned
/// immediately.
pub fn complete_structured<T, F>(
    provider: &dyn LlmProvider,
    request: CompletionRequest,
    check: F,
) -> Result<T, ProviderError>
where
    T: DeserializeOwned,
    F: Fn(&T) -> Result<(), String>,
{
    if request.system_prompt.trim().is_empty() || request.user_prompt.trim().is_empty() {
        return Err(ProviderError::InvalidRequest("empty prompt".into()));
    }
    let schema = request.schema_id;
    let base_prompt = request.user_prompt.clone();
    let mut req = request;
    let mut last_error = String::new();
    for attempt in 0..=provider.max_retries() {
        if attempt > 0 {
            req.user_prompt = format!(
                "{base_prompt}\n\nYour previous reply was rejected: {last_error}\n\
                 Reply with a single JSON object matching the `{schema}` schema."
            );
        }
        let raw = provider.complete(&req)?;
        match serde_json::from_str::<T>(extract_json(&raw)) {
            Ok(value) => match check(&value) {
                Ok(()) => return Ok(value),
                Err(e) => last_error = e,
            },
            Err(e) => last_error = format!("not a valid {schema} record ({e})"),
        }
    }
    Err(ProviderError::MalformedOutput {
        schema,
        detail: last_error,
    })
}

/// `Label: value` lines the pipelines write into user prompts.
pub mod labels {
    pub const TOPIC: &str = "Topic";
    pub const AGENT: &str = "Agent";
    pub const FEEDBACK_SESSION: &str = "Feedback session";
    pub const TURN_NUMBER: &str = "Turn number";
    pub const REQUESTED_ACTION: &str = "Requested action";
    pub const BASE_IDEA: &str = "Base idea";
    pub const TRIGGER: &str = "Trigger";
}

/// Prompt line listing the admissible values of an output field. Real models
/// read it as an instruction; the mock provider reads it to stay legal.
pub fn allowed_values_line<T: Serialize>(field: &str, values: &[T]) -> String {
    format!(
        "Allowed values for \"{field}\": {}",
        serde_json::to_string(values).expect("values serialize")
    )
}

/// Parses a line written by [`allowed_values_line`] back out of a prompt.
pub fn parse_allowed_values(prompt: &str, field: &str) -> Option<Vec<serde_json::Value>> {
    let prefix = format!("Allowed values for \"{field}\": ");
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .and_then(|rest| serde_json::from_str(rest).ok())
}

/// Value of a `Label: value` line in a prompt.
pub fn prompt_field<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
    let prefix = format!("{label}: ");
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .map(str::trim)
}

#[cfg(test)]
mod tests {
    use super::schema::*;
    use super::*;

    fn plan_request() -> CompletionRequest {
        CompletionRequest::new(SchemaId::Plan, "system".into(), "user".into())
    }

    #[test]
    fn temperatures_follow_schema() {
        assert_eq!(plan_request().temperature, 0.5);
        let g = CompletionRequest::new(SchemaId::Generation, "s".into(), "u".into());
        assert_eq!(g.temperature, 0.8);
    }

    #[test]
    fn garbage_twice_then_valid_recovers() {
        let p = ScriptedProvider::new(vec![
            Ok("I think you should wait.".into()),
            Ok("still prose".into()),
            Ok(r#"{"chosen":"wait","rationale":"nothing to do"}"#.into()),
        ]);
        let out: PlanOutput = complete_structured(&p, plan_request(), |_| Ok(())).unwrap();
        assert_eq!(out.chosen, "wait");
        let traffic = p.record_traffic().unwrap();
        assert_eq!(traffic.len(), 3);
        assert!(traffic[1].user_prompt.contains("rejected"));
    }

    #[test]
    fn prose_beyond_budget_is_malformed() {
        let p = ScriptedProvider::new(vec![Ok("prose".into()), Ok("more prose".into())])
            .with_max_retries(1);
        let r: Result<PlanOutput, _> = complete_structured(&p, plan_request(), |_| Ok(()));
        assert!(matches!(r, Err(ProviderError::MalformedOutput { .. })));
        assert_eq!(p.record_traffic().unwrap().len(), 2);
    }

    #[test]
    fn semantic_check_failures_are_retried() {
        let p = ScriptedProvider::new(vec![
            Ok(r#"{"novelty":9,"completeness":5,"quality":4,"comment":"x"}"#.into()),
            Ok(r#"{"novelty":9,"completeness":5,"quality":4,"comment":"x"}"#.into()),
            Ok(r#"{"novelty":9,"completeness":5,"quality":4,"comment":"x"}"#.into()),
        ]);
        let req = CompletionRequest::new(SchemaId::Evaluation, "s".into(), "u".into());
        let r: Result<EvaluationOutput, _> = complete_structured(&p, req, |e: &EvaluationOutput| {
            if (1..=7).contains(&e.novelty) {
                Ok(())
            } else {
                Err(format!("novelty {} out of range", e.novelty))
            }
        });
        match r {
            Err(ProviderError::MalformedOutput { detail, .. }) => assert!(detail.contains('9')),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(p.record_traffic().unwrap().len(), 3);
    }

    #[test]
    fn transport_errors_are_not_retried() {
        let p = ScriptedProvider::new(vec![Err(ProviderError::ProviderTimeout)]);
        let r: Result<PlanOutput, _> = complete_structured(&p, plan_request(), |_| Ok(()));
        assert_eq!(r, Err(ProviderError::ProviderTimeout));
    }

    #[test]
    fn fenced_json_is_accepted() {
        let p = ScriptedProvider::new(vec![Ok(
            "```json\n{\"chosen\":\"feedback\",\"rationale\":\"r\"}\n```".into(),
        )]);
        let out: PlanOutput = complete_structured(&p, plan_request(), |_| Ok(())).unwrap();
        assert_eq!(out.chosen, "feedback");
    }

    #[test]
    fn empty_prompt_is_invalid() {
        let p = ScriptedProvider::new(vec![]);
        let req = CompletionRequest::new(SchemaId::Plan, "s".into(), " ".into());
        let r: Result<PlanOutput, _> = complete_structured(&p, req, |_| Ok(()));
        assert!(matches!(r, Err(ProviderError::InvalidRequest(_))));
    }

    #[test]
    fn allowed_values_round_trip() {
        let line = allowed_values_line("chosen", &["idea_generation", "wait"]);
        let prompt = format!("Context\n{line}\nTopic: parks");
        let vals = parse_allowed_values(&prompt, "chosen").unwrap();
        assert_eq!(vals, vec!["idea_generation", "wait"]);
        assert_eq!(prompt_field(&prompt, "Topic"), Some("parks"));
        assert!(parse_allowed_values(&prompt, "target").is_none());
    }
}
