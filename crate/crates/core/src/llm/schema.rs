//! Versioned output schemas for each pipeline call and the typed records
//! they decode into.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaId {
    Plan,
    PreGeneration,
    Generation,
    PreEvaluation,
    Evaluation,
    PreFeedback,
    FeedbackOpening,
    FeedbackResponse,
    PreRequest,
    RequestMessage,
    Reflection,
}

impl SchemaId {
    pub const ALL: [SchemaId; 11] = [
        SchemaId::Plan,
        SchemaId::PreGeneration,
        SchemaId::Generation,
        SchemaId::PreEvaluation,
        SchemaId::Evaluation,
        SchemaId::PreFeedback,
        SchemaId::FeedbackOpening,
        SchemaId::FeedbackResponse,
        SchemaId::PreRequest,
        SchemaId::RequestMessage,
        SchemaId::Reflection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemaId::Plan => "plan",
            SchemaId::PreGeneration => "pre_generation",
            SchemaId::Generation => "generation",
            SchemaId::PreEvaluation => "pre_evaluation",
            SchemaId::Evaluation => "evaluation",
            SchemaId::PreFeedback => "pre_feedback",
            SchemaId::FeedbackOpening => "feedback_opening",
            SchemaId::FeedbackResponse => "feedback_response",
            SchemaId::PreRequest => "pre_request",
            SchemaId::RequestMessage => "request_message",
            SchemaId::Reflection => "reflection",
        }
    }

    /// Creative calls; everything else runs at the general temperature.
    pub fn is_generation(self) -> bool {
        matches!(self, SchemaId::PreGeneration | SchemaId::Generation)
    }

    /// The shipped JSON Schema document for this output.
    pub fn document(self) -> serde_json::Value {
        let raw = match self {
            SchemaId::Plan => include_str!("../../schemas/v1/plan.json"),
            SchemaId::PreGeneration => include_str!("../../schemas/v1/pre_generation.json"),
            SchemaId::Generation => include_str!("../../schemas/v1/generation.json"),
            SchemaId::PreEvaluation => include_str!("../../schemas/v1/pre_evaluation.json"),
            SchemaId::Evaluation => include_str!("../../schemas/v1/evaluation.json"),
            SchemaId::PreFeedback => include_str!("../../schemas/v1/pre_feedback.json"),
            SchemaId::FeedbackOpening => include_str!("../../schemas/v1/feedback_opening.json"),
            SchemaId::FeedbackResponse => include_str!("../../schemas/v1/feedback_response.json"),
            SchemaId::PreRequest => include_str!("../../schemas/v1/pre_request.json"),
            SchemaId::RequestMessage => include_str!("../../schemas/v1/request_message.json"),
            SchemaId::Reflection => include_str!("../../schemas/v1/reflection.json"),
        };
        serde_json::from_str(raw).expect("shipped schema is valid JSON")
    }
}

impl fmt::Display for SchemaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanOutput {
    pub chosen: String,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreGenerationOutput {
    pub mode: String,
    #[serde(default)]
    pub target: Option<String>,
    pub strategy: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationOutput {
    pub title: String,
    pub object: String,
    pub function: String,
    pub behavior: String,
    pub structure: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreEvaluationOutput {
    pub target: String,
    pub approach: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationOutput {
    pub novelty: i64,
    pub completeness: i64,
    pub quality: i64,
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreFeedbackOutput {
    pub recipient: String,
    pub focus: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackTurnOutput {
    pub message: String,
    pub conclude: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreRequestOutput {
    pub recipient: String,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestMessageOutput {
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectionOutput {
    #[serde(default)]
    pub new_knowledge: Vec<String>,
    #[serde(default)]
    pub strategy_revisions: BTreeMap<String, String>,
    #[serde(default)]
    pub relationship_updates: BTreeMap<String, String>,
}
