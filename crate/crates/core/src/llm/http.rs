use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{CompletionRequest, LlmProvider, ProviderError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key; the key itself
    /// is never stored or logged.
    pub credential_env_var: String,
    #[serde(with = "secs")]
    pub request_timeout: Duration,
    pub max_retries: u32,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_secs())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs(u64::deserialize(d)?))
    }
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o-2024-08-06".into(),
            credential_env_var: "OPENAI_API_KEY".into(),
            request_timeout: Duration::from_secs(60),
            max_retries: super::DEFAULT_MAX_RETRIES,
        }
    }
}

impl ProviderConfig {
    /// Reads `PROVIDER_URL`, `PROVIDER_MODEL`, `PROVIDER_KEY_ENV`,
    /// `PROVIDER_TIMEOUT_SECS` and `PROVIDER_MAX_RETRIES`, keeping defaults
    /// for anything unset.
    pub fn from_env() -> Self {
        let mut c = ProviderConfig::default();
        if let Ok(v) = std::env::var("PROVIDER_URL") {
            c.endpoint_url = v;
        }
        if let Ok(v) = std::env::var("PROVIDER_MODEL") {
            c.model_name = v;
        }
        if let Ok(v) = std::env::var("PROVIDER_KEY_ENV") {
            c.credential_env_var = v;
        }
        if let Some(v) = std::env::var("PROVIDER_TIMEOUT_SECS")
            .ok()
            .and_then(|v| v.parse().ok())
        {
            c.request_timeout = Duration::from_secs(v);
        }
        if let Some(v) = std::env::var("PROVIDER_MAX_RETRIES")
            .ok()
            .and_then(|v| v.parse().ok())
        {
            c.max_retries = v;
        }
        c
    }
}

/// OpenAI-style chat completion backend.
pub struct HttpProvider {
    config: ProviderConfig,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        if config.request_timeout.is_zero() {
            return Err(ProviderError::InvalidRequest("timeout must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .map_err(|e| ProviderError::ProviderUnreachable(e.to_string()))?;
        Ok(HttpProvider { config, client })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn body(&self, request: &CompletionRequest) -> Value {
        json!({
            "model": self.config.model_name,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [
                { "role": "system", "content": request.system_prompt },
                { "role": "user", "content": request.user_prompt },
            ],
            "response_format": {
                "type": "json_schema",
                "json_schema": {
                    "name": request.schema_id.as_str(),
                    "schema": request.schema_id.document(),
                },
            },
        })
    }
}

fn transport(e: reqwest::Error) -> ProviderError {
    if e.is_timeout() {
        ProviderError::ProviderTimeout
    } else {
        ProviderError::ProviderUnreachable(e.without_url().to_string())
    }
}

impl LlmProvider for HttpProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let mut builder = self.client.post(&self.config.endpoint_url).json(&self.body(request));
        if let Ok(key) = std::env::var(&self.config.credential_env_var) {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(transport)?;
        let status = response.status();
        if !status.is_success() {
            return Err(ProviderError::ProviderUnreachable(format!("http status {status}")));
        }
        let body: Value = response.json().map_err(transport)?;
        body.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::MalformedOutput {
                schema: request.schema_id,
                detail: "response carries no message content".into(),
            })
    }

    fn max_retries(&self) -> u32 {
        self.config.max_retries
    }
}
