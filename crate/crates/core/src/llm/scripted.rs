use std::collections::VecDeque;
use std::sync::Mutex;

use super::{CompletionRequest, LlmProvider, ProviderError, DEFAULT_MAX_RETRIES};

/// A stub backend that replays a fixed script of raw replies, one per call.
/// Once the script runs out every call fails as unreachable.
pub struct ScriptedProvider {
    replies: Mutex<VecDeque<Result<String, ProviderError>>>,
    traffic: Mutex<Vec<CompletionRequest>>,
    max_retries: u32,
}

impl ScriptedProvider {
    pub fn new(replies: Vec<Result<String, ProviderError>>) -> Self {
        ScriptedProvider {
            replies: Mutex::new(replies.into()),
            traffic: Mutex::new(Vec::new()),
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }

    pub fn with_max_retries(mut self, n: u32) -> Self {
        self.max_retries = n;
        self
    }

    pub fn push(&self, reply: Result<String, ProviderError>) {
        self.replies.lock().unwrap().push_back(reply);
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().unwrap().len()
    }
}

impl LlmProvider for ScriptedProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        self.traffic.lock().unwrap().push(request.clone());
        self.replies
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or_else(|| Err(ProviderError::ProviderUnreachable("script exhausted".into())))
    }

    fn max_retries(&self) -> u32 {
        self.max_retries
    }

    fn record_traffic(&self) -> Result<Vec<CompletionRequest>, ProviderError> {
        Ok(self.traffic.lock().unwrap().clone())
    }
}
