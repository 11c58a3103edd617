use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    /// Seconds since the epoch at which the completion was produced.
    pub created: u64,
}

/// A text-completion backend used only during offline indexing.
pub trait LlmClient: Send + Sync {
    fn model(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<Completion>;
}

impl<C: LlmClient + ?Sized> LlmClient for std::sync::Arc<C> {
    fn model(&self) -> &str {
        (**self).model()
    }

    fn complete(&self, prompt: &str) -> Result<Completion> {
        (**self).complete(prompt)
    }
}

pub(crate) fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug, Clone)]
pub struct ChatConfig {
    pub endpoint: String,
    pub token: Option<String>,
    pub model: String,
    pub timeout: Duration,
}

impl ChatConfig {
    /// Reads `PROPRAG_LLM_URL` and `PROPRAG_LLM_TOKEN`.
    pub fn from_env(model: &str) -> Result<Self> {
        let endpoint = std::env::var("PROPRAG_LLM_URL").map_err(|_| {
            Error::InvalidConfig("PROPRAG_LLM_URL is not set; no LLM endpoint configured".into())
        })?;
        Ok(Self {
            endpoint,
            token: std::env::var("PROPRAG_LLM_TOKEN").ok(),
            model: model.to_string(),
            timeout: Duration::from_secs(120),
        })
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    created: Option<u64>,
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReply,
}

#[derive(Deserialize)]
struct ChatReply {
    content: String,
}

/// Client for an OpenAI-style chat completions endpoint, at temperature 0.
pub struct ChatClient {
    config: ChatConfig,
    client: reqwest::blocking::Client,
}

impl ChatClient {
    pub fn new(config: ChatConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| Error::provider(e.to_string(), false))?;
        Ok(Self { config, client })
    }
}

impl LlmClient for ChatClient {
    fn model(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, prompt: &str) -> Result<Completion> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: 0.0,
        };
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Some(token) = &self.config.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| Error::provider(e.to_string(), true))?;
        let status = resp.status();
        if !status.is_success() {
            let retryable = status.is_server_error() || status.as_u16() == 429;
            return Err(Error::provider(
                format!("LLM endpoint returned {status}"),
                retryable,
            ));
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| Error::provider(format!("bad chat response: {e}"), false))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| Error::provider("chat response has no choices", false))?;
        Ok(Completion {
            text: choice.message.content,
            created: parsed.created.unwrap_or_else(now_secs),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    text: String,
    created: u64,
}

/// Wraps a client with an append-only JSONL cache keyed by model and
/// prompt, so re-running ingestion replays identical completions.
pub struct CachedLlm<C> {
    inner: C,
    path: PathBuf,
    state: Mutex<(HashMap<String, Completion>, File)>,
}

impl<C: LlmClient> CachedLlm<C> {
    pub fn open(inner: C, path: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                // A torn final line from an interrupted run is ignored.
                if let Ok(c) = serde_json::from_str::<CacheLine>(&line) {
                    entries.insert(
                        c.key,
                        Completion {
                            text: c.text,
                            created: c.created,
                        },
                    );
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            inner,
            path: path.to_path_buf(),
            state: Mutex::new((entries, file)),
        })
    }

    pub fn key(model: &str, prompt: &str) -> String {
        let mut h = Sha256::new();
        h.update(model.as_bytes());
        h.update([0u8]);
        h.update(prompt.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("cache lock").0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<C: LlmClient> LlmClient for CachedLlm<C> {
    fn model(&self) -> &str {
        self.inner.model()
    }

    fn complete(&self, prompt: &str) -> Result<Completion> {
        let key = Self::key(self.inner.model(), prompt);
        if let Some(c) = self.state.lock().expect("cache lock").0.get(&key) {
            return Ok(c.clone());
        }
        let completion = self.inner.complete(prompt)?;
        let mut state = self.state.lock().expect("cache lock");
        let line = serde_json::to_string(&CacheLine {
            key: key.clone(),
            text: completion.text.clone(),
            created: completion.created,
        })?;
        writeln!(state.1, "{line}")?;
        state.0.insert(key, completion.clone());
        Ok(completion)
    }
}
