use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::backend::{BackendError, ModelBackend};
use crate::textio::PromptRecord;

/// Environment variable holding an optional bearer token for the endpoint.
pub const API_KEY_ENV: &str = "RADEVENT_API_KEY";

#[derive(Serialize)]
struct Request<'a> {
    prompt: &'a str,
    max_tokens: usize,
}

#[derive(Deserialize)]
struct Response {
    text: String,
}

/// JSON-over-HTTP backend: POSTs `{"prompt", "max_tokens"}` and reads `{"text"}`.
///
/// Connection failures, timeouts, HTTP 429 and 5xx are retried with
/// exponential backoff; other statuses and malformed bodies fail at once.
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    endpoint: String,
    timeout: Duration,
    retries: usize,
    backoff: Duration,
    api_key: Option<String>,
}

enum Failure {
    Transient { timed_out: bool, message: String },
    Fatal(BackendError),
}

impl RemoteBackend {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteBackend {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(60),
            retries: 3,
            backoff: Duration::from_millis(250),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Attempts after the first one.
    pub fn with_retries(mut self, retries: usize) -> Self {
        self.retries = retries;
        self
    }

    /// Delay before the first retry; doubles on each further retry.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into()
    }

    fn attempt(&self, agent: &ureq::Agent, body: &Request<'_>) -> Result<String, Failure> {
        let mut req = agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(classify)?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Failure::Transient {
                timed_out: false,
                message: format!("HTTP {status}"),
            });
        }
        if !(200..300).contains(&status) {
            return Err(Failure::Fatal(BackendError::Http(status)));
        }
        let raw = resp.body_mut().read_to_string().map_err(classify)?;
        serde_json::from_str::<Response>(&raw)
            .map(|r| r.text)
            .map_err(|e| Failure::Fatal(BackendError::MalformedResponse(e.to_string())))
    }
}

fn classify(err: ureq::Error) -> Failure {
    match err {
        ureq::Error::Timeout(_) => Failure::Transient {
            timed_out: true,
            message: err.to_string(),
        },
        ureq::Error::Io(ref io) if io.kind() == std::io::ErrorKind::TimedOut => Failure::Transient {
            timed_out: true,
            message: err.to_string(),
        },
        ureq::Error::ConnectionFailed | ureq::Error::HostNotFound | ureq::Error::Io(_) | ureq::Error::Protocol(_) => {
            Failure::Transient {
                timed_out: false,
                message: err.to_string(),
            }
        }
        other => Failure::Fatal(BackendError::MalformedResponse(other.to_string())),
    }
}

impl ModelBackend for RemoteBackend {
    fn generate(&self, prompt: &PromptRecord, max_tokens: usize) -> Result<String, BackendError> {
        let agent = self.agent();
        let body = Request {
            prompt: &prompt.text,
            max_tokens,
        };
        let attempts = self.retries + 1;
        let mut all_timed_out = true;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let factor = 1u32.checked_shl(attempt as u32 - 1).unwrap_or(u32::MAX);
                std::thread::sleep(self.backoff.saturating_mul(factor));
            }
            match self.attempt(&agent, &body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient { timed_out, message }) => {
                    all_timed_out &= timed_out;
                    last = message;
                }
            }
        }
        if all_timed_out {
            Err(BackendError::Timeout { attempts })
        } else {
            Err(BackendError::RetriesExhausted { attempts, last })
        }
    }
}
