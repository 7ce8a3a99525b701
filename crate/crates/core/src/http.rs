//! Blocking HTTP with bounded retries, shared by the archive client and the
//! segment-labeler client.

use std::time::Duration;

use thiserror::Error;
use ureq::Agent;

const USER_AGENT: &str = concat!("polidiff/", env!("CARGO_PKG_VERSION"));
const BODY_LIMIT: u64 = 64 * 1024 * 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HttpError {
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("transport error: {0}")]
    Transport(String),
}

impl HttpError {
    fn retryable(&self) -> bool {
        match self {
            HttpError::Status(code) => *code == 429 || *code >= 500,
            HttpError::Transport(_) => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub timeout: Duration,
    /// Additional attempts after the first one.
    pub retries: u32,
    /// Delay before the first retry; doubled on each further retry.
    pub backoff: Duration,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig { timeout: Duration::from_secs(30), retries: 3, backoff: Duration::from_millis(500) }
    }
}

/// Outcome of a request that exhausted its retries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exhausted {
    pub attempts: u32,
    pub last: HttpError,
}

#[derive(Clone)]
pub struct HttpClient {
    agent: Agent,
    config: HttpConfig,
}

impl std::fmt::Debug for HttpClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpClient").field("config", &self.config).finish()
    }
}

impl HttpClient {
    pub fn new(config: HttpConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .user_agent(USER_AGENT)
            .build()
            .into();
        HttpClient { agent, config }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    pub fn get(&self, url: &str) -> Result<Vec<u8>, Exhausted> {
        self.with_retries(|| {
            let resp = self.agent.get(url).call().map_err(|e| HttpError::Transport(e.to_string()))?;
            read_ok(resp)
        })
    }

    pub fn post_json(&self, url: &str, body: &serde_json::Value) -> Result<Vec<u8>, Exhausted> {
        self.with_retries(|| {
            let resp = self.agent.post(url).send_json(body).map_err(|e| HttpError::Transport(e.to_string()))?;
            read_ok(resp)
        })
    }

    fn with_retries<T>(&self, mut op: impl FnMut() -> Result<T, HttpError>) -> Result<T, Exhausted> {
        let mut delay = self.config.backoff;
        let mut attempts = 0;
        loop {
            attempts += 1;
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if e.retryable() && attempts <= self.config.retries => {
                    log::debug!("attempt {attempts} failed ({e}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                Err(last) => return Err(Exhausted { attempts, last }),
            }
        }
    }
}

fn read_ok(mut resp: ureq::http::Response<ureq::Body>) -> Result<Vec<u8>, HttpError> {
    let status = resp.status().as_u16();
    if !(200..300).contains(&status) {
        return Err(HttpError::Status(status));
    }
    resp.body_mut().with_config().limit(BODY_LIMIT).read_to_vec().map_err(|e| HttpError::Transport(e.to_string()))
}
