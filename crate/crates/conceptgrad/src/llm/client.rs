//! Chat-completion client: live HTTP with bounded concurrency, retries with
//! exponential backoff on 5xx/timeouts, and an offline mode that replays
//! recorded fixtures keyed by prompt SHA-256.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Environment variable holding the API key for live mode.
pub const API_KEY_ENV: &str = "CONCEPTGRAD_API_KEY";
/// When set to `1`, live mode is refused and offline mode is forced.
pub const NO_NETWORK_ENV: &str = "NO_NETWORK";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Live,
    Offline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
    pub max_retries: usize,
    /// Base backoff in seconds; attempt `k` waits `base * 2^k` plus jitter.
    pub backoff_base_secs: f64,
    pub max_concurrent: usize,
    pub mode: Mode,
    /// Seed for backoff jitter.
    pub seed: u64,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4".into(),
            timeout_secs: 30,
            max_retries: 3,
            backoff_base_secs: 1.0,
            max_concurrent: 4,
            mode: Mode::Offline,
            seed: 0,
        }
    }
}

impl ClientConfig {
    pub fn validate(&self) -> Result<()> {
        if self.endpoint.trim().is_empty() || self.model.trim().is_empty() {
            return Err(Error::Config("endpoint and model must be set".into()));
        }
        if self.max_concurrent == 0 {
            return Err(Error::Config("max_concurrent must be >= 1".into()));
        }
        if !self.backoff_base_secs.is_finite() || self.backoff_base_secs < 0.0 {
            return Err(Error::Config("backoff_base_secs must be >= 0".into()));
        }
        Ok(())
    }
}

/// Raw HTTP result, or the two retryable failure shapes.
#[derive(Debug, Clone)]
pub enum TransportResponse {
    Status(u16, String),
    TimedOut,
}

/// Pluggable transport so tests can fake the network.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> TransportResponse;
}

/// reqwest-backed live transport.
pub struct HttpTransport;

impl Transport for HttpTransport {
    fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> TransportResponse {
        let client = match reqwest::blocking::Client::builder().timeout(timeout).build() {
            Ok(c) => c,
            Err(e) => return TransportResponse::Status(0, format!("client build failed: {e}")),
        };
        let mut req = client.post(url).json(body);
        if let Some(key) = api_key {
            req = req.bearer_auth(key);
        }
        match req.send() {
            Ok(resp) => {
                let status = resp.status().as_u16();
                let text = resp.text().unwrap_or_default();
                TransportResponse::Status(status, text)
            }
            Err(e) if e.is_timeout() => TransportResponse::TimedOut,
            Err(e) => TransportResponse::Status(0, format!("connection error: {e}")),
        }
    }
}

/// One recorded offline exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    pub prompt_sha256: String,
    pub response: String,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Counting semaphore over Mutex+Condvar; caps in-flight live requests.
struct Slots {
    state: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn new(n: usize) -> Self {
        Self {
            state: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) {
        let mut free = self.state.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
    }

    fn release(&self) {
        *self.state.lock().unwrap() += 1;
        self.cv.notify_one();
    }
}

/// Shareable across threads; live requests hold one of `max_concurrent`
/// slots for their full retry loop.
pub struct LlmClient {
    config: ClientConfig,
    transport: Box<dyn Transport>,
    fixtures: BTreeMap<String, String>,
    slots: Slots,
    jitter: Mutex<ChaCha20Rng>,
}

impl LlmClient {
    /// Offline client over recorded fixtures. Never touches the network.
    pub fn offline(config: ClientConfig, fixtures: Vec<Fixture>) -> Result<Self> {
        config.validate()?;
        let map = fixtures
            .into_iter()
            .map(|f| (f.prompt_sha256, f.response))
            .collect();
        Ok(Self {
            slots: Slots::new(config.max_concurrent),
            jitter: Mutex::new(ChaCha20Rng::seed_from_u64(config.seed)),
            config: ClientConfig {
                mode: Mode::Offline,
                ..config
            },
            transport: Box::new(NoTransport),
            fixtures: map,
        })
    }

    /// Offline client loading fixtures from a JSONL file
    /// (`{"prompt_sha256": ..., "response": ...}` per line).
    pub fn offline_from_file(config: ClientConfig, path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| {
            Error::Config(format!("cannot open fixture file {}: {e}", path.display()))
        })?;
        let mut fixtures = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Fixture = serde_json::from_str(&line).map_err(|e| {
                Error::Config(format!(
                    "bad fixture at {}:{}: {e}",
                    path.display(),
                    i + 1
                ))
            })?;
            fixtures.push(f);
        }
        Self::offline(config, fixtures)
    }

    /// Live client with a custom transport (tests) or [`HttpTransport`].
    /// Refused outright when `NO_NETWORK=1`.
    pub fn live(config: ClientConfig, transport: Box<dyn Transport>) -> Result<Self> {
        config.validate()?;
        if std::env::var(NO_NETWORK_ENV).as_deref() == Ok("1") {
            return Err(Error::Config(
                "NO_NETWORK=1 forbids live mode; use offline fixtures".into(),
            ));
        }
        Ok(Self {
            slots: Slots::new(config.max_concurrent),
            jitter: Mutex::new(ChaCha20Rng::seed_from_u64(config.seed)),
            config: ClientConfig {
                mode: Mode::Live,
                ..config
            },
            transport,
            fixtures: BTreeMap::new(),
        })
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    /// Sends one prompt and returns the assistant text.
    ///
    /// Offline: looks the prompt hash up in the fixtures (miss = error
    /// naming the hash). Live: posts a chat-completion JSON body, retrying
    /// 5xx and timeouts up to `max_retries` with exponential backoff.
    pub fn complete(&self, prompt: &str) -> Result<String> {
        match self.config.mode {
            Mode::Offline => {
                let key = sha256_hex(prompt.as_bytes());
                self.fixtures
                    .get(&key)
                    .cloned()
                    .ok_or(Error::FixtureMiss(key))
            }
            Mode::Live => {
                self.slots.acquire();
                let result = self.complete_live(prompt);
                self.slots.release();
                result
            }
        }
    }

    fn complete_live(&self, prompt: &str) -> Result<String> {
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        let api_key = std::env::var(API_KEY_ENV).ok();
        let timeout = Duration::from_secs(self.config.timeout_secs);
        let mut last_failure = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let base = self.config.backoff_base_secs * 2f64.powi(attempt as i32 - 1);
                let jitter: f64 = self.jitter.lock().unwrap().gen_range(0.0..0.5);
                let wait = base * (1.0 + jitter);
                if wait > 0.0 {
                    std::thread::sleep(Duration::from_secs_f64(wait));
                }
            }
            match self
                .transport
                .post_json(&self.config.endpoint, api_key.as_deref(), &body, timeout)
            {
                TransportResponse::Status(code, text) if (200..300).contains(&code) => {
                    return extract_content(&text);
                }
                TransportResponse::Status(code, text) if (500..600).contains(&code) => {
                    last_failure = format!("server error {code}: {text}");
                }
                TransportResponse::TimedOut => {
                    last_failure = "request timed out".into();
                }
                TransportResponse::Status(code, text) => {
                    // 4xx and connection-level failures are not retried.
                    return Err(Error::Transport(format!(
                        "request failed with status {code}: {text}"
                    )));
                }
            }
        }
        Err(Error::Transport(format!(
            "exhausted {} retries: {last_failure}",
            self.config.max_retries
        )))
    }
}

/// Placeholder transport for offline clients; offline never posts.
struct NoTransport;

impl Transport for NoTransport {
    fn post_json(
        &self,
        _url: &str,
        _key: Option<&str>,
        _body: &serde_json::Value,
        _timeout: Duration,
    ) -> TransportResponse {
        TransportResponse::Status(0, "offline client must not reach the transport".into())
    }
}

/// Pulls `choices[0].message.content` out of a chat-completion response.
fn extract_content(body: &str) -> Result<String> {
    let v: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| Error::Parse(format!("response is not valid json: {e}")))?;
    v.get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .and_then(|m| m.get("content"))
        .and_then(|c| c.as_str())
        .map(|s| s.to_string())
        .ok_or_else(|| {
            Error::Parse("response lacks choices[0].message.content".into())
        })
}

/// Writes fixtures as JSONL, one exchange per line.
pub fn write_fixtures(fixtures: &[Fixture], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for f in fixtures {
        serde_json::to_writer(&mut w, f)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Builds the fixture entry for a prompt/response pair.
pub fn fixture_for(prompt: &str, response: &str) -> Fixture {
    Fixture {
        prompt_sha256: sha256_hex(prompt.as_bytes()),
        response: response.to_string(),
    }
}
