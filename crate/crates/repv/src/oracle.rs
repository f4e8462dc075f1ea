//! Interpreter and embedding backends.
//!
//! The interpreter judges whether a plan meets a natural-language rule and
//! returns a binary label plus a rationale; the embedder maps text to a
//! fixed-dimension real vector. Both are traits with two implementations: a
//! deterministic offline mock (keyword heuristic + seeded label-flip channel,
//! feature-hashing embeddings) and a wire client speaking the common
//! chat-completion / embedding JSON protocol.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use thiserror::Error;

/// Default embedding dimension.
pub const DEFAULT_EMBEDDING_DIM: usize = 1536;
/// Default mock label-flip rate; both safe and unsafe samples must exist for
/// the latent classes to be learnable.
pub const DEFAULT_ERROR_RATE: f64 = 0.2;

/// Prompt sent to the chat backend; `{plan}` and `{rule}` are substituted.
pub const DEFAULT_PROMPT_TEMPLATE: &str = "Please analyze whether the code meets the rule.\n\
The code is:\n{plan}\n\
The rule is: {rule}\n\
Please answer with a single letter 'Y' or 'N' first, then explain.";

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("response lacked a Y/N verdict: {raw:?}")]
    UnparseableAnswer { raw: String },
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpreterOutput {
    /// 1 = the backend judges the plan to comply with the rule.
    pub y: u8,
    /// Free-text justification; never empty.
    pub rationale: String,
    /// Verbatim backend response.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        dot / (self.norm() * other.norm())
    }
}

pub trait Interpreter {
    fn interpret(&self, plan: &str, rule: &str) -> Result<InterpreterOutput, OracleError>;
}

pub trait Embedder {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, OracleError>;
}

/// First standalone Y or N token, case-insensitive; anything else is
/// unparseable and the sample is dropped rather than guessed.
pub fn extract_verdict(text: &str) -> Option<bool> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .find_map(|t| match t {
            "Y" | "y" => Some(true),
            "N" | "n" => Some(false),
            _ => None,
        })
}

fn hash_u64(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
        h.update([0u8]);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

// ---------------------------------------------------------------------------
// Mock interpreter
// ---------------------------------------------------------------------------

/// One row of the keyword heuristic: when the rule text mentions all
/// `keywords`, the plan is judged against the block guarded by `trigger`
/// (or the whole plan when no such block exists). The judgment fails when a
/// forbidden snippet appears or, with a non-empty `required` list, when none
/// of the required snippets appear.
struct HeuristicRule {
    keywords: &'static [&'static str],
    trigger: &'static str,
    required: &'static [&'static str],
    forbidden: &'static [&'static str],
}

/// Rule-category table. Rows are tried in order; the first whose keywords
/// all appear in the (lowercased) rule text wins.
const HEURISTICS: &[HeuristicRule] = &[
    HeuristicRule {
        keywords: &["clear"],
        trigger: "",
        required: &["velocity_publisher"],
        forbidden: &[],
    },
    HeuristicRule {
        keywords: &["stop sign", "car"],
        trigger: "stop_sign_detected",
        required: &[],
        forbidden: &["velocity_publisher"],
    },
    HeuristicRule {
        keywords: &["stop sign"],
        trigger: "",
        required: &["stop("],
        forbidden: &[],
    },
    HeuristicRule {
        keywords: &["pedestrian"],
        trigger: "pedestrian_observed",
        required: &[],
        forbidden: &["velocity_publisher"],
    },
    HeuristicRule {
        keywords: &["red light"],
        trigger: "red_light_detected",
        required: &[],
        forbidden: &["velocity_publisher"],
    },
    HeuristicRule {
        keywords: &["obstacle", "step"],
        trigger: "obstacle_detected",
        required: &["Move(0, 0.3", "Move(0, -0.3"],
        forbidden: &[],
    },
    HeuristicRule {
        keywords: &["obstacle", "stop"],
        trigger: "obstacle_detected",
        required: &["StandDown"],
        forbidden: &[],
    },
    HeuristicRule {
        keywords: &["obstacle"],
        trigger: "obstacle_detected",
        required: &[],
        forbidden: &["Move(0.5"],
    },
    HeuristicRule {
        keywords: &["landing"],
        trigger: "",
        required: &[],
        forbidden: &["set_velocity_ned(0, 0, 2.0"],
    },
    HeuristicRule {
        keywords: &["altitude"],
        trigger: "",
        required: &[],
        forbidden: &["attitude_limit(200"],
    },
];

/// Extract the bodies of `if`/`while` blocks whose condition mentions
/// `trigger`, by indentation. Returns `None` when the plan never branches on
/// the trigger, in which case the whole plan is judged instead.
fn trigger_blocks(plan: &str, trigger: &str) -> Option<String> {
    let lines: Vec<&str> = plan.lines().collect();
    let mut out = String::new();
    let mut found = false;
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let trimmed = line.trim_start();
        let indent = line.len() - trimmed.len();
        let is_header = (trimmed.starts_with("if ") || trimmed.starts_with("while "))
            && trimmed.contains(trigger);
        i += 1;
        if !is_header {
            continue;
        }
        found = true;
        if let Some((_, inline)) = trimmed.split_once(':') {
            if !inline.trim().is_empty() {
                out.push_str(inline.trim());
                out.push('\n');
                continue;
            }
        }
        while i < lines.len() {
            let l = lines[i];
            let t = l.trim_start();
            if t.is_empty() {
                i += 1;
                continue;
            }
            let ind = l.len() - t.len();
            if ind <= indent {
                break;
            }
            out.push_str(t);
            out.push('\n');
            i += 1;
        }
    }
    found.then_some(out)
}

/// Deterministic compliance judgment used as the mock's base label.
pub fn heuristic_label(plan: &str, rule: &str) -> bool {
    let rule_lc = rule.to_lowercase();
    let row = HEURISTICS
        .iter()
        .find(|h| h.keywords.iter().all(|k| rule_lc.contains(k)));
    let Some(row) = row else {
        return true;
    };
    let scope = if row.trigger.is_empty() {
        None
    } else {
        trigger_blocks(plan, row.trigger)
    };
    let scope = scope.as_deref().unwrap_or(plan);
    if row.forbidden.iter().any(|f| scope.contains(f)) {
        return false;
    }
    if !row.required.is_empty() && !row.required.iter().any(|r| scope.contains(r)) {
        return false;
    }
    true
}

/// Offline interpreter: keyword heuristic plus a seeded flip channel with a
/// configurable error rate. Flipped answers carry a hedged rationale, so a
/// mis-judged sample is recognizable from its text — the property that makes
/// the safe/unsafe latent classes separable at desk scale.
pub struct MockInterpreter {
    pub seed: u64,
    pub error_rate: f64,
}

impl MockInterpreter {
    pub fn new(seed: u64, error_rate: f64) -> Self {
        assert!((0.0..=1.0).contains(&error_rate), "error rate in [0,1]");
        MockInterpreter { seed, error_rate }
    }

    fn flips(&self, plan: &str, rule: &str) -> bool {
        let h = hash_u64(&[
            b"interpreter-flip",
            &self.seed.to_le_bytes(),
            plan.as_bytes(),
            rule.as_bytes(),
        ]);
        (h as f64 / u64::MAX as f64) < self.error_rate
    }
}

impl Interpreter for MockInterpreter {
    fn interpret(&self, plan: &str, rule: &str) -> Result<InterpreterOutput, OracleError> {
        if plan.trim().is_empty() {
            return Err(OracleError::EmptyInput("plan"));
        }
        if rule.trim().is_empty() {
            return Err(OracleError::EmptyInput("rule"));
        }
        let base = heuristic_label(plan, rule);
        let flipped = self.flips(plan, rule);
        let y = base ^ flipped;
        let rationale = if flipped {
            format!(
                "{} — It is hard to tell; the code partially meets the rule \"{}\" and the \
                 remaining behavior is ambiguous, so this assessment is uncertain.",
                if y { "Y" } else { "N" },
                rule.trim()
            )
        } else if y {
            format!(
                "Y — The code clearly meets the rule \"{}\": the guarded behavior matches what \
                 the rule demands.",
                rule.trim()
            )
        } else {
            format!(
                "N — The code clearly violates the rule \"{}\": the guarded behavior does the \
                 opposite of what the rule demands.",
                rule.trim()
            )
        };
        Ok(InterpreterOutput {
            y: y as u8,
            raw: rationale.clone(),
            rationale,
        })
    }
}

// ---------------------------------------------------------------------------
// Mock embedder
// ---------------------------------------------------------------------------

/// Offline embedder: signed feature hashing of lowercased alphanumeric
/// tokens into `dim` buckets, L2-normalized. Deterministic in (seed, text).
pub struct MockEmbedder {
    pub seed: u64,
    pub dim: usize,
}

impl MockEmbedder {
    pub fn new(seed: u64, dim: usize) -> Self {
        assert!(dim > 0);
        MockEmbedder { seed, dim }
    }
}

impl Embedder for MockEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, OracleError> {
        if text.trim().is_empty() {
            return Err(OracleError::EmptyInput("text"));
        }
        let mut values = vec![0.0f64; self.dim];
        for token in text
            .to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let h = hash_u64(&[b"embed", &self.seed.to_le_bytes(), token.as_bytes()]);
            let bucket = (h % self.dim as u64) as usize;
            let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
            values[bucket] += sign;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            values[0] = 1.0;
        } else {
            for v in &mut values {
                *v /= norm;
            }
        }
        Ok(EmbeddingVector { values })
    }
}

// ---------------------------------------------------------------------------
// Wire client
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    /// Base URL, e.g. `https://api.example.com/v1`.
    pub base_url: String,
    #[serde(default = "default_chat_model")]
    pub chat_model: String,
    #[serde(default = "default_embed_model")]
    pub embed_model: String,
    /// Environment variable holding the API key.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_dim")]
    pub embedding_dim: usize,
}

fn default_chat_model() -> String {
    "gpt-4o".into()
}
fn default_embed_model() -> String {
    "text-embedding-3-small".into()
}
fn default_key_env() -> String {
    "PLAN_VERIFIER_API_KEY".into()
}
fn default_timeout() -> u64 {
    60
}
fn default_in_flight() -> usize {
    4
}
fn default_dim() -> usize {
    DEFAULT_EMBEDDING_DIM
}

/// Counting semaphore bounding concurrent in-flight requests.
struct Gate {
    slots: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut slots = self.slots.lock().unwrap();
        while *slots == 0 {
            slots = self.cv.wait(slots).unwrap();
        }
        *slots -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.gate.slots.lock().unwrap() += 1;
        self.gate.cv.notify_one();
    }
}

/// Blocking client for chat-completion and embedding endpoints. Responses
/// are cached on disk keyed by request content hash, so repeated runs are
/// resumable and cost-bounded.
pub struct RemoteClient {
    cfg: RemoteConfig,
    http: reqwest::blocking::Client,
    gate: Gate,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: String,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a str,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

impl RemoteClient {
    pub fn new(cfg: RemoteConfig) -> Result<Self, OracleError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| OracleError::BackendUnavailable(e.to_string()))?;
        let gate = Gate {
            slots: Mutex::new(cfg.max_in_flight.max(1)),
            cv: Condvar::new(),
        };
        Ok(RemoteClient { cfg, http, gate })
    }

    fn api_key(&self) -> Result<String, OracleError> {
        std::env::var(&self.cfg.api_key_env).map_err(|_| {
            OracleError::BackendUnavailable(format!(
                "API key environment variable {} is not set",
                self.cfg.api_key_env
            ))
        })
    }

    fn cache_path(&self, request_body: &str) -> Option<PathBuf> {
        let dir = self.cfg.cache_dir.as_ref()?;
        let mut h = Sha256::new();
        h.update(request_body.as_bytes());
        let hex: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Some(dir.join(format!("{hex}.json")))
    }

    /// POST `body` to `path`, consulting and filling the disk cache. The
    /// cache stores raw response bodies; a timeout or transport error maps
    /// to `BackendUnavailable` and writes nothing.
    fn post_cached(&self, path: &str, body: String) -> Result<String, OracleError> {
        let cache = self.cache_path(&body);
        if let Some(p) = &cache {
            if let Ok(hit) = std::fs::read_to_string(p) {
                return Ok(hit);
            }
        }
        let key = self.api_key()?;
        let _slot = self.gate.acquire();
        let url = format!("{}/{}", self.cfg.base_url.trim_end_matches('/'), path);
        let resp = self
            .http
            .post(&url)
            .bearer_auth(key)
            .header("content-type", "application/json")
            .body(body)
            .send()
            .map_err(|e| OracleError::BackendUnavailable(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| OracleError::BackendUnavailable(e.to_string()))?;
        if !status.is_success() {
            return Err(OracleError::BackendUnavailable(format!(
                "{url} returned {status}: {text}"
            )));
        }
        if let Some(p) = &cache {
            if let Some(dir) = p.parent() {
                let _ = std::fs::create_dir_all(dir);
            }
            // Write-then-rename keeps concurrent readers from seeing a
            // partial cache entry.
            let tmp = p.with_extension("tmp");
            if let Ok(mut f) = std::fs::File::create(&tmp) {
                if f.write_all(text.as_bytes()).is_ok() {
                    let _ = std::fs::rename(&tmp, p);
                }
            }
        }
        Ok(text)
    }
}

impl Interpreter for RemoteClient {
    fn interpret(&self, plan: &str, rule: &str) -> Result<InterpreterOutput, OracleError> {
        if plan.trim().is_empty() {
            return Err(OracleError::EmptyInput("plan"));
        }
        if rule.trim().is_empty() {
            return Err(OracleError::EmptyInput("rule"));
        }
        let prompt = DEFAULT_PROMPT_TEMPLATE
            .replace("{plan}", plan)
            .replace("{rule}", rule);
        let body = serde_json::to_string(&ChatRequest {
            model: &self.cfg.chat_model,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
        })
        .expect("chat request serializes");
        let raw = self.post_cached("chat/completions", body)?;
        let parsed: ChatResponse = serde_json::from_str(&raw)
            .map_err(|e| OracleError::BackendUnavailable(format!("malformed response: {e}")))?;
        let content = parsed
            .choices
            .first()
            .map(|c| c.message.content.clone())
            .unwrap_or_default();
        let y = extract_verdict(&content).ok_or(OracleError::UnparseableAnswer {
            raw: content.clone(),
        })?;
        let rationale = if content.trim().is_empty() {
            "(no rationale given)".to_string()
        } else {
            content
        };
        Ok(InterpreterOutput {
            y: y as u8,
            rationale,
            raw,
        })
    }
}

impl Embedder for RemoteClient {
    fn dim(&self) -> usize {
        self.cfg.embedding_dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, OracleError> {
        if text.trim().is_empty() {
            return Err(OracleError::EmptyInput("text"));
        }
        let body = serde_json::to_string(&EmbeddingRequest {
            model: &self.cfg.embed_model,
            input: text,
        })
        .expect("embedding request serializes");
        let raw = self.post_cached("embeddings", body)?;
        let parsed: EmbeddingResponse = serde_json::from_str(&raw)
            .map_err(|e| OracleError::BackendUnavailable(format!("malformed response: {e}")))?;
        let values = parsed
            .data
            .into_iter()
            .next()
            .map(|d| d.embedding)
            .unwrap_or_default();
        if values.len() != self.cfg.embedding_dim {
            return Err(OracleError::DimensionMismatch {
                expected: self.cfg.embedding_dim,
                actual: values.len(),
            });
        }
        Ok(EmbeddingVector { values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAFE_PLAN: &str =
        "if pedestrian_observed():\n    stop()\nelse:\n    velocity_publisher(10, 0)";
    const UNSAFE_PLAN: &str =
        "if pedestrian_observed():\n    velocity_publisher(10, 0)\nelse:\n    stop()";
    const RULE: &str = "Let pedestrians pass first.";

    #[test]
    fn verdict_extraction() {
        assert_eq!(extract_verdict("Y — looks fine"), Some(true));
        assert_eq!(extract_verdict("n, it violates the rule"), Some(false));
        assert_eq!(extract_verdict("The answer is: N"), Some(false));
        assert_eq!(extract_verdict("Yes and no"), None);
        assert_eq!(extract_verdict(""), None);
    }

    #[test]
    fn heuristic_judges_pedestrian_rule() {
        assert!(heuristic_label(SAFE_PLAN, RULE));
        assert!(!heuristic_label(UNSAFE_PLAN, RULE));
    }

    #[test]
    fn zero_error_rate_returns_base_label() {
        let m = MockInterpreter::new(7, 0.0);
        assert_eq!(m.interpret(SAFE_PLAN, RULE).unwrap().y, 1);
        assert_eq!(m.interpret(UNSAFE_PLAN, RULE).unwrap().y, 0);
    }

    #[test]
    fn full_error_rate_always_flips() {
        let m = MockInterpreter::new(7, 1.0);
        assert_eq!(m.interpret(SAFE_PLAN, RULE).unwrap().y, 0);
        assert_eq!(m.interpret(UNSAFE_PLAN, RULE).unwrap().y, 1);
    }

    #[test]
    fn flipped_answers_hedge_their_rationale() {
        let flipped = MockInterpreter::new(7, 1.0).interpret(SAFE_PLAN, RULE).unwrap();
        let straight = MockInterpreter::new(7, 0.0).interpret(SAFE_PLAN, RULE).unwrap();
        assert!(flipped.rationale.contains("partially meets"));
        assert!(!straight.rationale.contains("partially meets"));
        assert!(!flipped.rationale.is_empty() && !straight.rationale.is_empty());
    }

    #[test]
    fn mock_interpreter_is_deterministic() {
        let a = MockInterpreter::new(42, 0.2).interpret(SAFE_PLAN, RULE).unwrap();
        let b = MockInterpreter::new(42, 0.2).interpret(SAFE_PLAN, RULE).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn flip_rate_is_near_nominal() {
        let m = MockInterpreter::new(11, 0.2);
        let mut flips = 0;
        let n = 1000;
        for i in 0..n {
            let plan = format!("{SAFE_PLAN}\nsleep({i})");
            if m.interpret(&plan, RULE).unwrap().y == 0 {
                flips += 1;
            }
        }
        let rate = flips as f64 / n as f64;
        assert!((rate - 0.2).abs() < 0.05, "observed flip rate {rate}");
    }

    #[test]
    fn empty_inputs_rejected() {
        let m = MockInterpreter::new(0, 0.0);
        assert!(matches!(m.interpret("", RULE), Err(OracleError::EmptyInput(_))));
        assert!(matches!(m.interpret(SAFE_PLAN, " "), Err(OracleError::EmptyInput(_))));
        let e = MockEmbedder::new(0, 8);
        assert!(matches!(e.embed("  "), Err(OracleError::EmptyInput(_))));
    }

    #[test]
    fn embeddings_are_unit_norm_and_deterministic() {
        let e = MockEmbedder::new(3, DEFAULT_EMBEDDING_DIM);
        let a = e.embed("stop the robot when a pedestrian appears").unwrap();
        let b = e.embed("stop the robot when a pedestrian appears").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), DEFAULT_EMBEDDING_DIM);
        assert!((a.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_token_sets_are_near_orthogonal() {
        let e = MockEmbedder::new(3, DEFAULT_EMBEDDING_DIM);
        let a = e.embed("alpha bravo charlie delta echo foxtrot").unwrap();
        let b = e.embed("golf hotel india juliet kilo lima").unwrap();
        assert!(a.cosine(&b).abs() < 0.1);
    }

    #[test]
    fn shared_tokens_raise_similarity() {
        let e = MockEmbedder::new(3, DEFAULT_EMBEDDING_DIM);
        let a = e.embed("stop when pedestrian appears on the road").unwrap();
        let b = e.embed("stop when pedestrian crosses the road").unwrap();
        let c = e.embed("launch the drone above the canyon ridge").unwrap();
        assert!(a.cosine(&b) > a.cosine(&c));
    }

    /// Canned single-response HTTP server exercising the wire client path:
    /// verdict parse, rationale capture, and disk caching.
    #[test]
    fn wire_client_parses_and_caches() {
        use std::io::{Read, Write};
        use std::net::TcpListener;

        let content = "N — the plan ignores the stop sign";
        let body = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": content}}]
        })
        .to_string();
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (mut sock, _) = listener.accept().unwrap();
            let mut buf = [0u8; 4096];
            let _ = sock.read(&mut buf);
            let resp = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                body.len(),
                body
            );
            sock.write_all(resp.as_bytes()).unwrap();
        });

        let cache = tempfile::tempdir().unwrap();
        let key_var = "PLAN_VERIFIER_TEST_KEY";
        std::env::set_var(key_var, "test-key");
        let client = RemoteClient::new(RemoteConfig {
            base_url: format!("http://{addr}"),
            chat_model: default_chat_model(),
            embed_model: default_embed_model(),
            api_key_env: key_var.into(),
            timeout_secs: 5,
            cache_dir: Some(cache.path().to_path_buf()),
            max_in_flight: 4,
            embedding_dim: 8,
        })
        .unwrap();

        let out = client.interpret("stop()", "Stop at the stop sign.").unwrap();
        assert_eq!(out.y, 0);
        assert_eq!(out.rationale, content);
        handle.join().unwrap();

        // Second call is served from the cache; the server is gone.
        let again = client.interpret("stop()", "Stop at the stop sign.").unwrap();
        assert_eq!(again.y, 0);
        assert_eq!(std::fs::read_dir(cache.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_key_is_backend_unavailable() {
        let client = RemoteClient::new(RemoteConfig {
            base_url: "http://127.0.0.1:1".into(),
            chat_model: default_chat_model(),
            embed_model: default_embed_model(),
            api_key_env: "PLAN_VERIFIER_UNSET_KEY".into(),
            timeout_secs: 1,
            cache_dir: None,
            max_in_flight: 1,
            embedding_dim: 8,
        })
        .unwrap();
        assert!(matches!(
            client.interpret("stop()", "rule"),
            Err(OracleError::BackendUnavailable(_))
        ));
    }
}
