//! Commonsense object–receptacle priors from a language model.
//!
//! Each (object, receptacle) pair is scored by one chat-completion call whose
//! prompt embeds a JSON scene graph. Replies must contain a line
//! `score: <decimal>`; the first decimal after the marker is taken and
//! clamped to `[0, 1]`. Replies are cached per
//! `(scene, object, receptacle, prompt version)`.
//!
//! The stub backend reads scores from a fixture table and has no transport
//! at all, so offline runs cannot reach the network.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, OnceLock};
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::constructs::CommonsensePriorTable;
use crate::error::{Error, Result};
use crate::scene::SceneDescription;

/// Bumped whenever the prompt template changes; part of the cache key.
pub const PROMPT_VERSION: &str = "v1";

pub const API_KEY_ENV: &str = "ARRANGE_ORACLE_API_KEY";
pub const ENDPOINT_ENV: &str = "ARRANGE_ORACLE_ENDPOINT";
pub const MODEL_ENV: &str = "ARRANGE_ORACLE_MODEL";

const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
const DEFAULT_MODEL: &str = "gpt-4";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairQuery {
    pub object_id: String,
    pub receptacle_id: String,
}

/// JSON rendering of a scene plus the pair under query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGraphDocument {
    pub room: String,
    pub objects: Vec<GraphNode>,
    pub receptacles: Vec<GraphNode>,
    pub query: PairQuery,
}

impl SceneGraphDocument {
    pub fn new(scene: &SceneDescription, object_id: &str, receptacle_id: &str) -> Result<Self> {
        scene.object(object_id)?;
        scene.receptacle(receptacle_id)?;
        Ok(SceneGraphDocument {
            room: scene.room.clone().unwrap_or_else(|| scene.id.clone()),
            objects: scene
                .objects()
                .iter()
                .map(|o| GraphNode { id: o.id.clone(), name: o.name.clone() })
                .collect(),
            receptacles: scene
                .receptacles()
                .iter()
                .map(|r| GraphNode { id: r.id.clone(), name: r.name.clone() })
                .collect(),
            query: PairQuery {
                object_id: object_id.to_string(),
                receptacle_id: receptacle_id.to_string(),
            },
        })
    }
}

pub fn build_prompt(scene: &SceneDescription, object_id: &str, receptacle_id: &str) -> Result<String> {
    let doc = SceneGraphDocument::new(scene, object_id, receptacle_id)?;
    let object = scene.object(object_id)?;
    let receptacle = scene.receptacle(receptacle_id)?;
    let graph = serde_json::to_string_pretty(&doc).expect("scene graph serializes");
    Ok(format!(
        "You judge where household objects are usually kept.\n\
         Scene graph (JSON):\n{graph}\n\n\
         How appropriate is it to place the object \"{}\" (id: {}) on the receptacle \"{}\" (id: {}) in this {}?\n\
         Reply with one line of the form `score: <number between 0 and 1>` \
         (1 = entirely appropriate, 0 = inappropriate), then one sentence of rationale.\n",
        object.name, object.id, receptacle.name, receptacle.id, doc.room
    ))
}

fn score_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(r"(?i)score\s*:\s*[*_`]*\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)")
            .expect("static pattern")
    })
}

/// Score and rationale from a model reply, or `None` when no
/// `score:` marker is followed by a decimal.
pub fn parse_reply(reply: &str) -> Option<(f64, String)> {
    let caps = score_pattern().captures(reply)?;
    let value: f64 = caps[1].parse().ok()?;
    if !value.is_finite() {
        return None;
    }
    let whole = caps.get(0).expect("match");
    let rationale = format!("{} {}", &reply[..whole.start()], &reply[whole.end()..]);
    let rationale = rationale.split_whitespace().collect::<Vec<_>>().join(" ");
    Some((value.clamp(0.0, 1.0), rationale))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResponse {
    pub object_id: String,
    pub receptacle_id: String,
    pub score: f64,
    pub rationale: String,
    pub raw: String,
}

/// Sends one prompt, returns the assistant's text.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: String,
    #[serde(default)]
    pub debug: bool,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    60
}

impl std::fmt::Debug for RemoteConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteConfig")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("api_key", &"<redacted>")
            .field("debug", &self.debug)
            .field("timeout_secs", &self.timeout_secs)
            .finish()
    }
}

#[derive(Debug, Deserialize)]
struct RemoteConfigFile {
    endpoint: Option<String>,
    model: Option<String>,
    api_key: Option<String>,
    #[serde(default)]
    debug: bool,
    timeout_secs: Option<u64>,
}

impl RemoteConfig {
    /// Reads the endpoint, model and credential from the environment.
    pub fn from_env() -> Result<Self> {
        let api_key = std::env::var(API_KEY_ENV)
            .map_err(|_| Error::OracleConfig(format!("{API_KEY_ENV} is not set")))?;
        Ok(RemoteConfig {
            endpoint: std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| DEFAULT_ENDPOINT.into()),
            model: std::env::var(MODEL_ENV).unwrap_or_else(|_| DEFAULT_MODEL.into()),
            api_key,
            debug: false,
            timeout_secs: default_timeout_secs(),
        })
    }

    /// Reads a JSON config file. A credential stored in the file is only
    /// accepted when the file is not readable by group or others; otherwise
    /// the credential must come from the environment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: RemoteConfigFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let api_key = match file.api_key {
            Some(key) => {
                check_private(path)?;
                key
            }
            None => std::env::var(API_KEY_ENV).map_err(|_| {
                Error::OracleConfig(format!("no api_key in {} and {API_KEY_ENV} is not set", path.display()))
            })?,
        };
        Ok(RemoteConfig {
            endpoint: file
                .endpoint
                .or_else(|| std::env::var(ENDPOINT_ENV).ok())
                .unwrap_or_else(|| DEFAULT_ENDPOINT.into()),
            model: file
                .model
                .or_else(|| std::env::var(MODEL_ENV).ok())
                .unwrap_or_else(|| DEFAULT_MODEL.into()),
            api_key,
            debug: file.debug,
            timeout_secs: file.timeout_secs.unwrap_or_else(default_timeout_secs),
        })
    }
}

#[cfg(unix)]
fn check_private(path: &Path) -> Result<()> {
    use std::os::unix::fs::PermissionsExt;
    let meta = fs::metadata(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if meta.permissions().mode() & 0o077 != 0 {
        return Err(Error::OracleConfig(format!(
            "{} holds a credential but is accessible by group/others (chmod 600)",
            path.display()
        )));
    }
    Ok(())
}

#[cfg(not(unix))]
fn check_private(_path: &Path) -> Result<()> {
    Ok(())
}

/// Request body for a chat-completion endpoint.
pub fn chat_request_body(model: &str, prompt: &str) -> serde_json::Value {
    serde_json::json!({
        "model": model,
        "temperature": 0,
        "messages": [
            {"role": "system", "content": "You are a careful assistant for household organisation."},
            {"role": "user", "content": prompt},
        ],
    })
}

/// Assistant text from a chat-completion response body.
pub fn chat_response_text(body: &serde_json::Value) -> Result<String> {
    body.pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Transport(format!("response has no choices[0].message.content: {body}")))
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        HttpTransport { config, agent }
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, prompt: &str) -> Result<String> {
        let body = chat_request_body(&self.config.model, prompt);
        if self.config.debug {
            log::debug!(
                "POST {} (Authorization: Bearer <redacted>) {}",
                self.config.endpoint,
                body
            );
        }
        let mut response = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .send_json(&body)
            .map_err(|e| Error::Transport(e.to_string()))?;
        let reply: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| Error::Transport(e.to_string()))?;
        if self.config.debug {
            log::debug!("response {reply}");
        }
        chat_response_text(&reply)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.initial_backoff.saturating_mul(factor).min(self.max_backoff)
    }
}

pub struct RemoteBackend {
    pub transport: Box<dyn ChatTransport>,
    pub retry: RetryPolicy,
    /// Maximum number of in-flight requests.
    pub concurrency: usize,
    /// Recorded as the table provenance.
    pub model: String,
}

impl RemoteBackend {
    pub fn new(transport: Box<dyn ChatTransport>, model: impl Into<String>) -> Self {
        RemoteBackend {
            transport,
            retry: RetryPolicy::default(),
            concurrency: 4,
            model: model.into(),
        }
    }

    pub fn http(config: RemoteConfig) -> Self {
        let model = config.model.clone();
        RemoteBackend::new(Box::new(HttpTransport::new(config)), model)
    }

    fn query(&self, scene: &SceneDescription, object_id: &str, receptacle_id: &str) -> Result<OracleResponse> {
        let prompt = build_prompt(scene, object_id, receptacle_id)?;
        let mut last_err = None;
        for attempt in 0..self.retry.max_attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(self.retry.backoff(attempt - 1));
            }
            match self.transport.complete(&prompt) {
                Ok(raw) => match parse_reply(&raw) {
                    Some((score, rationale)) => {
                        return Ok(OracleResponse {
                            object_id: object_id.to_string(),
                            receptacle_id: receptacle_id.to_string(),
                            score,
                            rationale,
                            raw,
                        })
                    }
                    None => {
                        log::warn!("unparsable reply for ({object_id}, {receptacle_id}), attempt {}", attempt + 1);
                        last_err = Some(Error::OracleParse {
                            object_id: object_id.to_string(),
                            receptacle_id: receptacle_id.to_string(),
                            reply: raw,
                        });
                    }
                },
                Err(e) => {
                    log::warn!("transport error for ({object_id}, {receptacle_id}), attempt {}: {e}", attempt + 1);
                    last_err = Some(match e {
                        Error::Transport(_) => e,
                        other => Error::Transport(other.to_string()),
                    });
                }
            }
        }
        Err(last_err.expect("at least one attempt"))
    }
}

/// Scores read from a fixture table; never performs I/O.
pub struct StubBackend {
    pub fixture: CommonsensePriorTable,
}

pub enum Backend {
    Remote(RemoteBackend),
    Stub(StubBackend),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub scene_id: String,
    pub object_id: String,
    pub receptacle_id: String,
    pub prompt_version: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    key: CacheKey,
    response: OracleResponse,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CacheFile {
    entries: Vec<CacheEntry>,
}

/// Write-once response cache, optionally persisted to a JSON file.
#[derive(Debug, Default)]
pub struct PriorCache {
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<CacheKey, OracleResponse>>,
}

impl PriorCache {
    pub fn in_memory() -> Self {
        PriorCache::default()
    }

    /// Loads `path` if it exists; later [`PriorCache::persist`] calls write back to it.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let entries = if path.exists() {
            let file: CacheFile = crate::io::read_json(&path)?;
            file.entries.into_iter().map(|e| (e.key, e.response)).collect()
        } else {
            BTreeMap::new()
        };
        Ok(PriorCache {
            path: Some(path),
            entries: Mutex::new(entries),
        })
    }

    pub fn get(&self, key: &CacheKey) -> Option<OracleResponse> {
        self.entries.lock().expect("cache lock").get(key).cloned()
    }

    /// Inserts unless the key is already present; existing entries are never replaced.
    pub fn insert(&self, key: CacheKey, response: OracleResponse) -> bool {
        let mut entries = self.entries.lock().expect("cache lock");
        if entries.contains_key(&key) {
            return false;
        }
        entries.insert(key, response);
        true
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn persist(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let file = CacheFile {
            entries: self
                .entries
                .lock()
                .expect("cache lock")
                .iter()
                .map(|(key, response)| CacheEntry {
                    key: key.clone(),
                    response: response.clone(),
                })
                .collect(),
        };
        let tmp = path.with_extension("json.tmp");
        crate::io::write_json(&tmp, &file)?;
        fs::rename(&tmp, path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })
    }
}

fn cache_key(scene: &SceneDescription, object_id: &str, receptacle_id: &str) -> CacheKey {
    CacheKey {
        scene_id: scene.id.clone(),
        object_id: object_id.to_string(),
        receptacle_id: receptacle_id.to_string(),
        prompt_version: PROMPT_VERSION.to_string(),
    }
}

/// Builds a total object × receptacle table for `scene`.
pub fn fetch_table(scene: &SceneDescription, backend: &Backend, cache: &PriorCache) -> Result<CommonsensePriorTable> {
    let pairs: Vec<(&str, &str)> = scene
        .objects()
        .iter()
        .flat_map(|o| scene.receptacles().iter().map(move |r| (o.id.as_str(), r.id.as_str())))
        .collect();

    match backend {
        Backend::Stub(stub) => {
            let mut table = CommonsensePriorTable::new(if stub.fixture.provenance.is_empty() {
                "stub".to_string()
            } else {
                stub.fixture.provenance.clone()
            });
            for (o, r) in pairs {
                let score = stub
                    .fixture
                    .get(o, r)
                    .map_err(|_| Error::FixtureCoverage(o.to_string(), r.to_string()))?;
                table.insert(o, r, score)?;
            }
            Ok(table)
        }
        Backend::Remote(remote) => {
            let pending: Vec<(&str, &str)> = pairs
                .iter()
                .copied()
                .filter(|(o, r)| cache.get(&cache_key(scene, o, r)).is_none())
                .collect();
            log::info!(
                "commonsense: {} pairs, {} cached, {} to query",
                pairs.len(),
                pairs.len() - pending.len(),
                pending.len()
            );

            let results: Vec<Mutex<Option<Result<OracleResponse>>>> =
                pending.iter().map(|_| Mutex::new(None)).collect();
            let next = AtomicUsize::new(0);
            let workers = remote.concurrency.clamp(1, pending.len().max(1));
            std::thread::scope(|s| {
                for _ in 0..workers {
                    s.spawn(|| loop {
                        let k = next.fetch_add(1, Ordering::SeqCst);
                        let Some((o, r)) = pending.get(k) else { break };
                        let outcome = remote.query(scene, o, r);
                        if let Ok(resp) = &outcome {
                            cache.insert(cache_key(scene, o, r), resp.clone());
                        }
                        *results[k].lock().expect("result slot") = Some(outcome);
                    });
                }
            });
            // Keep whatever succeeded even if some pairs failed.
            cache.persist()?;
            for slot in results {
                slot.into_inner().expect("result slot").expect("every pair visited")?;
            }

            let mut table = CommonsensePriorTable::new(remote.model.clone());
            for (o, r) in pairs {
                let resp = cache.get(&cache_key(scene, o, r)).expect("cached above");
                table.insert(o, r, resp.score)?;
            }
            Ok(table)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::fixtures::{object, receptacle};

    fn kitchen() -> SceneDescription {
        let mut cutlery = object("cutlery", 0.2, 0.1, 14.0);
        cutlery.name = "cutlery".into();
        let mut apples = object("apples", 0.2, 0.2, 7.0);
        apples.name = "apples".into();
        let mut drawers = receptacle("drawers", 0.0, 0.0, 0.6, 0.5, 0.8, 2);
        drawers.name = "drawers".into();
        let mut fridge = receptacle("fridge_interior", 2.0, 0.0, 0.6, 0.5, 1.0, 2);
        fridge.name = "fridge interior".into();
        SceneDescription::new("kitchen", Some("kitchen".into()), vec![cutlery, apples], vec![drawers, fridge]).unwrap()
    }

    struct Scripted {
        replies: Mutex<Vec<Result<String>>>,
        calls: AtomicUsize,
    }

    impl Scripted {
        fn always(reply: &str) -> Self {
            Scripted {
                replies: Mutex::new(vec![Ok(reply.to_string())]),
                calls: AtomicUsize::new(0),
            }
        }
    }

    impl ChatTransport for &'static Scripted {
        fn complete(&self, _prompt: &str) -> Result<String> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let mut replies = self.replies.lock().unwrap();
            if replies.len() > 1 {
                replies.remove(0)
            } else {
                match &replies[0] {
                    Ok(s) => Ok(s.clone()),
                    Err(e) => Err(Error::Transport(e.to_string())),
                }
            }
        }
    }

    fn leak(s: Scripted) -> &'static Scripted {
        Box::leak(Box::new(s))
    }

    fn fast(transport: &'static Scripted) -> Backend {
        let mut remote = RemoteBackend::new(Box::new(transport), "test-model");
        remote.retry.initial_backoff = Duration::ZERO;
        remote.retry.max_backoff = Duration::ZERO;
        Backend::Remote(remote)
    }

    #[test]
    fn prompt_is_deterministic_and_names_everything() {
        let scene = kitchen();
        let a = build_prompt(&scene, "cutlery", "drawers").unwrap();
        let b = build_prompt(&scene, "cutlery", "drawers").unwrap();
        assert_eq!(a, b);
        for name in ["cutlery", "drawers", "apples", "fridge interior"] {
            assert!(a.contains(name), "missing {name}");
        }
        assert!(a.contains("score:"));
        assert!(build_prompt(&scene, "spoon", "drawers").is_err());
    }

    #[test]
    fn scene_graph_round_trips_ids_and_names() {
        let scene = kitchen();
        let doc = SceneGraphDocument::new(&scene, "apples", "fridge_interior").unwrap();
        let back: SceneGraphDocument = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(back, doc);
        let ids: Vec<_> = back.objects.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["apples", "cutlery"]);
        assert_eq!(back.receptacles[1].name, "fridge interior");
    }

    #[test]
    fn reply_parsing() {
        assert_eq!(parse_reply("score: 0.85").unwrap().0, 0.85);
        assert_eq!(parse_reply("Score: **0.4** because fruit").unwrap().0, 0.4);
        let (s, why) = parse_reply("score: 0.7 or maybe 0.9. Fruit is kept cold.").unwrap();
        assert_eq!(s, 0.7);
        assert!(why.contains("Fruit is kept cold"));
        assert_eq!(parse_reply("score: 7").unwrap().0, 1.0);
        assert_eq!(parse_reply("score: -0.2").unwrap().0, 0.0);
        assert_eq!(parse_reply("SCORE : .5").unwrap().0, 0.5);
        assert!(parse_reply("I think 0.8").is_none());
        assert!(parse_reply("score: high").is_none());
    }

    #[test]
    fn chat_body_shapes() {
        let body = chat_request_body("m", "hello");
        assert_eq!(body["messages"][1]["content"], "hello");
        let reply = serde_json::json!({"choices": [{"message": {"content": "score: 0.85"}}]});
        assert_eq!(chat_response_text(&reply).unwrap(), "score: 0.85");
        assert!(chat_response_text(&serde_json::json!({})).is_err());
    }

    #[test]
    fn remote_fetch_uses_cache() {
        let scene = kitchen();
        let transport = leak(Scripted::always("score: 0.85\nApples belong in the fridge."));
        let backend = fast(transport);
        let cache = PriorCache::in_memory();
        let table = fetch_table(&scene, &backend, &cache).unwrap();
        assert_eq!(table.get("apples", "fridge_interior").unwrap(), 0.85);
        assert_eq!(table.len(), 4);
        assert_eq!(table.provenance, "test-model");
        assert_eq!(transport.calls.load(Ordering::SeqCst), 4);

        let again = fetch_table(&scene, &backend, &cache).unwrap();
        assert_eq!(again, table);
        assert_eq!(transport.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn retries_then_reports_parse_error() {
        let scene = kitchen();
        let transport = leak(Scripted::always("no idea"));
        let backend = fast(transport);
        let err = fetch_table(&scene, &backend, &PriorCache::in_memory()).unwrap_err();
        assert!(matches!(err, Error::OracleParse { .. }));
        // 4 pairs x 3 attempts
        assert_eq!(transport.calls.load(Ordering::SeqCst), 12);
    }

    #[test]
    fn transient_failure_recovers() {
        let scene = kitchen();
        let transport = leak(Scripted {
            replies: Mutex::new(vec![
                Err(Error::Transport("reset".into())),
                Ok("garbage".into()),
                Ok("score: 0.5".into()),
            ]),
            calls: AtomicUsize::new(0),
        });
        let mut backend = fast(transport);
        if let Backend::Remote(r) = &mut backend {
            r.concurrency = 1;
        }
        let table = fetch_table(&scene, &backend, &PriorCache::in_memory()).unwrap();
        assert!(table.iter().all(|(_, _, s)| s == 0.5));
    }

    #[test]
    fn persistent_failure_is_transport_error() {
        let scene = kitchen();
        let transport = leak(Scripted {
            replies: Mutex::new(vec![Err(Error::Transport("down".into()))]),
            calls: AtomicUsize::new(0),
        });
        let err = fetch_table(&scene, &fast(transport), &PriorCache::in_memory()).unwrap_err();
        assert!(matches!(err, Error::Transport(_)));
    }

    #[test]
    fn stub_backend() {
        let scene = kitchen();
        let mut fixture = CommonsensePriorTable::new("stub");
        for (o, r) in [("apples", "drawers"), ("apples", "fridge_interior"), ("cutlery", "drawers"), ("cutlery", "fridge_interior")] {
            fixture.insert(o, r, 1.0).unwrap();
        }
        let backend = Backend::Stub(StubBackend { fixture: fixture.clone() });
        let table = fetch_table(&scene, &backend, &PriorCache::in_memory()).unwrap();
        assert!(table.iter().all(|(_, _, s)| s == 1.0));
        assert_eq!(table.len(), 4);

        let mut partial = CommonsensePriorTable::new("stub");
        partial.insert("apples", "drawers", 0.5).unwrap();
        let err = fetch_table(&scene, &Backend::Stub(StubBackend { fixture: partial }), &PriorCache::in_memory())
            .unwrap_err();
        assert!(matches!(err, Error::FixtureCoverage(..)));
    }

    #[test]
    fn cache_persists_and_is_write_once() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        let key = CacheKey {
            scene_id: "k".into(),
            object_id: "o".into(),
            receptacle_id: "r".into(),
            prompt_version: PROMPT_VERSION.into(),
        };
        let resp = OracleResponse {
            object_id: "o".into(),
            receptacle_id: "r".into(),
            score: 0.3,
            rationale: String::new(),
            raw: "score: 0.3".into(),
        };
        {
            let cache = PriorCache::open(&path).unwrap();
            assert!(cache.insert(key.clone(), resp.clone()));
            let mut other = resp.clone();
            other.score = 0.9;
            assert!(!cache.insert(key.clone(), other));
            cache.persist().unwrap();
        }
        let cache = PriorCache::open(&path).unwrap();
        assert_eq!(cache.get(&key).unwrap().score, 0.3);
        let stale = CacheKey { prompt_version: "v0".into(), ..key };
        assert!(cache.get(&stale).is_none());
    }

    #[cfg(unix)]
    #[test]
    fn config_file_with_credential_must_be_private() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("oracle.json");
        fs::write(&path, r#"{"endpoint": "http://localhost:1/x", "model": "m", "api_key": "secret"}"#).unwrap();
        fs::set_permissions(&path, fs::Permissions::from_mode(0o644)).unwrap();
        assert!(matches!(RemoteConfig::from_file(&path), Err(Error::OracleConfig(_))));
        fs::set_permissions(&path, fs::Permissions::from_mode(0o600)).unwrap();
        let cfg = RemoteConfig::from_file(&path).unwrap();
        assert_eq!(cfg.api_key, "secret");
        assert!(!format!("{cfg:?}").contains("secret"));
    }

    #[test]
    fn backoff_is_bounded() {
        let p = RetryPolicy::default();
        assert_eq!(p.backoff(0), Duration::from_millis(500));
        assert_eq!(p.backoff(1), Duration::from_secs(1));
        assert_eq!(p.backoff(40), Duration::from_secs(8));
    }
}
