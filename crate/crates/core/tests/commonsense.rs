mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use arrange_core::commonsense::{
    build_prompt, fetch_table, Backend, ChatTransport, PriorCache, RemoteBackend, RemoteConfig, RetryPolicy,
    StubBackend, API_KEY_ENV,
};
use arrange_core::{CommonsensePriorTable, Error, PriorBundle, Result, SceneDescription};
use common::load;
use regex::Regex;

/// Answers from the query line of the prompt; counts every call.
struct Scripted {
    calls: Arc<AtomicUsize>,
    query: Regex,
}

impl Scripted {
    fn new(calls: Arc<AtomicUsize>) -> Self {
        Scripted {
            calls,
            query: Regex::new(r#"\(id: ([^)]+)\) on the receptacle "[^"]*" \(id: ([^)]+)\)"#).unwrap(),
        }
    }
}

impl ChatTransport for Scripted {
    fn complete(&self, prompt: &str) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let caps = self.query.captures(prompt).expect("prompt names the pair");
        Ok(match (&caps[1], &caps[2]) {
            ("apples", "fridge_interior") => "score: 0.85\nApples keep longer when chilled.".to_string(),
            ("cutlery", "drawers") => "Score: **1.0** cutlery lives in drawers".to_string(),
            ("tea_towel", _) => "score: 1.7 (clamped)".to_string(),
            _ => "score: 0.1".to_string(),
        })
    }
}

fn scripted_backend(calls: &Arc<AtomicUsize>) -> Backend {
    let mut remote = RemoteBackend::new(Box::new(Scripted::new(calls.clone())), "scripted");
    remote.retry = RetryPolicy {
        max_attempts: 2,
        initial_backoff: Duration::ZERO,
        max_backoff: Duration::ZERO,
    };
    Backend::Remote(remote)
}

fn kitchen() -> SceneDescription {
    load("profiles/p16/scene.json")
}

#[test]
fn stub_backend_reproduces_the_fixture_table() {
    let scene = kitchen();
    let bundle: PriorBundle = load("profiles/p16/bundle.json");
    let backend = Backend::Stub(StubBackend {
        fixture: bundle.commonsense.clone(),
    });
    let cache = PriorCache::in_memory();
    let table = fetch_table(&scene, &backend, &cache).unwrap();
    assert!(cache.is_empty());
    assert_eq!(table.len(), scene.objects().len() * scene.receptacles().len());
    table.check_coverage(&scene).unwrap();
    for (o, r, v) in table.iter() {
        assert_eq!(v, bundle.commonsense.get(o, r).unwrap());
    }
}

#[test]
fn stub_backend_with_all_ones() {
    let scene = kitchen();
    let mut fixture = CommonsensePriorTable::new("ones");
    for o in scene.objects() {
        for r in scene.receptacles() {
            fixture.insert(&o.id, &r.id, 1.0).unwrap();
        }
    }
    let table = fetch_table(&scene, &Backend::Stub(StubBackend { fixture }), &PriorCache::in_memory()).unwrap();
    assert!(table.iter().all(|(_, _, v)| v == 1.0));
}

#[test]
fn stub_backend_names_missing_pairs() {
    let scene = kitchen();
    let mut fixture = CommonsensePriorTable::new("partial");
    fixture.insert("apples", "countertop", 0.5).unwrap();
    let err = fetch_table(&scene, &Backend::Stub(StubBackend { fixture }), &PriorCache::in_memory()).unwrap_err();
    assert!(matches!(err, Error::FixtureCoverage(..)), "{err}");
}

#[test]
fn scripted_replies_become_table_entries() {
    let scene = kitchen();
    let calls = Arc::new(AtomicUsize::new(0));
    let table = fetch_table(&scene, &scripted_backend(&calls), &PriorCache::in_memory()).unwrap();
    let pairs = scene.objects().len() * scene.receptacles().len();
    assert_eq!(calls.load(Ordering::SeqCst), pairs);
    assert_eq!(table.get("apples", "fridge_interior").unwrap(), 0.85);
    assert_eq!(table.get("cutlery", "drawers").unwrap(), 1.0);
    assert_eq!(table.get("tea_towel", "countertop").unwrap(), 1.0);
    assert_eq!(table.get("apples", "countertop").unwrap(), 0.1);
    assert_eq!(table.provenance, "scripted");
}

#[test]
fn reopened_cache_answers_without_calls() {
    let scene = kitchen();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.json");
    let calls = Arc::new(AtomicUsize::new(0));
    let first = {
        let cache = PriorCache::open(&path).unwrap();
        let t = fetch_table(&scene, &scripted_backend(&calls), &cache).unwrap();
        cache.persist().unwrap();
        t
    };
    let before = calls.load(Ordering::SeqCst);
    assert!(before > 0);

    let cache = PriorCache::open(&path).unwrap();
    assert_eq!(cache.len(), before);
    let second = fetch_table(&scene, &scripted_backend(&calls), &cache).unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), before);
    assert_eq!(first, second);
}

#[test]
fn prompt_names_the_queried_pair_and_the_whole_scene() {
    let scene = kitchen();
    let a = build_prompt(&scene, "cutlery", "drawers").unwrap();
    assert_eq!(a, build_prompt(&scene, "cutlery", "drawers").unwrap());
    assert!(a.contains("cutlery") && a.contains("drawers"));
    for o in scene.objects() {
        assert!(a.contains(&o.name), "{}", o.name);
    }
    for r in scene.receptacles() {
        assert!(a.contains(&r.name), "{}", r.name);
    }
    assert!(build_prompt(&scene, "cutlery", "garage").is_err());
}

#[cfg(unix)]
#[test]
fn config_file_credentials_need_private_permissions() {
    use std::os::unix::fs::PermissionsExt;

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("oracle.json");
    std::fs::write(
        &path,
        r#"{"endpoint": "http://127.0.0.1:9/v1", "model": "m", "api_key": "k-123"}"#,
    )
    .unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o644)).unwrap();
    let err = RemoteConfig::from_file(&path).unwrap_err();
    assert!(matches!(err, Error::OracleConfig(_)), "{err}");
    assert!(!err.to_string().contains("k-123"));

    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o600)).unwrap();
    let cfg = RemoteConfig::from_file(&path).unwrap();
    assert_eq!(cfg.api_key, "k-123");
    assert!(!format!("{cfg:?}").contains("k-123"));
    assert_eq!(API_KEY_ENV, "ARRANGE_ORACLE_API_KEY");
}
