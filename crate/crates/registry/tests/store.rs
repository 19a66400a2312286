use std::io::Write;

use ivy_core::fixtures;
use ivy_core::parser::serialize_template;
use ivy_registry::{Store, StoreError};

fn snapshot_text(store: &Store) -> Vec<String> {
    store
        .snapshot()
        .iter()
        .map(|s| format!("{} {} {} {:?}\n{}", s.owner, s.created_at, s.template.version, s.fork_of, serialize_template(&s.template)))
        .collect()
}

#[test]
fn replaying_the_log_rebuilds_the_same_state() {
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let store = Store::open(dir.path()).unwrap();
        for t in fixtures::catalog() {
            store.publish(t.clone(), "a", None).unwrap();
            store.publish(t, "b", Some(1)).unwrap();
        }
        store.fork("scatterplot", Some(1), "scatter-copy", "c").unwrap();
        snapshot_text(&store)
    };
    assert_eq!(before.len(), 7);
    let reopened = Store::open(dir.path()).unwrap();
    assert_eq!(snapshot_text(&reopened), before);
    // Appends continue from the replayed versions.
    let next = reopened.publish(fixtures::bar_template(), "d", Some(2)).unwrap();
    assert_eq!(next.template.version, 3);
}

#[test]
fn a_torn_last_line_is_discarded() {
    let dir = tempfile::tempdir().unwrap();
    {
        let store = Store::open(dir.path()).unwrap();
        store.publish(fixtures::bar_template(), "a", None).unwrap();
    }
    let mut log = std::fs::OpenOptions::new().append(true).open(dir.path().join("log.jsonl")).unwrap();
    log.write_all(br#"{"name":"aggregate-bar","vers"#).unwrap();
    drop(log);
    let store = Store::open(dir.path()).unwrap();
    assert_eq!(store.snapshot().len(), 1);
    store.publish(fixtures::bar_template(), "a", Some(1)).unwrap();
    assert_eq!(Store::open(dir.path()).unwrap().snapshot().len(), 2);
}

#[test]
fn tampered_documents_are_detected() {
    let dir = tempfile::tempdir().unwrap();
    {
        let store = Store::open(dir.path()).unwrap();
        store.publish(fixtures::bar_template(), "a", None).unwrap();
    }
    let doc = dir.path().join("templates/aggregate-bar/1.ivy.json");
    let text = std::fs::read_to_string(&doc).unwrap().replace("population", "populace");
    std::fs::write(&doc, text).unwrap();
    assert!(matches!(Store::open(dir.path()), Err(StoreError::Corrupt { .. })));
}

#[test]
fn concurrent_writers_get_distinct_versions() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    std::thread::scope(|s| {
        for i in 0..8 {
            let store = &store;
            s.spawn(move || {
                for _ in 0..5 {
                    store.publish(fixtures::bar_template(), &format!("w{i}"), None).unwrap();
                }
            });
        }
    });
    let versions: Vec<u64> = store.snapshot().iter().map(|s| s.template.version).collect();
    assert_eq!(versions, (1..=40).collect::<Vec<_>>());
    assert_eq!(Store::open(dir.path()).unwrap().snapshot().len(), 40);
}
