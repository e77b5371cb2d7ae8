use std::collections::{BTreeSet, HashMap, HashSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::*;

fn rec(id: &str, parent: Option<&str>, thread: &str, author: &str, sub: &str, at: i64) -> String {
    let parent = match parent {
        Some(p) => format!("\"t1_{p}\""),
        None => "null".to_owned(),
    };
    format!(
        r#"{{"id":"{id}","parent_id":{parent},"link_id":"t3_{thread}","author":"{author}","subreddit":"{sub}","created_utc":{at},"body":"text of {id}"}}"#
    )
}

fn store_from(lines: &[String]) -> (CorpusStore, IngestReport) {
    ingest(lines.iter().map(|s| s.as_str()), None)
}

#[test]
fn filter_keeps_only_listed_subreddits() {
    let lines = vec![
        rec("a1", None, "a1", "u1", "A", 10),
        rec("b1", None, "b1", "u2", "B", 11),
        rec("a2", Some("a1"), "a1", "u3", "A", 12),
    ];
    let filter: HashSet<String> = ["A".to_owned()].into();
    let (store, report) = ingest(lines.iter().map(|s| s.as_str()), Some(&filter));
    assert_eq!(store.len(), 2);
    assert_eq!(report.accepted, 2);
    assert_eq!(report.filtered_out, 1);
    assert!(store.post_idx("b1").is_none());
}

#[test]
fn empty_stream_gives_empty_store() {
    let (store, report) = store_from(&[]);
    assert!(store.is_empty());
    assert_eq!(report.accepted, 0);
    assert_eq!(report.rejected(), 0);
}

/// Independent line-by-line validator used as the ingestion oracle. It
/// shares no code with `parse_record`.
fn line_is_valid(line: &str) -> bool {
    let Ok(v) = serde_json::from_str::<serde_json::Value>(line) else {
        return false;
    };
    let Some(obj) = v.as_object() else { return false };
    let has_str = |keys: &[&str]| keys.iter().any(|k| obj.get(*k).map_or(false, |x| x.is_string()));
    let id_ok = ["post_id", "id"].iter().any(|k| {
        obj.get(*k).and_then(|x| x.as_str()).map_or(false, |s| !s.is_empty())
    });
    let ts_ok = ["created_at", "created_utc"].iter().any(|k| match obj.get(*k) {
        Some(serde_json::Value::Number(_)) => true,
        Some(serde_json::Value::String(s)) => s.parse::<f64>().is_ok(),
        _ => false,
    });
    let sub_ok = obj.get("subreddit").and_then(|x| x.as_str()).map_or(false, |s| !s.is_empty());
    id_ok && ts_ok && sub_ok && has_str(&["author"]) && has_str(&["body"])
}

#[test]
fn ingest_rejects_match_independent_validator() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut lines: Vec<String> = (0..995)
        .map(|i| {
            let sub = ["apples", "bikes", "codes"][rng.gen_range(0..3)];
            rec(&format!("p{i}"), None, &format!("p{i}"), &format!("u{}", rng.gen_range(0..50)), sub, 1000 + i)
        })
        .collect();
    let malformed = vec![
        "{not json".to_owned(),
        r#"{"id":"x1","subreddit":"apples","author":"u1","body":"b"}"#.to_owned(), // no timestamp
        r#"{"id":"","subreddit":"apples","author":"u1","body":"b","created_utc":5}"#.to_owned(), // empty id
        r#"{"id":"x3","author":"u1","body":"b","created_utc":5}"#.to_owned(), // no subreddit
        r#"{"id":"x4","subreddit":"apples","created_utc":5,"body":"b"}"#.to_owned(), // no author
    ];
    for (k, m) in malformed.into_iter().enumerate() {
        lines.insert(k * 198 + 7, m);
    }

    let oracle_rejects: BTreeSet<u64> = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| !line_is_valid(l))
        .map(|(i, _)| i as u64 + 1)
        .collect();
    assert_eq!(oracle_rejects.len(), 5);

    let (store, report) = store_from(&lines);
    assert_eq!(store.len(), 995);
    assert_eq!(report.accepted, 995);
    assert_eq!(report.rejected_malformed, 5);
    let got: BTreeSet<u64> = report.rejected_lines.iter().copied().collect();
    assert_eq!(got, oracle_rejects);
}

#[test]
fn duplicate_post_ids_keep_first() {
    let lines = vec![
        rec("p1", None, "p1", "first", "A", 1),
        rec("p1", None, "p1", "second", "A", 2),
    ];
    let (store, report) = store_from(&lines);
    assert_eq!(store.len(), 1);
    assert_eq!(report.rejected_duplicate, 1);
    assert_eq!(store.post(0).author, "first");
}

#[test]
fn neighbors_empty_and_strictly_prior_boundary() {
    // v replies to u at t=5.
    let lines = vec![
        rec("p1", None, "p1", "u", "A", 3),
        rec("p2", Some("p1"), "p1", "v", "A", 5),
        rec("q1", None, "q1", "loner", "A", 1),
    ];
    let (store, _) = store_from(&lines);
    assert!(store.neighbors_before("loner", 100).is_empty());
    assert!(store.neighbors_before("nobody", 100).is_empty());
    assert_eq!(store.neighbors_before("u", 6), BTreeSet::from(["v"]));
    assert!(store.neighbors_before("u", 5).is_empty());
    // Symmetric: the replier also gains a neighbour.
    assert_eq!(store.neighbors_before("v", 6), BTreeSet::from(["u"]));
}

#[test]
fn neighbors_match_linear_scan_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let users: Vec<String> = (0..12).map(|i| format!("u{i}")).collect();
    // Random forest of replies, all within one thread id so parents resolve.
    let mut lines = Vec::new();
    let mut ids: Vec<String> = Vec::new();
    for i in 0..200 {
        let id = format!("p{i}");
        let author = users[rng.gen_range(0..users.len())].clone();
        let parent = if ids.is_empty() || rng.gen_bool(0.2) {
            None
        } else {
            Some(ids[rng.gen_range(0..ids.len())].clone())
        };
        lines.push(rec(&id, parent.as_deref(), "T", &author, "A", 100 + i));
        ids.push(id);
    }
    let (store, _) = store_from(&lines);

    // Oracle: rescan the raw reply edges.
    let by_id: HashMap<&str, (&str, Option<&str>, i64)> = store
        .posts()
        .iter()
        .map(|p| (p.post_id.as_str(), (p.author.as_str(), p.parent_id.as_deref(), p.created_at)))
        .collect();
    let mut edges: Vec<(&str, &str, i64)> = Vec::new();
    for p in store.posts() {
        if let Some(parent) = p.parent_id.as_deref() {
            if let Some(&(pauthor, _, _)) = by_id.get(parent) {
                if pauthor != p.author {
                    edges.push((p.author.as_str(), pauthor, p.created_at));
                }
            }
        }
    }
    let oracle = |u: &str, t: i64| -> BTreeSet<&str> {
        edges
            .iter()
            .filter(|(a, b, at)| *at < t && (*a == u || *b == u))
            .map(|(a, b, _)| if *a == u { *b } else { *a })
            .collect()
    };

    for _ in 0..100 {
        let u = &users[rng.gen_range(0..users.len())];
        let t = rng.gen_range(50..350);
        assert_eq!(store.neighbors_before(u, t), oracle(u, t), "user {u} t {t}");
    }
}

#[test]
fn interactions_count_hand_built_thread() {
    // Five posts: u replies once to v, twice to w, once to x (4 replies total).
    let lines = vec![
        rec("r", None, "r", "v", "A", 1),
        rec("a", Some("r"), "r", "u", "A", 2),
        rec("b", Some("a"), "r", "w", "A", 3),
        rec("c", Some("b"), "r", "u", "A", 4),
        rec("d", Some("c"), "r", "x", "A", 5),
        rec("e", Some("d"), "r", "u", "A", 6),
        rec("f", Some("b"), "r", "u", "A", 7),
    ];
    let (store, _) = store_from(&lines);
    let (to_v, total) = store.interactions_count_named("u", "v", None);
    assert_eq!((to_v, total), (1, 4));
    // Never replied.
    assert_eq!(store.interactions_count_named("v", "u", None), (0, 0));
    // Window excluding everything.
    assert_eq!(store.interactions_count_named("u", "v", Some((100, 200))), (0, 0));
    // Inverted window.
    assert_eq!(store.interactions_count_named("u", "v", Some((5, 2))), (0, 0));
}

#[test]
fn neighbors_monotone_in_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut lines = vec![rec("p0", None, "T", "u0", "A", 0)];
    for i in 1..80 {
        let parent = format!("p{}", rng.gen_range(0..i));
        lines.push(rec(&format!("p{i}"), Some(&parent), "T", &format!("u{}", rng.gen_range(0..8)), "A", i as i64));
    }
    let (store, _) = store_from(&lines);
    for u in 0..8 {
        let user = format!("u{u}");
        let mut prev = BTreeSet::new();
        for t in 0..85 {
            let cur = store.neighbors_before(&user, t);
            assert!(prev.is_subset(&cur), "neighbour set shrank for {user} at t={t}");
            prev = cur;
        }
    }
}

#[test]
fn children_and_roots_partition_posts_and_chains_terminate() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lines = Vec::new();
    for i in 0..150 {
        let (parent, thread) = if i % 17 == 0 {
            (None, format!("p{i}"))
        } else {
            (Some(format!("p{}", rng.gen_range(0..i))), "p0".to_owned())
        };
        // Put everything in one thread so parents resolve.
        let thread = if parent.is_some() { "p0".to_owned() } else { thread };
        lines.push(rec(&format!("p{i}"), parent.as_deref(), &thread, "u", "A", i as i64));
    }
    let (store, _) = store_from(&lines);

    let mut seen: HashSet<PostIdx> = store.roots().iter().copied().collect();
    let mut from_children = 0usize;
    for i in 0..store.len() as PostIdx {
        for &c in store.children_of(i) {
            assert!(seen.insert(c), "post {c} reachable as child twice");
            from_children += 1;
        }
    }
    assert_eq!(store.roots().len() + from_children, store.len());

    for i in 0..store.len() as PostIdx {
        let root = store.root_of(i).expect("no cycles");
        assert!(store.parent_of(root).is_none());
    }
}

#[test]
fn export_roundtrip_is_set_equal() {
    let lines = vec![
        rec("p1", None, "p1", "alice", "A", 5),
        rec("p2", Some("p1"), "p1", "bob", "A", 9),
        rec("p3", None, "p3", "[deleted]", "B", 11),
    ];
    let (store, _) = store_from(&lines);
    let mut out = Vec::new();
    store.export(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let (store2, report2) = ingest(text.lines(), None);
    assert_eq!(report2.accepted, 3);
    let a: BTreeSet<&Post> = store.posts().iter().collect();
    let b: BTreeSet<&Post> = store2.posts().iter().collect();
    assert_eq!(a.len(), 3);
    assert_eq!(a, b);
}

#[test]
fn deleted_authors_keep_thread_structure_but_no_identity() {
    let lines = vec![
        rec("p1", None, "p1", "[deleted]", "A", 1),
        rec("p2", Some("p1"), "p1", "alice", "A", 2),
        rec("p3", Some("p2"), "p1", "bob", "A", 3),
    ];
    let (store, _) = store_from(&lines);
    assert_eq!(store.users(), &["alice".to_owned(), "bob".to_owned()]);
    // Reply to a deleted author creates no interaction.
    assert!(store.neighbors_before("alice", 100).contains("bob"));
    assert_eq!(store.neighbors_before("alice", 100).len(), 1);
    // Thread structure intact.
    let p2 = store.post_idx("p2").unwrap();
    assert_eq!(store.parent_of(p2), store.post_idx("p1"));
}

#[test]
fn time_anomalies_are_flagged_not_dropped() {
    let lines = vec![
        rec("p1", None, "p1", "a", "A", 100),
        rec("p2", Some("p1"), "p1", "b", "A", 50), // earlier than parent
    ];
    let (store, _) = store_from(&lines);
    assert_eq!(store.len(), 2);
    assert_eq!(store.flags().time_anomalies, 1);
    let p2 = store.post_idx("p2").unwrap();
    assert!(store.parent_of(p2).is_some());
}

#[test]
fn save_and_open_preserve_posts_and_indexes() {
    let lines = vec![
        rec("p1", None, "p1", "alice", "A", 5),
        rec("p2", Some("p1"), "p1", "bob", "A", 9),
    ];
    let (store, _) = store_from(&lines);
    let dir = tempfile::tempdir().unwrap();
    store.save(dir.path()).unwrap();

    let reopened = CorpusStore::open(dir.path()).unwrap();
    assert_eq!(reopened.posts(), store.posts());
    assert_eq!(reopened.neighbors_before("alice", 10), store.neighbors_before("alice", 10));

    // Stale snapshot: store still opens from the log.
    std::fs::write(dir.path().join("index.bin"), b"garbage").unwrap();
    let rebuilt = CorpusStore::open(dir.path()).unwrap();
    assert_eq!(rebuilt.posts(), store.posts());
}

#[test]
fn reddit_alias_fields_and_prefixes_accepted() {
    let line = r#"{"id":"abc","parent_id":"t3_root","link_id":"t3_root","author":"u","subreddit":"S","created_utc":"123","body":"hi"}"#;
    let post = ingest::parse_record(line).unwrap();
    assert_eq!(post.post_id, "abc");
    assert_eq!(post.parent_id.as_deref(), Some("root"));
    assert_eq!(post.thread_id, "root");
    assert_eq!(post.created_at, 123);

    let canonical = r#"{"post_id":"x","thread_id":"x","author":"u","subreddit":"S","created_at":9,"body":"b"}"#;
    let post = ingest::parse_record(canonical).unwrap();
    assert_eq!(post.post_id, "x");
    assert!(post.parent_id.is_none());
}
