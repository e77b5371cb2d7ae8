//! Entity-mention records and the per-entity time index.
//!
//! An entity key is the mention text lowercased with tokens joined by
//! single spaces, so trivially-variant surface forms merge. The index
//! orders each entity's citing posts by `(created_at, post_id)` and keeps
//! one activation (first mention) per tracked user.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusStore, PostIdx, UserIdx};

/// Normalize a mention surface form into an entity key.
pub fn entity_key(mention_text: &str) -> String {
    mention_text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// One extracted mention, as stored in the mentions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRecord {
    pub entity: String,
    pub post_id: String,
    pub author: String,
    pub created_at: i64,
    pub surface: String,
}

#[derive(Debug, Error)]
pub enum MentionError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("mentions format: {0}")]
    Format(String),
    #[error("mention references unknown post {0}")]
    UnknownPost(String),
}

/// A post citing an entity, resolved against the store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MentionPost {
    pub post: PostIdx,
    /// Tracked author, if any.
    pub author: Option<UserIdx>,
    pub at: i64,
}

/// A user's first citation of an entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Activation {
    pub user: UserIdx,
    pub at: i64,
    pub post: PostIdx,
}

/// Per-entity mention and activation tables, time-ordered.
#[derive(Debug, Default)]
pub struct MentionIndex {
    /// Entity -> citing posts ordered by `(created_at, post_id)`; a post
    /// appears once per entity regardless of repeat mentions in its body.
    posts: BTreeMap<String, Vec<MentionPost>>,
    /// Entity -> first mention per tracked user, ordered by activation
    /// `(time, post_id)`.
    activations: BTreeMap<String, Vec<Activation>>,
}

impl MentionIndex {
    /// Build from mention records, resolving posts against the store.
    /// Records for unknown posts are rejected; a record count is returned
    /// alongside the index.
    pub fn from_records<I>(store: &CorpusStore, records: I) -> Result<(Self, u64), MentionError>
    where
        I: IntoIterator<Item = MentionRecord>,
    {
        let mut seen: HashMap<(String, PostIdx), ()> = HashMap::new();
        let mut posts: BTreeMap<String, Vec<MentionPost>> = BTreeMap::new();
        let mut count = 0u64;
        for rec in records {
            let idx = store
                .post_idx(&rec.post_id)
                .ok_or_else(|| MentionError::UnknownPost(rec.post_id.clone()))?;
            count += 1;
            let key = entity_key(&rec.entity);
            if seen.insert((key.clone(), idx), ()).is_some() {
                continue;
            }
            let post = store.post(idx);
            posts.entry(key).or_default().push(MentionPost {
                post: idx,
                author: store.author_of(idx),
                at: post.created_at,
            });
        }
        for (_, list) in posts.iter_mut() {
            list.sort_by(|a, b| {
                (a.at, &store.post(a.post).post_id).cmp(&(b.at, &store.post(b.post).post_id))
            });
        }

        // Activations: first mention per tracked user.
        let mut activations: BTreeMap<String, Vec<Activation>> = BTreeMap::new();
        for (entity, list) in &posts {
            let mut first: HashMap<UserIdx, Activation> = HashMap::new();
            for mp in list {
                let Some(user) = mp.author else { continue };
                first.entry(user).or_insert(Activation { user, at: mp.at, post: mp.post });
            }
            let mut acts: Vec<Activation> = first.into_values().collect();
            acts.sort_by(|a, b| {
                (a.at, &store.post(a.post).post_id).cmp(&(b.at, &store.post(b.post).post_id))
            });
            activations.insert(entity.clone(), acts);
        }
        Ok((MentionIndex { posts, activations }, count))
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.posts.keys().map(String::as_str)
    }

    pub fn n_entities(&self) -> usize {
        self.posts.len()
    }

    /// Citing posts of an entity, time-ordered. Unknown entities are empty.
    pub fn posts_of(&self, entity: &str) -> &[MentionPost] {
        self.posts.get(entity).map(Vec::as_slice).unwrap_or(&[])
    }

    /// First mention per tracked user, in activation order.
    pub fn activations_of(&self, entity: &str) -> &[Activation] {
        self.activations.get(entity).map(Vec::as_slice).unwrap_or(&[])
    }

    /// When `user` first cited `entity`, if ever.
    pub fn activation_time(&self, entity: &str, user: UserIdx) -> Option<i64> {
        self.activations_of(entity).iter().find(|a| a.user == user).map(|a| a.at)
    }

    /// Total mention posts per entity.
    pub fn mention_count(&self, entity: &str) -> usize {
        self.posts_of(entity).len()
    }

    /// Entities ranked by mention count (descending, ties lexicographic),
    /// keeping only keys of at least `min_len` characters.
    pub fn top_entities(&self, n: usize, min_len: usize) -> Vec<String> {
        let mut ranked: Vec<(&String, usize)> = self
            .posts
            .iter()
            .filter(|(k, _)| k.chars().count() >= min_len)
            .map(|(k, v)| (k, v.len()))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.into_iter().take(n).map(|(k, _)| k.clone()).collect()
    }
}

/// Write mention records as NDJSON, ordered by `(created_at, post_id,
/// entity)`.
pub fn save_mentions(records: &mut [MentionRecord], w: &mut dyn Write) -> Result<(), MentionError> {
    records.sort_by(|a, b| {
        (a.created_at, &a.post_id, &a.entity).cmp(&(b.created_at, &b.post_id, &b.entity))
    });
    for rec in records {
        serde_json::to_writer(&mut *w, rec).map_err(|e| MentionError::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read mention records from NDJSON.
pub fn load_mentions(r: impl BufRead) -> Result<Vec<MentionRecord>, MentionError> {
    let mut out = Vec::new();
    for (lineno, line) in (1usize..).zip(r.lines()) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MentionRecord = serde_json::from_str(&line)
            .map_err(|e| MentionError::Format(format!("line {lineno}: {e}")))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ingest;

    fn rec(id: &str, parent: Option<&str>, author: &str, at: i64) -> String {
        let parent = parent.map(|p| format!("\"{p}\"")).unwrap_or("null".into());
        format!(
            r#"{{"id":"{id}","parent_id":{parent},"link_id":"T","author":"{author}","subreddit":"s","created_utc":{at},"body":"x"}}"#
        )
    }

    fn mention(entity: &str, post: &str, author: &str, at: i64) -> MentionRecord {
        MentionRecord {
            entity: entity.into(),
            post_id: post.into(),
            author: author.into(),
            created_at: at,
            surface: entity.into(),
        }
    }

    #[test]
    fn entity_keys_fold_case_and_whitespace() {
        assert_eq!(entity_key("Conor  McGregor"), "conor mcgregor");
        assert_eq!(entity_key(" PS1 "), "ps1");
    }

    #[test]
    fn index_orders_posts_and_takes_first_activation() {
        let lines = vec![
            rec("p1", None, "alice", 10),
            rec("p2", Some("p1"), "bob", 20),
            rec("p3", Some("p2"), "alice", 30),
        ];
        let (store, _) = ingest(lines.iter().map(|s| s.as_str()), None);
        let records = vec![
            mention("Zorg", "p3", "alice", 30),
            mention("zorg", "p1", "alice", 10),
            mention("Zorg", "p2", "bob", 20),
        ];
        let (index, n) = MentionIndex::from_records(&store, records).unwrap();
        assert_eq!(n, 3);
        assert_eq!(index.n_entities(), 1);
        let posts = index.posts_of("zorg");
        assert_eq!(posts.len(), 3);
        assert!(posts.windows(2).all(|w| w[0].at <= w[1].at));

        let acts = index.activations_of("zorg");
        assert_eq!(acts.len(), 2);
        assert_eq!(acts[0].at, 10); // alice's first, not her later mention
        let alice = store.user_idx("alice").unwrap();
        assert_eq!(index.activation_time("zorg", alice), Some(10));
    }

    #[test]
    fn duplicate_mentions_in_one_post_count_once() {
        let lines = vec![rec("p1", None, "alice", 5)];
        let (store, _) = ingest(lines.iter().map(|s| s.as_str()), None);
        let records = vec![
            mention("thing", "p1", "alice", 5),
            mention("Thing", "p1", "alice", 5),
        ];
        let (index, _) = MentionIndex::from_records(&store, records).unwrap();
        assert_eq!(index.mention_count("thing"), 1);
    }

    #[test]
    fn deleted_authors_do_not_activate() {
        let lines = vec![rec("p1", None, "[deleted]", 5), rec("p2", Some("p1"), "bob", 6)];
        let (store, _) = ingest(lines.iter().map(|s| s.as_str()), None);
        let records = vec![mention("e", "p1", "[deleted]", 5), mention("e", "p2", "bob", 6)];
        let (index, _) = MentionIndex::from_records(&store, records).unwrap();
        assert_eq!(index.posts_of("e").len(), 2); // both posts stay (cascades)
        assert_eq!(index.activations_of("e").len(), 1); // only bob activates
    }

    #[test]
    fn top_entities_rank_by_count_with_min_length() {
        let lines = vec![rec("p1", None, "a", 1), rec("p2", Some("p1"), "b", 2), rec("p3", Some("p2"), "c", 3)];
        let (store, _) = ingest(lines.iter().map(|s| s.as_str()), None);
        let records = vec![
            mention("big", "p1", "a", 1),
            mention("big", "p2", "b", 2),
            mention("sma", "p1", "a", 1),
            mention("x", "p1", "a", 1), // length 1: filtered out
            mention("x", "p2", "b", 2),
            mention("x", "p3", "c", 3),
        ];
        let (index, _) = MentionIndex::from_records(&store, records).unwrap();
        assert_eq!(index.top_entities(10, 2), vec!["big".to_owned(), "sma".to_owned()]);
        assert_eq!(index.top_entities(1, 2), vec!["big".to_owned()]);
    }

    #[test]
    fn mentions_file_roundtrip() {
        let mut records = vec![
            mention("b", "p2", "y", 7),
            mention("a", "p1", "x", 5),
        ];
        let mut buf = Vec::new();
        save_mentions(&mut records, &mut buf).unwrap();
        let loaded = load_mentions(&buf[..]).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].entity, "a"); // reordered by time
    }
}
