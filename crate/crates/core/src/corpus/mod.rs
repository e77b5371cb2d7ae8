//! Post ingestion and the indexed corpus store.
//!
//! A corpus is built once from a stream of newline-delimited post records
//! (`ingest`), after which the store is immutable and safe to share across
//! any number of reader threads. All derived indexes (reply children,
//! per-author timelines, pairwise interactions, per-user subreddit sets)
//! are rebuilt deterministically from the post table, so a store is always
//! reconstructible from its append-only record log.

mod ingest;
mod persist;

pub use ingest::{ingest, ingest_lines, IngestReport};

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a post in the store's post table.
pub type PostIdx = u32;
/// Index of a tracked user.
pub type UserIdx = u32;
/// Index of a subreddit.
pub type SubIdx = u32;

/// Authors treated as untracked: their posts stay in the thread structure
/// but they carry no user identity.
pub const DELETED_AUTHORS: [&str; 3] = ["", "[deleted]", "[removed]"];

/// One comment or submission.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    /// Absent for thread roots.
    pub parent_id: Option<String>,
    pub thread_id: String,
    pub author: String,
    pub subreddit: String,
    /// Seconds since epoch, UTC.
    pub created_at: i64,
    pub body: String,
}

impl Post {
    /// Sort key used by every time-ordered index: ties on the timestamp are
    /// broken by lexicographic post id.
    pub fn time_key(&self) -> (i64, &str) {
        (self.created_at, &self.post_id)
    }
}

/// A directed reply interaction: `source` replied to a post by `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub source: String,
    pub target: String,
    pub at: i64,
    pub post_id: String,
}

/// Counts of structural anomalies found while indexing. Anomalous posts are
/// retained and flagged, never dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFlags {
    /// Replies whose parent id is not present in the corpus.
    pub missing_parents: u64,
    /// Replies created before their parent (clock skew in real dumps).
    pub time_anomalies: u64,
    /// Replies whose parent sits in a different thread; the link is not
    /// followed.
    pub cross_thread_parents: u64,
    /// Posts listing themselves as parent; the link is not followed.
    pub self_parents: u64,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus store format: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct InteractionRec {
    at: i64,
    other: UserIdx,
    post: PostIdx,
}

/// Immutable indexed corpus. Built single-writer, then read-only.
#[derive(Debug)]
pub struct CorpusStore {
    posts: Vec<Post>,
    id_index: HashMap<String, PostIdx>,

    parent: Vec<Option<PostIdx>>,
    children: Vec<Vec<PostIdx>>,
    roots: Vec<PostIdx>,

    users: Vec<String>,
    user_index: HashMap<String, UserIdx>,
    author_of: Vec<Option<UserIdx>>,
    author_posts: Vec<Vec<PostIdx>>,

    /// Per user: replies made, time-ordered.
    outgoing: Vec<Vec<InteractionRec>>,
    /// Per user: `(first contact time, other user)` sorted by time.
    contacts: Vec<Vec<(i64, UserIdx)>>,
    first_contact: HashMap<(UserIdx, UserIdx), i64>,

    subreddits: Vec<String>,
    subreddit_of: Vec<SubIdx>,
    /// Per user: `(subreddit, first post time)` sorted by subreddit index.
    user_subreddits: Vec<Vec<(SubIdx, i64)>>,

    flags: StructureFlags,
}

impl CorpusStore {
    /// Build the full index set from a post table. `posts` must already be
    /// deduplicated on `post_id`.
    pub fn from_posts(posts: Vec<Post>) -> Self {
        let mut id_index = HashMap::with_capacity(posts.len());
        for (i, p) in posts.iter().enumerate() {
            let prev = id_index.insert(p.post_id.clone(), i as PostIdx);
            debug_assert!(prev.is_none(), "duplicate post_id {}", p.post_id);
        }

        let mut flags = StructureFlags::default();

        // Reply structure.
        let mut parent: Vec<Option<PostIdx>> = vec![None; posts.len()];
        let mut children: Vec<Vec<PostIdx>> = vec![Vec::new(); posts.len()];
        for (i, p) in posts.iter().enumerate() {
            let Some(pid) = p.parent_id.as_deref() else { continue };
            if pid == p.post_id {
                flags.self_parents += 1;
                continue;
            }
            match id_index.get(pid) {
                None => flags.missing_parents += 1,
                Some(&pi) => {
                    if posts[pi as usize].thread_id != p.thread_id {
                        flags.cross_thread_parents += 1;
                        continue;
                    }
                    if p.created_at < posts[pi as usize].created_at {
                        flags.time_anomalies += 1;
                    }
                    parent[i] = Some(pi);
                    children[pi as usize].push(i as PostIdx);
                }
            }
        }
        let time_key = |i: &PostIdx| {
            let p = &posts[*i as usize];
            (p.created_at, p.post_id.clone())
        };
        for ch in &mut children {
            ch.sort_by_key(time_key);
        }
        let roots: Vec<PostIdx> = (0..posts.len() as PostIdx).filter(|&i| parent[i as usize].is_none()).collect();

        // Tracked users, in first-appearance order.
        let mut users: Vec<String> = Vec::new();
        let mut user_index: HashMap<String, UserIdx> = HashMap::new();
        let mut author_of: Vec<Option<UserIdx>> = Vec::with_capacity(posts.len());
        for p in &posts {
            if DELETED_AUTHORS.contains(&p.author.as_str()) {
                author_of.push(None);
                continue;
            }
            let u = *user_index.entry(p.author.clone()).or_insert_with(|| {
                users.push(p.author.clone());
                (users.len() - 1) as UserIdx
            });
            author_of.push(Some(u));
        }

        let mut author_posts: Vec<Vec<PostIdx>> = vec![Vec::new(); users.len()];
        for (i, a) in author_of.iter().enumerate() {
            if let Some(u) = a {
                author_posts[*u as usize].push(i as PostIdx);
            }
        }
        for ps in &mut author_posts {
            ps.sort_by_key(time_key);
        }

        // Interactions: replier is the source, the parent's author the target.
        let mut outgoing: Vec<Vec<InteractionRec>> = vec![Vec::new(); users.len()];
        let mut first_contact: HashMap<(UserIdx, UserIdx), i64> = HashMap::new();
        for (i, p) in posts.iter().enumerate() {
            let Some(pi) = parent[i] else { continue };
            let (Some(src), Some(tgt)) = (author_of[i], author_of[pi as usize]) else { continue };
            if src == tgt {
                continue;
            }
            let at = p.created_at;
            outgoing[src as usize].push(InteractionRec { at, other: tgt, post: i as PostIdx });
            let key = (src.min(tgt), src.max(tgt));
            first_contact
                .entry(key)
                .and_modify(|t| *t = (*t).min(at))
                .or_insert(at);
        }
        let rec_key = |r: &InteractionRec| {
            let p = &posts[r.post as usize];
            (r.at, p.post_id.clone())
        };
        for v in &mut outgoing {
            v.sort_by_key(rec_key);
        }
        let mut contacts: Vec<Vec<(i64, UserIdx)>> = vec![Vec::new(); users.len()];
        for (&(a, b), &t) in &first_contact {
            contacts[a as usize].push((t, b));
            contacts[b as usize].push((t, a));
        }
        for c in &mut contacts {
            c.sort_unstable();
        }

        // Subreddits.
        let mut subreddits: Vec<String> = Vec::new();
        let mut sub_index: HashMap<String, SubIdx> = HashMap::new();
        let mut subreddit_of: Vec<SubIdx> = Vec::with_capacity(posts.len());
        for p in &posts {
            let s = *sub_index.entry(p.subreddit.clone()).or_insert_with(|| {
                subreddits.push(p.subreddit.clone());
                (subreddits.len() - 1) as SubIdx
            });
            subreddit_of.push(s);
        }
        let mut user_subreddits: Vec<Vec<(SubIdx, i64)>> = vec![Vec::new(); users.len()];
        {
            let mut first: HashMap<(UserIdx, SubIdx), i64> = HashMap::new();
            for (i, p) in posts.iter().enumerate() {
                if let Some(u) = author_of[i] {
                    first
                        .entry((u, subreddit_of[i]))
                        .and_modify(|t| *t = (*t).min(p.created_at))
                        .or_insert(p.created_at);
                }
            }
            for (&(u, s), &t) in &first {
                user_subreddits[u as usize].push((s, t));
            }
            for v in &mut user_subreddits {
                v.sort_unstable();
            }
        }

        CorpusStore {
            posts,
            id_index,
            parent,
            children,
            roots,
            users,
            user_index,
            author_of,
            author_posts,
            outgoing,
            contacts,
            first_contact,
            subreddits,
            subreddit_of,
            user_subreddits,
            flags,
        }
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn post(&self, idx: PostIdx) -> &Post {
        &self.posts[idx as usize]
    }

    pub fn post_idx(&self, post_id: &str) -> Option<PostIdx> {
        self.id_index.get(post_id).copied()
    }

    pub fn parent_of(&self, idx: PostIdx) -> Option<PostIdx> {
        self.parent[idx as usize]
    }

    pub fn children_of(&self, idx: PostIdx) -> &[PostIdx] {
        &self.children[idx as usize]
    }

    pub fn roots(&self) -> &[PostIdx] {
        &self.roots
    }

    pub fn flags(&self) -> &StructureFlags {
        &self.flags
    }

    /// Tracked users (deleted/empty authors excluded), in first-post order.
    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn user_idx(&self, user: &str) -> Option<UserIdx> {
        self.user_index.get(user).copied()
    }

    pub fn user_name(&self, u: UserIdx) -> &str {
        &self.users[u as usize]
    }

    /// Author of a post, `None` for untracked authors.
    pub fn author_of(&self, idx: PostIdx) -> Option<UserIdx> {
        self.author_of[idx as usize]
    }

    /// Time-ordered posts by a user.
    pub fn author_posts(&self, u: UserIdx) -> &[PostIdx] {
        &self.author_posts[u as usize]
    }

    pub fn subreddits(&self) -> &[String] {
        &self.subreddits
    }

    pub fn subreddit_of(&self, idx: PostIdx) -> SubIdx {
        self.subreddit_of[idx as usize]
    }

    /// Subreddits a user has posted in, with first-post timestamps, sorted
    /// by subreddit index.
    pub fn user_subreddits(&self, u: UserIdx) -> &[(SubIdx, i64)] {
        &self.user_subreddits[u as usize]
    }

    /// Earliest interaction between two users in either direction.
    pub fn first_contact(&self, a: UserIdx, b: UserIdx) -> Option<i64> {
        self.first_contact.get(&(a.min(b), a.max(b))).copied()
    }

    /// Users who interacted with `u` (either direction) strictly before `t`.
    pub fn neighbors_before_idx(&self, u: UserIdx, t: i64) -> Vec<UserIdx> {
        let list = &self.contacts[u as usize];
        let mut out: Vec<UserIdx> =
            list.iter().take_while(|(ft, _)| *ft < t).map(|&(_, v)| v).collect();
        out.sort_unstable();
        out
    }

    /// Users who interacted with `user` (either direction) strictly before
    /// `t`. Unknown users have no neighbours.
    pub fn neighbors_before(&self, user: &str, t: i64) -> BTreeSet<&str> {
        match self.user_idx(user) {
            None => BTreeSet::new(),
            Some(u) => self
                .neighbors_before_idx(u, t)
                .into_iter()
                .map(|v| self.user_name(v))
                .collect(),
        }
    }

    /// `(replies by u to v, replies by u to anyone)`, optionally restricted
    /// to `[t0, t1)`. An empty or inverted window yields `(0, 0)`.
    pub fn interactions_count(&self, u: UserIdx, v: UserIdx, window: Option<(i64, i64)>) -> (u64, u64) {
        if let Some((t0, t1)) = window {
            if t1 <= t0 {
                return (0, 0);
            }
        }
        let in_window = |at: i64| match window {
            None => true,
            Some((t0, t1)) => at >= t0 && at < t1,
        };
        let mut to_v = 0;
        let mut total = 0;
        for rec in &self.outgoing[u as usize] {
            if in_window(rec.at) {
                total += 1;
                if rec.other == v {
                    to_v += 1;
                }
            }
        }
        (to_v, total)
    }

    /// String-keyed variant of [`Self::interactions_count`]; unknown users
    /// have made no replies.
    pub fn interactions_count_named(
        &self,
        u: &str,
        v: &str,
        window: Option<(i64, i64)>,
    ) -> (u64, u64) {
        let Some(ui) = self.user_idx(u) else { return (0, 0) };
        match self.user_idx(v) {
            Some(vi) => self.interactions_count(ui, vi, window),
            None => {
                let (_, total) = self.interactions_count(ui, ui, window);
                (0, total)
            }
        }
    }

    /// All reply interactions, time-ordered.
    pub fn interactions(&self) -> Vec<Interaction> {
        let mut out = Vec::new();
        for (u, recs) in self.outgoing.iter().enumerate() {
            for r in recs {
                out.push(Interaction {
                    source: self.users[u].clone(),
                    target: self.users[r.other as usize].clone(),
                    at: r.at,
                    post_id: self.posts[r.post as usize].post_id.clone(),
                });
            }
        }
        out.sort_by(|a, b| (a.at, &a.post_id).cmp(&(b.at, &b.post_id)));
        out
    }

    /// Distinct subreddits `u` posted in within `[t0, t1)`, by scanning the
    /// author timeline.
    pub fn user_subreddits_window(&self, u: UserIdx, t0: i64, t1: i64) -> Vec<SubIdx> {
        let mut subs: Vec<SubIdx> = self.author_posts[u as usize]
            .iter()
            .map(|&p| (self.posts[p as usize].created_at, p))
            .filter(|&(at, _)| at >= t0 && at < t1)
            .map(|(_, p)| self.subreddit_of[p as usize])
            .collect();
        subs.sort_unstable();
        subs.dedup();
        subs
    }

    /// Walk the parent chain from a post to its thread root. Returns `None`
    /// if a cycle is detected (corrupt data).
    pub fn root_of(&self, idx: PostIdx) -> Option<PostIdx> {
        let mut cur = idx;
        let mut steps = 0usize;
        while let Some(p) = self.parent[cur as usize] {
            cur = p;
            steps += 1;
            if steps > self.posts.len() {
                return None;
            }
        }
        Some(cur)
    }
}

#[cfg(test)]
mod tests;
