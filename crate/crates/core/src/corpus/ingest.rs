//! Record parsing and corpus ingestion.
//!
//! Input is newline-delimited JSON with either the canonical field names
//! (`post_id`, `parent_id`, `thread_id`, `author`, `subreddit`,
//! `created_at`, `body`) or the Reddit-dump aliases (`id`, `parent_id`
//! with `t1_`/`t3_` prefixes, `link_id`, `created_utc`). Malformed records
//! are counted and skipped; duplicate post ids keep the first record.

use std::collections::HashSet;
use std::io;

use log::debug;
use serde_json::Value;

use super::{CorpusStore, Post};

/// Outcome counters for one ingestion run.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct IngestReport {
    pub accepted: u64,
    pub rejected_malformed: u64,
    pub rejected_duplicate: u64,
    /// Well-formed records excluded by the subreddit filter.
    pub filtered_out: u64,
    /// 1-based line numbers of rejected records (malformed or duplicate).
    pub rejected_lines: Vec<u64>,
}

impl IngestReport {
    pub fn rejected(&self) -> u64 {
        self.rejected_malformed + self.rejected_duplicate
    }
}

/// Why a single record could not be parsed.
#[derive(Debug, PartialEq, Eq)]
pub enum RecordError {
    Json,
    MissingField(&'static str),
    BadTimestamp,
    MissingThread,
}

fn get_str<'v>(v: &'v Value, names: &[&str]) -> Option<&'v str> {
    names.iter().find_map(|n| v.get(*n).and_then(Value::as_str))
}

fn strip_kind(id: &str) -> &str {
    id.strip_prefix("t1_").or_else(|| id.strip_prefix("t3_")).unwrap_or(id)
}

fn get_timestamp(v: &Value) -> Option<i64> {
    let t = v.get("created_at").or_else(|| v.get("created_utc"))?;
    match t {
        Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        Value::String(s) => s.parse::<i64>().ok().or_else(|| s.parse::<f64>().ok().map(|f| f as i64)),
        _ => None,
    }
}

/// Parse one record line into a [`Post`].
pub fn parse_record(line: &str) -> Result<Post, RecordError> {
    let v: Value = serde_json::from_str(line).map_err(|_| RecordError::Json)?;
    if !v.is_object() {
        return Err(RecordError::Json);
    }

    let post_id = get_str(&v, &["post_id", "id"])
        .filter(|s| !s.is_empty())
        .ok_or(RecordError::MissingField("id"))?
        .to_owned();
    let author = get_str(&v, &["author"]).ok_or(RecordError::MissingField("author"))?.to_owned();
    let subreddit = get_str(&v, &["subreddit"])
        .filter(|s| !s.is_empty())
        .ok_or(RecordError::MissingField("subreddit"))?
        .to_owned();
    let body = get_str(&v, &["body"]).ok_or(RecordError::MissingField("body"))?.to_owned();
    let created_at = get_timestamp(&v).ok_or(RecordError::BadTimestamp)?;

    let parent_id = v
        .get("parent_id")
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .map(|s| strip_kind(s).to_owned());
    let thread_id = match get_str(&v, &["thread_id", "link_id"]).filter(|s| !s.is_empty()) {
        Some(t) => strip_kind(t).to_owned(),
        // A root post with no thread field starts its own thread; a reply
        // without one cannot be placed.
        None if parent_id.is_none() => post_id.clone(),
        None => return Err(RecordError::MissingThread),
    };

    Ok(Post { post_id, parent_id, thread_id, author, subreddit, created_at, body })
}

/// Ingest record lines, keeping only posts whose subreddit is in `filter`
/// (compared case-insensitively; `None` keeps everything).
pub fn ingest_lines<I>(lines: I, filter: Option<&HashSet<String>>) -> io::Result<(CorpusStore, IngestReport)>
where
    I: IntoIterator<Item = io::Result<String>>,
{
    let filter: Option<HashSet<String>> =
        filter.map(|f| f.iter().map(|s| s.to_lowercase()).collect());
    let mut report = IngestReport::default();
    let mut posts: Vec<Post> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();

    for (lineno, line) in (1u64..).zip(lines) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line) {
            Err(err) => {
                debug!("line {lineno}: rejected record: {err:?}");
                report.rejected_malformed += 1;
                report.rejected_lines.push(lineno);
            }
            Ok(post) => {
                if let Some(f) = &filter {
                    if !f.contains(&post.subreddit.to_lowercase()) {
                        report.filtered_out += 1;
                        continue;
                    }
                }
                if !seen.insert(post.post_id.clone()) {
                    debug!("line {lineno}: duplicate post_id {}", post.post_id);
                    report.rejected_duplicate += 1;
                    report.rejected_lines.push(lineno);
                    continue;
                }
                report.accepted += 1;
                posts.push(post);
            }
        }
    }

    Ok((CorpusStore::from_posts(posts), report))
}

/// Ingest an in-memory record stream.
pub fn ingest<'a, I>(lines: I, filter: Option<&HashSet<String>>) -> (CorpusStore, IngestReport)
where
    I: IntoIterator<Item = &'a str>,
{
    ingest_lines(lines.into_iter().map(|l| Ok(l.to_owned())), filter)
        .expect("in-memory ingestion cannot fail on i/o")
}
