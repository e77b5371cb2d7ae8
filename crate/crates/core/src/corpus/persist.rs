//! Durable storage: an append-only record log plus a binary post-table
//! snapshot. The log is authoritative; the snapshot is a cache validated by
//! the log's content hash and rebuilt when stale or missing.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ioutil;

use super::{CorpusError, CorpusStore, Post};

const LOG_FILE: &str = "records.ndjson";
const INDEX_FILE: &str = "index.bin";
const SNAPSHOT_VERSION: u32 = 1;

/// Canonical on-disk record shape (Reddit-style field names).
#[derive(Serialize, Deserialize)]
struct LogRecord {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    parent_id: Option<String>,
    link_id: String,
    author: String,
    subreddit: String,
    created_utc: i64,
    body: String,
}

impl From<&Post> for LogRecord {
    fn from(p: &Post) -> Self {
        LogRecord {
            id: p.post_id.clone(),
            parent_id: p.parent_id.clone(),
            link_id: p.thread_id.clone(),
            author: p.author.clone(),
            subreddit: p.subreddit.clone(),
            created_utc: p.created_at,
            body: p.body.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    log_sha256: String,
    posts: Vec<Post>,
}

impl CorpusStore {
    /// Write the accepted records as canonical NDJSON, in ingestion order.
    pub fn export(&self, w: &mut dyn Write) -> Result<(), CorpusError> {
        for p in &self.posts {
            serde_json::to_writer(&mut *w, &LogRecord::from(p))
                .map_err(|e| CorpusError::Format(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Persist the store: record log + binary snapshot.
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        fs::create_dir_all(dir)?;
        let mut log = Vec::new();
        self.export(&mut log)?;
        let log_sha256 = ioutil::sha256_hex(&log);
        ioutil::write_atomic(&dir.join(LOG_FILE), |w| w.write_all(&log))?;
        let snap = Snapshot { version: SNAPSHOT_VERSION, log_sha256, posts: self.posts.clone() };
        let bytes = bincode::serialize(&snap).map_err(|e| CorpusError::Format(e.to_string()))?;
        ioutil::write_atomic(&dir.join(INDEX_FILE), |w| w.write_all(&bytes))?;
        Ok(())
    }

    /// Open a persisted store. Loads the binary snapshot when its hash
    /// matches the log, otherwise reparses the log.
    pub fn open(dir: &Path) -> Result<CorpusStore, CorpusError> {
        let log_path = dir.join(LOG_FILE);
        let log = fs::read(&log_path)?;
        let log_sha256 = ioutil::sha256_hex(&log);

        if let Ok(bytes) = fs::read(dir.join(INDEX_FILE)) {
            if let Ok(snap) = bincode::deserialize::<Snapshot>(&bytes) {
                if snap.version == SNAPSHOT_VERSION && snap.log_sha256 == log_sha256 {
                    return Ok(CorpusStore::from_posts(snap.posts));
                }
            }
        }

        let text = String::from_utf8(log).map_err(|e| CorpusError::Format(e.to_string()))?;
        let mut posts = Vec::new();
        for (lineno, line) in (1u64..).zip(text.lines()) {
            if line.trim().is_empty() {
                continue;
            }
            let rec = super::ingest::parse_record(line).map_err(|e| {
                CorpusError::Format(format!("record log line {lineno}: {e:?}"))
            })?;
            posts.push(rec);
        }
        Ok(CorpusStore::from_posts(posts))
    }
}
