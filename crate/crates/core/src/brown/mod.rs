//! Hierarchical word clustering over adjacent-token bigrams, with an
//! active-set bound on the greedy search, plus bitstring feature
//! extraction.
//!
//! Clustering greedily merges the pair of classes losing the least average
//! mutual information, producing a binary merge tree. Each terminal cluster
//! is addressed by the bitstring of merge directions from the root; word
//! features are either every prefix of that bitstring (non-lossy) or the
//! prefixes at fixed depths (shearing).

mod induce;
mod stats;

pub use induce::{induce_clusters, induce_clusters_diagnostic, InductionDiagnostics};
pub use stats::ClusterCorpusStats;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BrownError {
    #[error("inconsistent statistics: joint mass without marginal mass at pair ({0}, {1})")]
    InconsistentStats(usize, usize),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("cluster file format: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Word-to-bitstring mapping plus the merge history that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterHierarchy {
    /// Word to merge-path bitstring.
    paths: BTreeMap<String, String>,
    /// Word types in initialization order (frequency descending, ties
    /// lexicographic); a word's index is its initial class id.
    vocab: Vec<(String, u64)>,
    /// `(older id, newer id)` per merge; the merged class gets id
    /// `vocab.len() + merge_index`.
    merges: Vec<(u32, u32)>,
    /// Active-set size used for induction.
    pub active_size: usize,
    /// Terminal cluster count used for induction.
    pub classes: usize,
    /// Average mutual information after each merge (diagnostics).
    pub merge_ami: Vec<f64>,
    /// Average mutual information before any merge.
    pub initial_ami: f64,
}

impl ClusterHierarchy {
    pub fn path(&self, word: &str) -> Option<&str> {
        self.paths.get(word).map(String::as_str)
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, &str)> {
        self.paths.iter().map(|(w, p)| (w.as_str(), p.as_str()))
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    /// Recompute every word's bitstring from the stored merge list alone.
    /// Equality with [`Self::path`] checks that the recorded history
    /// reproduces the hierarchy.
    pub fn replay_bitstrings(&self) -> BTreeMap<String, String> {
        let n = self.vocab.len();
        if n == 0 {
            return BTreeMap::new();
        }
        if self.merges.is_empty() {
            // No history (single word type, or loaded from a cluster file).
            return self.paths.clone();
        }
        let terminal_count = self.classes.min(n).max(1);
        let pre_merges = n - terminal_count;
        debug_assert_eq!(self.merges.len(), n.saturating_sub(1));

        // Map every initial class to its terminal class by replaying the
        // pre-terminal merges.
        let total_ids = n + self.merges.len();
        let mut forward: Vec<u32> = (0..total_ids as u32).collect();
        let resolve = |forward: &[u32], mut id: u32| -> u32 {
            while forward[id as usize] != id {
                id = forward[id as usize];
            }
            id
        };
        for (idx, &(a, b)) in self.merges.iter().take(pre_merges).enumerate() {
            let m = (n + idx) as u32;
            forward[a as usize] = m;
            forward[b as usize] = m;
        }

        let bits = bits_from_merges(n, &self.merges, pre_merges);
        let mut out = BTreeMap::new();
        for (rank, (word, _)) in self.vocab.iter().enumerate() {
            let terminal = resolve(&forward, rank as u32);
            let path = bits.get(&terminal).cloned().unwrap_or_default();
            out.insert(word.clone(), path);
        }
        out
    }

    /// Write the conventional cluster layout: `bitstring<TAB>word<TAB>freq`,
    /// sorted by bitstring, then frequency descending, then word.
    pub fn save(&self, w: &mut dyn Write) -> Result<(), BrownError> {
        let mut rows: Vec<(&str, &str, u64)> = self
            .vocab
            .iter()
            .map(|(word, freq)| (self.paths.get(word).map(String::as_str).unwrap_or(""), word.as_str(), *freq))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(b.0).then(b.2.cmp(&a.2)).then(a.1.cmp(b.1)));
        for (path, word, freq) in rows {
            writeln!(w, "{path}\t{word}\t{freq}")?;
        }
        Ok(())
    }

    /// Load a cluster file; merge history is not part of the file, so the
    /// result supports feature lookup only.
    pub fn load(r: impl BufRead) -> Result<Self, BrownError> {
        let mut paths = BTreeMap::new();
        let mut vocab = Vec::new();
        for (lineno, line) in (1usize..).zip(r.lines()) {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(path), Some(word), Some(freq)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(BrownError::Format(format!("line {lineno}: expected 3 tab-separated fields")));
            };
            if !path.chars().all(|c| c == '0' || c == '1') {
                return Err(BrownError::Format(format!("line {lineno}: bitstring must be binary")));
            }
            let freq: u64 = freq
                .parse()
                .map_err(|_| BrownError::Format(format!("line {lineno}: bad frequency")))?;
            paths.insert(word.to_owned(), path.to_owned());
            vocab.push((word.to_owned(), freq));
        }
        vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let n = vocab.len();
        Ok(ClusterHierarchy {
            paths,
            vocab,
            merges: Vec::new(),
            active_size: 0,
            classes: n,
            merge_ami: Vec::new(),
            initial_ami: 0.0,
        })
    }
}

/// Bitstrings for the classes touched by the final merges (those past
/// `pre_merges`), walking the tree top-down: the older branch extends its
/// parent's path with '0', the newer with '1'. Empty when there are no
/// final merges (single terminal cluster).
pub(crate) fn bits_from_merges(
    n_initial: usize,
    merges: &[(u32, u32)],
    pre_merges: usize,
) -> std::collections::HashMap<u32, String> {
    let mut bits = std::collections::HashMap::new();
    if merges.len() <= pre_merges {
        return bits;
    }
    bits.insert((n_initial + merges.len() - 1) as u32, String::new());
    for (idx, &(a, b)) in merges.iter().enumerate().skip(pre_merges).rev() {
        let m = (n_initial + idx) as u32;
        let parent = bits.get(&m).cloned().unwrap_or_default();
        bits.insert(a, format!("{parent}0"));
        bits.insert(b, format!("{parent}1"));
    }
    bits
}

/// Every prefix of a bitstring, shortest first. The non-lossy word
/// representation: `"1100101"` yields `1, 11, 110, 1100, 11001, 110010,
/// 1100101`.
pub fn path_features(bitstring: &str) -> Vec<String> {
    (1..=bitstring.len()).map(|d| bitstring[..d].to_owned()).collect()
}

/// Prefixes at fixed depths, duplicates collapsed: `"1100101"` at depths
/// `4, 6, 10, 20` yields `1100, 110010, 1100101`.
pub fn sheared_features(bitstring: &str, depths: &[usize]) -> Vec<String> {
    debug_assert!(depths.windows(2).all(|w| w[0] < w[1]), "depths must be strictly increasing");
    debug_assert!(depths.iter().all(|&d| d > 0), "depths must be positive");
    let mut out: Vec<String> = Vec::new();
    for &d in depths {
        if bitstring.is_empty() {
            break;
        }
        let prefix = &bitstring[..d.min(bitstring.len())];
        if out.last().map(String::as_str) != Some(prefix) {
            out.push(prefix.to_owned());
        }
    }
    out
}
