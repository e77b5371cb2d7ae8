//! Per-token emission feature templates.
//!
//! Templates: lowercased word; 2/3-character prefix and suffix; previous
//! and next lowercased words (with sentence-boundary sentinels); uppercase,
//! titlecase, and digit shape flags for the current, previous, and next
//! words; the prior and next token bigrams; and the full set of cluster
//! bitstring prefixes for the current word (a reserved unknown marker when
//! the word has no cluster).

use crate::brown::{path_features, ClusterHierarchy};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNKNOWN_CLUSTER: &str = "<unk>";

fn is_upper(word: &str) -> bool {
    let mut saw_alpha = false;
    for c in word.chars() {
        if c.is_alphabetic() {
            saw_alpha = true;
            if !c.is_uppercase() {
                return false;
            }
        }
    }
    saw_alpha
}

fn is_title(word: &str) -> bool {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) if c.is_uppercase() => {}
        _ => return false,
    }
    !is_upper(word)
}

fn is_digits(word: &str) -> bool {
    !word.is_empty() && word.chars().all(|c| c.is_ascii_digit())
}

fn prefix(word: &str, n: usize) -> String {
    word.chars().take(n).collect()
}

fn suffix(word: &str, n: usize) -> String {
    let count = word.chars().count();
    word.chars().skip(count.saturating_sub(n)).collect()
}

fn shape_flags(out: &mut Vec<String>, role: &str, word: &str) {
    if is_upper(word) {
        out.push(format!("{role}:upper"));
    }
    if is_title(word) {
        out.push(format!("{role}:title"));
    }
    if is_digits(word) {
        out.push(format!("{role}:digit"));
    }
}

/// Emission features for `tokens[pos]`. Cluster lookups are by lowercased
/// surface form, matching how the pipeline induces clusters.
pub fn extract_features(tokens: &[String], pos: usize, hierarchy: &ClusterHierarchy) -> Vec<String> {
    let word = tokens[pos].as_str();
    let lower = word.to_lowercase();
    let prev = pos.checked_sub(1).map(|i| tokens[i].as_str());
    let next = tokens.get(pos + 1).map(String::as_str);
    let prev_lower = prev.map(str::to_lowercase).unwrap_or_else(|| BOS.to_owned());
    let next_lower = next.map(str::to_lowercase).unwrap_or_else(|| EOS.to_owned());

    let mut out = Vec::with_capacity(24);
    out.push(format!("w={lower}"));
    out.push(format!("p2={}", prefix(&lower, 2)));
    out.push(format!("p3={}", prefix(&lower, 3)));
    out.push(format!("s2={}", suffix(&lower, 2)));
    out.push(format!("s3={}", suffix(&lower, 3)));
    out.push(format!("prev={prev_lower}"));
    out.push(format!("next={next_lower}"));

    shape_flags(&mut out, "cur", word);
    if let Some(p) = prev {
        shape_flags(&mut out, "prev", p);
    }
    if let Some(n) = next {
        shape_flags(&mut out, "next", n);
    }

    out.push(format!("bg-1={prev_lower}|{lower}"));
    out.push(format!("bg+1={lower}|{next_lower}"));

    match hierarchy.path(&lower) {
        Some(path) => {
            for p in path_features(path) {
                out.push(format!("br={p}"));
            }
        }
        None => out.push(format!("br={UNKNOWN_CLUSTER}")),
    }
    out
}

#[cfg(test)]
pub(super) fn empty_hierarchy() -> ClusterHierarchy {
    ClusterHierarchy::load(&b""[..]).expect("empty cluster file")
}
