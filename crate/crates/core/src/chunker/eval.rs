//! Chunk extraction from label sequences and exact-boundary chunk scoring.

use crate::scalar::{real, Real};

use super::{ChunkerError, Label};

/// An extracted mention: tokens `[start, end)` joined by single spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Maximal `B I*` runs become mentions; an `I` opening a chunk (after `O`
/// or at the start) also begins one, matching chunk-evaluation convention.
pub fn chunk(labels: &[Label], tokens: &[String]) -> Vec<Mention> {
    debug_assert_eq!(labels.len(), tokens.len());
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &l) in labels.iter().enumerate() {
        let opens = l == Label::B || (l == Label::I && start.is_none());
        if opens {
            if let Some(s) = start.take() {
                out.push(make_mention(tokens, s, i));
            }
            start = Some(i);
        } else if l == Label::O {
            if let Some(s) = start.take() {
                out.push(make_mention(tokens, s, i));
            }
        }
    }
    if let Some(s) = start {
        out.push(make_mention(tokens, s, labels.len()));
    }
    out
}

fn make_mention(tokens: &[String], start: usize, end: usize) -> Mention {
    Mention { text: tokens[start..end].join(" "), start, end }
}

/// Chunk spans `(start, end)` of a label sequence, for boundary matching.
fn chunk_spans(labels: &[Label]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &l) in labels.iter().enumerate() {
        let opens = l == Label::B || (l == Label::I && start.is_none());
        if opens {
            if let Some(s) = start.take() {
                out.push((s, i));
            }
            start = Some(i);
        } else if l == Label::O {
            if let Some(s) = start.take() {
                out.push((s, i));
            }
        }
    }
    if let Some(s) = start {
        out.push((s, labels.len()));
    }
    out
}

/// Precision/recall/F over exact-boundary chunk matches.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkScore<T: Real> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub f_beta: T,
    pub beta: T,
    pub gold_chunks: u64,
    pub predicted_chunks: u64,
    pub correct_chunks: u64,
}

/// `(1 + beta^2) * P * R / (beta^2 * P + R)`, with `0/0 = 0`.
pub fn f_beta_score<T: Real>(precision: T, recall: T, beta: T) -> T {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == T::zero() {
        T::zero()
    } else {
        (T::one() + b2) * precision * recall / denom
    }
}

/// Score predicted against gold label sequences (aligned sentence lists)
/// by exact chunk-boundary match.
pub fn evaluate_chunks<T: Real>(
    gold: &[Vec<Label>],
    predicted: &[Vec<Label>],
    beta: T,
) -> Result<ChunkScore<T>, ChunkerError> {
    if gold.len() != predicted.len() {
        return Err(ChunkerError::LengthMismatch { expected: gold.len(), got: predicted.len() });
    }
    let mut gold_chunks = 0u64;
    let mut predicted_chunks = 0u64;
    let mut correct_chunks = 0u64;
    for (g, p) in gold.iter().zip(predicted) {
        if g.len() != p.len() {
            return Err(ChunkerError::LengthMismatch { expected: g.len(), got: p.len() });
        }
        let gs = chunk_spans(g);
        let ps = chunk_spans(p);
        gold_chunks += gs.len() as u64;
        predicted_chunks += ps.len() as u64;
        // Both lists are sorted by start; count exact matches.
        let mut i = 0;
        for span in &ps {
            while i < gs.len() && gs[i] < *span {
                i += 1;
            }
            if i < gs.len() && gs[i] == *span {
                correct_chunks += 1;
                i += 1;
            }
        }
    }

    let ratio = |num: u64, den: u64| -> T {
        if den == 0 {
            T::zero()
        } else {
            T::from_u64(num).expect("count fits scalar") / T::from_u64(den).expect("count fits scalar")
        }
    };
    let precision = ratio(correct_chunks, predicted_chunks);
    let recall = ratio(correct_chunks, gold_chunks);
    Ok(ChunkScore {
        precision,
        recall,
        f1: f_beta_score(precision, recall, T::one()),
        f_beta: f_beta_score(precision, recall, beta),
        beta,
        gold_chunks,
        predicted_chunks,
        correct_chunks,
    })
}

/// Convenience for score tables reported in percent.
pub fn f_beta_percent<T: Real>(precision_pct: T, recall_pct: T, beta: T) -> T {
    f_beta_score(precision_pct / real(100.0), recall_pct / real(100.0), beta) * real(100.0)
}
