//! Training entry point, BIO repair, and column-format corpus loading.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use log::warn;

use crate::brown::ClusterHierarchy;
use crate::scalar::{real, Real};

use super::crf::{Encoded, SequenceModel};
use super::features::extract_features;
use super::optimize::{minimize, OptimizeOptions, OptimizeReport};
use super::{ChunkerError, Label, N_LABELS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub tokens: Vec<String>,
    pub labels: Vec<Label>,
}

#[derive(Debug, Clone)]
pub struct TrainOptions<T: Real> {
    /// L2 penalty strength.
    pub c2: T,
    pub max_iters: usize,
    pub grad_tol: T,
    /// Accepted for interface stability; training itself is deterministic.
    pub seed: u64,
}

impl<T: Real> Default for TrainOptions<T> {
    fn default() -> Self {
        TrainOptions { c2: real(0.1), max_iters: 200, grad_tol: real(1e-4), seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport<T: Real> {
    pub optimize: OptimizeReport<T>,
    pub n_features: usize,
    pub n_sentences: usize,
    /// Ill-formed `I` labels repaired to `B` before training.
    pub repaired_labels: u64,
}

/// Train a model on labelled sentences. Ill-formed BIO input (an `I`
/// opening a chunk) is repaired to `B` and counted, not rejected.
pub fn train<T: Real>(
    sentences: &[LabeledSentence],
    hierarchy: &ClusterHierarchy,
    opts: &TrainOptions<T>,
) -> Result<(SequenceModel<T>, TrainReport<T>), ChunkerError> {
    if sentences.is_empty() {
        return Err(ChunkerError::EmptyTrainingSet);
    }
    for s in sentences {
        if s.tokens.len() != s.labels.len() {
            return Err(ChunkerError::LengthMismatch {
                expected: s.tokens.len(),
                got: s.labels.len(),
            });
        }
        if s.tokens.is_empty() {
            return Err(ChunkerError::Format("empty sentence in training set".into()));
        }
    }

    let mut repaired = 0u64;
    let mut feature_ids: HashMap<String, u32> = HashMap::new();
    let mut encoded: Vec<Encoded> = Vec::with_capacity(sentences.len());
    for sent in sentences {
        let labels = repair_bio(&sent.labels, &mut repaired);
        let feats = (0..sent.tokens.len())
            .map(|pos| {
                extract_features(&sent.tokens, pos, hierarchy)
                    .into_iter()
                    .map(|name| {
                        let next = feature_ids.len() as u32;
                        *feature_ids.entry(name).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        encoded.push(Encoded { feats, labels: labels.iter().map(|l| l.idx() as u8).collect() });
    }
    if repaired > 0 {
        warn!("repaired {repaired} ill-formed I labels to B");
    }

    let n_params = feature_ids.len() * N_LABELS + N_LABELS * N_LABELS;
    let objective = |w: &[T]| super::crf::objective(w, opts.c2, &encoded);
    let optimize_opts =
        OptimizeOptions { max_iters: opts.max_iters, grad_tol: opts.grad_tol, memory: 10 };
    let (weights, report) = minimize(objective, vec![T::zero(); n_params], &optimize_opts)?;

    let model = SequenceModel::from_parts(feature_ids, weights, opts.c2);
    let n_features = model.n_features();
    Ok((
        model,
        TrainReport {
            optimize: report,
            n_features,
            n_sentences: sentences.len(),
            repaired_labels: repaired,
        },
    ))
}

/// An `I` that opens a chunk (sentence start or after `O`) becomes `B`.
fn repair_bio(labels: &[Label], repaired: &mut u64) -> Vec<Label> {
    let mut out = Vec::with_capacity(labels.len());
    for (i, &l) in labels.iter().enumerate() {
        let fixed = if l == Label::I && (i == 0 || labels[i - 1] == Label::O) {
            *repaired += 1;
            Label::B
        } else {
            l
        };
        out.push(fixed);
    }
    out
}

/// Load a column-format corpus: one `token ... tag` row per line, the tag
/// in the last column, blank lines separating sentences. Class suffixes
/// (`B-PER`) are collapsed to bare BIO.
pub fn load_conll(r: impl BufRead) -> Result<Vec<LabeledSentence>, ChunkerError> {
    let mut out = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    for (lineno, line) in (1usize..).zip(r.lines()) {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if !tokens.is_empty() {
                out.push(LabeledSentence {
                    tokens: std::mem::take(&mut tokens),
                    labels: std::mem::take(&mut labels),
                });
            }
            continue;
        }
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        if cols.len() < 2 {
            return Err(ChunkerError::Format(format!(
                "line {lineno}: expected at least two columns (token, tag)"
            )));
        }
        tokens.push(cols[0].to_owned());
        labels.push(Label::parse(cols[cols.len() - 1])?);
    }
    if !tokens.is_empty() {
        out.push(LabeledSentence { tokens, labels });
    }
    Ok(out)
}

pub fn load_conll_file(path: &Path) -> Result<Vec<LabeledSentence>, ChunkerError> {
    load_conll(BufReader::new(File::open(path)?))
}

/// Training-mixture manifest: tab-separated `path<TAB>token_budget` lines
/// (`#` comments allowed). Each corpus contributes whole sentences until
/// its token budget is reached; paths resolve relative to the manifest.
pub fn load_mixture(manifest: &Path) -> Result<Vec<LabeledSentence>, ChunkerError> {
    let base = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let text = std::fs::read_to_string(manifest)?;
    let mut out = Vec::new();
    for (lineno, line) in (1usize..).zip(text.lines()) {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(path), Some(budget)) = (parts.next(), parts.next()) else {
            return Err(ChunkerError::Format(format!(
                "manifest line {lineno}: expected path<TAB>token_budget"
            )));
        };
        let budget: usize = budget.trim().parse().map_err(|_| {
            ChunkerError::Format(format!("manifest line {lineno}: bad token budget"))
        })?;
        let mut full: PathBuf = PathBuf::from(path);
        if full.is_relative() {
            full = base.join(full);
        }
        let corpus = load_conll_file(&full)?;
        let mut taken = 0usize;
        for sent in corpus {
            if taken >= budget {
                break;
            }
            taken += sent.tokens.len();
            out.push(sent);
        }
    }
    Ok(out)
}
