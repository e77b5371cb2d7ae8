//! Entity chunking as linear-chain structured prediction over typeless BIO
//! labels.
//!
//! A sentence is labelled as a whole: per-token emission features (surface
//! shape, context words, cluster bitstring prefixes) combine with
//! label-transition weights, trained by L2-regularized conditional
//! likelihood and decoded exactly by dynamic programming.

mod crf;
mod eval;
mod features;
mod model_io;
mod optimize;
mod train;

pub use crf::SequenceModel;
pub use eval::{chunk, evaluate_chunks, f_beta_percent, f_beta_score, ChunkScore, Mention};
pub use features::extract_features;
pub use model_io::{load_model, save_model};
pub use optimize::{OptimizeOptions, OptimizeReport};
pub use train::{
    load_conll, load_conll_file, load_mixture, train, LabeledSentence, TrainOptions, TrainReport,
};

use thiserror::Error;

/// Chunk labels in tie-break order: `B < I < O`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    B,
    I,
    O,
}

pub const LABELS: [Label; 3] = [Label::B, Label::I, Label::O];
pub const N_LABELS: usize = 3;

impl Label {
    pub fn idx(self) -> usize {
        match self {
            Label::B => 0,
            Label::I => 1,
            Label::O => 2,
        }
    }

    pub fn from_idx(i: usize) -> Label {
        LABELS[i]
    }

    /// Parse a tag, collapsing any `B-TYPE`/`I-TYPE` class suffix.
    pub fn parse(tag: &str) -> Result<Label, ChunkerError> {
        match tag.as_bytes().first() {
            Some(b'B') if tag.len() == 1 || tag.as_bytes()[1] == b'-' => Ok(Label::B),
            Some(b'I') if tag.len() == 1 || tag.as_bytes()[1] == b'-' => Ok(Label::I),
            Some(b'O') if tag.len() == 1 => Ok(Label::O),
            _ => Err(ChunkerError::BadLabel(tag.to_owned())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::B => "B",
            Label::I => "I",
            Label::O => "O",
        }
    }
}

#[derive(Debug, Error)]
pub enum ChunkerError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("aligned corpora differ in length: {expected} vs {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("unknown label tag {0:?}")]
    BadLabel(String),
    #[error("format: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests;
