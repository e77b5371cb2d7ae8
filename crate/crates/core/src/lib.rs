//! Batch analysis of how named-entity mentions spread through threaded
//! discussion corpora.
//!
//! The crate is organised as a pipeline over newline-delimited post dumps:
//!
//! 1. [`corpus`] — ingest post records and build reply/author/interaction
//!    indexes with durable on-disk storage.
//! 2. [`textproc`] — sentence splitting and noise-tolerant tokenization.
//! 3. [`brown`] — hierarchical word clustering producing merge-path
//!    bitstrings used as word representations.
//! 4. [`chunker`] — linear-chain structured prediction for entity chunking
//!    (typeless BIO) plus chunk-level scoring.
//! 5. [`mentions`] — entity-mention records and the per-entity time index.
//! 6. [`cascade`] — entity reply-cascade derivation and canonical shape
//!    counting.
//! 7. [`diffusion`] — exposure/adoption analysis and the general threshold
//!    diffusion model with three influence constructs.
//! 8. [`synthgen`] — deterministic synthetic-corpus generators with ground
//!    truth, used by tests and available from the CLI.
//! 9. [`pipeline`] — configuration, stage orchestration, and run manifests.
//!
//! Numeric kernels are generic over the scalar type via [`scalar::Real`];
//! the aliases below fix `f64` as the default used by the pipeline.

pub mod brown;
pub mod cascade;
pub mod chunker;
pub mod corpus;
pub mod diffusion;
pub mod ioutil;
pub mod mentions;
pub mod pipeline;
pub mod scalar;
pub mod synthgen;
pub mod textproc;

pub use scalar::Real;

/// Scalar type used by the CLI and all pipeline stages.
pub type Scalar = f64;

/// Corpus-level bigram statistics at the default scalar.
pub type ClusterStats = brown::ClusterCorpusStats<Scalar>;
/// Trained chunker model at the default scalar.
pub type NerModel = chunker::SequenceModel<Scalar>;
/// Chunk-level evaluation scores at the default scalar.
pub type NerScore = chunker::ChunkScore<Scalar>;
/// Influence statistics at the default scalar.
pub type Influence = diffusion::InfluenceStats<Scalar>;
