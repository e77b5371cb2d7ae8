//! Exposure-adoption analysis and the general threshold diffusion model.
//!
//! The model replays each test entity's citation history in time order.
//! When a user first cites the entity, the influence probability between
//! that user and every prior interaction partner is computed under one of
//! three constructs (entity propagation, interaction intensity, community
//! homophily), in a static or discrete-time (influence window) variant,
//! and folded into each partner's running adoption probability. Pooled or
//! per-entity ranking quality is then scored by ROC AUC with mid-rank tie
//! handling.

mod exposure;
mod influence;
mod io;
mod replay;
mod roc;
mod stats;

pub use exposure::{adoption_exposure_distribution, exposure_count, EntityExposure, ExposureDistribution};
pub use influence::{influence_probability, joint_adoption_probability, update_adoption};
pub use io::{
    load_stats, load_tuples, report_rows, save_stats, save_tuples, write_report_csv,
    write_stats_csv, write_tau_histogram, ReportRow,
};
pub use replay::{replay_entities, replay_entity};
pub use roc::{evaluate, Grouping, RocReport};
pub use stats::compute_stats;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::UserIdx;
use crate::mentions::MentionIndex;
use crate::scalar::Real;

/// How the pairwise influence probability is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Construct {
    /// Propagation history: entities carried from source to adopter.
    EntityPropagation,
    /// Reply intensity of the adopter toward the source.
    Interaction,
    /// Jaccard similarity of the users' subreddit sets.
    CommunityHomophily,
}

impl Construct {
    pub const ALL: [Construct; 3] =
        [Construct::EntityPropagation, Construct::Interaction, Construct::CommunityHomophily];

    pub fn parse(s: &str) -> Result<Construct, DiffusionError> {
        match s {
            "E" | "e" | "entity" => Ok(Construct::EntityPropagation),
            "I" | "i" | "interaction" => Ok(Construct::Interaction),
            "C" | "c" | "community" => Ok(Construct::CommunityHomophily),
            _ => Err(DiffusionError::Config(format!("unknown construct {s:?} (expected E, I, or C)"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Construct::EntityPropagation => "E",
            Construct::Interaction => "I",
            Construct::CommunityHomophily => "C",
        }
    }
}

/// Whether influence counts are windowed by the pair's mean propagation
/// latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Static,
    Discrete,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Static, Variant::Discrete];

    pub fn parse(s: &str) -> Result<Variant, DiffusionError> {
        match s {
            "static" => Ok(Variant::Static),
            "discrete" => Ok(Variant::Discrete),
            _ => Err(DiffusionError::Config(format!(
                "unknown variant {s:?} (expected static or discrete)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Static => "static",
            Variant::Discrete => "discrete",
        }
    }
}

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("probability out of range: {0}")]
    ProbabilityOutOfRange(f64),
    #[error("undefined AUC: {0}")]
    UndefinedAuc(String),
    #[error("split: {0}")]
    Split(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("stats file references unknown user {0:?}")]
    UnknownUser(String),
    #[error("format: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Ordered-pair propagation counters for one `(source v, adopter u)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairStats<T: Real> {
    /// Number of train entities propagated from `v` to `u`.
    pub count: u64,
    /// Mean adoption latency in seconds; strictly positive.
    pub tau_seconds: T,
    /// Source activation times of the propagated entities, sorted.
    pub source_times: Vec<i64>,
}

/// Influence statistics estimated from the training entities, valid for
/// the store they were computed against.
#[derive(Debug, Clone, Default)]
pub struct InfluenceStats<T: Real> {
    /// Distinct train entities cited per user.
    pub entity_count: HashMap<UserIdx, u64>,
    /// Activation times per user over train entities, sorted.
    pub activation_times: HashMap<UserIdx, Vec<i64>>,
    /// `(source, adopter)` propagation counters.
    pub pairs: HashMap<(UserIdx, UserIdx), PairStats<T>>,
    pub train_entities: Vec<String>,
}

impl<T: Real> InfluenceStats<T> {
    pub fn pair(&self, source: UserIdx, adopter: UserIdx) -> Option<&PairStats<T>> {
        self.pairs.get(&(source, adopter))
    }

    /// Mean propagation latency for a pair, if any propagation was seen.
    pub fn tau(&self, source: UserIdx, adopter: UserIdx) -> Option<T> {
        self.pair(source, adopter).map(|p| p.tau_seconds)
    }
}

/// One replay outcome: a user's final adoption probability for an entity
/// and whether they actually adopted within the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct AdoptionTuple<T: Real> {
    pub entity: String,
    pub user: String,
    pub p: T,
    pub adopted: bool,
}

/// Entity ranking and train/test split policy.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    /// Entities ranked by mention count, descending.
    pub top_n: usize,
    pub train_fraction: f64,
    pub seed: u64,
    /// Minimum entity-key length; shorter keys are noise.
    pub min_key_len: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { top_n: 500, train_fraction: 0.8, seed: 13, min_key_len: 2 }
    }
}

/// Uniform random split of the top entities into train and test, fixed by
/// the seed.
pub fn split_entities(
    spec: &SplitSpec,
    mentions: &MentionIndex,
) -> Result<(Vec<String>, Vec<String>), DiffusionError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DiffusionError::Split(format!(
            "train fraction {} outside (0, 1)",
            spec.train_fraction
        )));
    }
    let mut top = mentions.top_entities(spec.top_n, spec.min_key_len);
    if top.len() < 2 {
        return Err(DiffusionError::Split(format!(
            "need at least 2 rankable entities, have {}",
            top.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    top.shuffle(&mut rng);
    let n_train = ((top.len() as f64 * spec.train_fraction).round() as usize).clamp(1, top.len() - 1);
    let test = top.split_off(n_train);
    Ok((top, test))
}
