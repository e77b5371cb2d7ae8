//! Exposure counting and the adoption-after-k-exposures distribution.

use std::collections::BTreeMap;

use crate::corpus::{CorpusStore, UserIdx};
use crate::mentions::MentionIndex;
use crate::scalar::{count, Real};

/// Number of exposures of `user` to `entity` strictly before `t`: posts
/// citing the entity, authored by someone the user had interacted with
/// before that post, each post counting once.
pub fn exposure_count(
    user: UserIdx,
    entity: &str,
    t: i64,
    store: &CorpusStore,
    mentions: &MentionIndex,
) -> u64 {
    let mut k = 0;
    for mp in mentions.posts_of(entity) {
        if mp.at >= t {
            break; // posts are time-ordered
        }
        let Some(author) = mp.author else { continue };
        if author == user {
            continue;
        }
        if store.first_contact(user, author).map_or(false, |fc| fc < mp.at) {
            k += 1;
        }
    }
    k
}

/// Exposure histogram for one entity's activations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityExposure {
    /// Exposure count at activation -> number of activations.
    pub counts: BTreeMap<u64, u64>,
    pub activations: u64,
}

impl EntityExposure {
    pub fn mean_k(&self) -> f64 {
        if self.activations == 0 {
            return 0.0;
        }
        let total: u64 = self.counts.iter().map(|(k, c)| k * c).sum();
        total as f64 / self.activations as f64
    }
}

/// Global and per-entity distributions of exposure counts at activation.
#[derive(Debug, Clone, Default)]
pub struct ExposureDistribution {
    pub global: BTreeMap<u64, u64>,
    pub total_activations: u64,
    pub per_entity: BTreeMap<String, EntityExposure>,
}

impl ExposureDistribution {
    /// Relative frequency of each exposure count.
    pub fn pmf<T: Real>(&self) -> BTreeMap<u64, T> {
        if self.total_activations == 0 {
            return BTreeMap::new();
        }
        let total = count::<T>(self.total_activations);
        self.global.iter().map(|(&k, &c)| (k, count::<T>(c) / total)).collect()
    }

    pub fn global_mean_k(&self) -> f64 {
        if self.total_activations == 0 {
            return 0.0;
        }
        let total: u64 = self.global.iter().map(|(k, c)| k * c).sum();
        total as f64 / self.total_activations as f64
    }
}

/// For every activation of every listed entity, record how many exposures
/// the user had received before their first citation.
pub fn adoption_exposure_distribution<'a, I>(
    entities: I,
    store: &CorpusStore,
    mentions: &MentionIndex,
) -> ExposureDistribution
where
    I: IntoIterator<Item = &'a str>,
{
    let mut dist = ExposureDistribution::default();
    for entity in entities {
        let mut per = EntityExposure::default();
        for act in mentions.activations_of(entity) {
            let k = exposure_count(act.user, entity, act.at, store, mentions);
            *per.counts.entry(k).or_default() += 1;
            per.activations += 1;
            *dist.global.entry(k).or_default() += 1;
            dist.total_activations += 1;
        }
        dist.per_entity.insert(entity.to_owned(), per);
    }
    dist
}
