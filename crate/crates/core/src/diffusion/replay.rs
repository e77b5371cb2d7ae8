//! Chronological replay of test entities through the threshold model.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::corpus::{CorpusStore, UserIdx};
use crate::mentions::MentionIndex;
use crate::scalar::Real;

use super::influence::{influence_probability, update_adoption};
use super::{AdoptionTuple, Construct, InfluenceStats, Variant};

/// Replay one entity's citation history. Each first citation by a user
/// `v` freezes `v`'s accumulated probability (they have adopted) and then
/// applies `v`'s influence to every prior interaction partner that has not
/// yet adopted. Users receiving at least one influence update get a tuple;
/// never-exposed activators do not.
pub fn replay_entity<T: Real>(
    entity: &str,
    construct: Construct,
    variant: Variant,
    stats: &InfluenceStats<T>,
    store: &CorpusStore,
    mentions: &MentionIndex,
) -> Vec<AdoptionTuple<T>> {
    let mut running: HashMap<UserIdx, T> = HashMap::new();
    let mut frozen: HashMap<UserIdx, T> = HashMap::new();
    let mut activated: HashMap<UserIdx, ()> = HashMap::new();

    for act in mentions.activations_of(entity) {
        let v = act.user;
        activated.insert(v, ());
        if let Some(p) = running.remove(&v) {
            frozen.insert(v, p);
        }

        let neighbors = store.neighbors_before_idx(v, act.at);
        let influences: Vec<(UserIdx, T)> = if neighbors.len() >= 64 {
            neighbors
                .par_iter()
                .map(|&u| (u, influence_probability(construct, variant, v, u, act.at, stats, store)))
                .collect()
        } else {
            neighbors
                .iter()
                .map(|&u| (u, influence_probability(construct, variant, v, u, act.at, stats, store)))
                .collect()
        };
        for (u, p_vu) in influences {
            if activated.contains_key(&u) {
                continue; // adoption already happened; probability is frozen
            }
            let current = running.get(&u).copied().unwrap_or_else(T::zero);
            running.insert(u, update_adoption(current, p_vu));
        }
    }

    let mut tuples: Vec<AdoptionTuple<T>> = frozen
        .into_iter()
        .map(|(u, p)| (u, p, true))
        .chain(running.into_iter().map(|(u, p)| (u, p, false)))
        .map(|(u, p, adopted)| AdoptionTuple {
            entity: entity.to_owned(),
            user: store.user_name(u).to_owned(),
            p,
            adopted,
        })
        .collect();
    tuples.sort_by(|a, b| a.user.cmp(&b.user));
    tuples
}

/// Replay many entities independently in parallel; the result concatenates
/// per-entity tuples in the given entity order.
pub fn replay_entities<T: Real>(
    entities: &[String],
    construct: Construct,
    variant: Variant,
    stats: &InfluenceStats<T>,
    store: &CorpusStore,
    mentions: &MentionIndex,
) -> Vec<AdoptionTuple<T>> {
    entities
        .par_iter()
        .map(|e| replay_entity(e, construct, variant, stats, store, mentions))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
