//! Estimating influence statistics from the training entities.

use std::collections::HashMap;

use crate::corpus::CorpusStore;
use crate::mentions::MentionIndex;
use crate::scalar::{count, Real};

use super::{InfluenceStats, PairStats};

/// Scan every training entity's activation sequence. A propagation
/// `v -> u` is recorded when `u` activates at `t_u` with `v` a prior
/// interaction partner (`first contact < t_u`) that activated the same
/// entity strictly earlier. The pair's latency is the mean of
/// `t_u - t_v` over its propagated entities.
pub fn compute_stats<T: Real>(
    train_entities: &[String],
    store: &CorpusStore,
    mentions: &MentionIndex,
) -> InfluenceStats<T> {
    let mut stats = InfluenceStats {
        entity_count: HashMap::new(),
        activation_times: HashMap::new(),
        pairs: HashMap::new(),
        train_entities: train_entities.to_vec(),
    };
    let mut latency_sums: HashMap<(u32, u32), i64> = HashMap::new();

    for entity in train_entities {
        let acts = mentions.activations_of(entity);
        for (i, act) in acts.iter().enumerate() {
            *stats.entity_count.entry(act.user).or_default() += 1;
            stats.activation_times.entry(act.user).or_default().push(act.at);

            for prior in &acts[..i] {
                if prior.at >= act.at {
                    continue; // same-second tie: not strictly earlier
                }
                if store.first_contact(prior.user, act.user).map_or(true, |t| t >= act.at) {
                    continue; // not a neighbour before the adoption
                }
                let key = (prior.user, act.user);
                let entry = stats.pairs.entry(key).or_insert_with(|| PairStats {
                    count: 0,
                    tau_seconds: T::zero(),
                    source_times: Vec::new(),
                });
                entry.count += 1;
                entry.source_times.push(prior.at);
                *latency_sums.entry(key).or_default() += act.at - prior.at;
            }
        }
    }

    for (key, pair) in stats.pairs.iter_mut() {
        pair.source_times.sort_unstable();
        pair.tau_seconds = count::<T>(latency_sums[key] as u64) / count::<T>(pair.count);
    }
    for times in stats.activation_times.values_mut() {
        times.sort_unstable();
    }
    stats
}
