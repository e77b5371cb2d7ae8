//! Ranking evaluation: ROC AUC with mid-rank tie handling.

use std::collections::BTreeMap;

use crate::scalar::{count, real, Real};

use super::{AdoptionTuple, DiffusionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// Pool all tuples into one ranking.
    Micro,
    /// Mean and deviation of per-entity AUCs.
    Macro,
}

impl Grouping {
    pub fn parse(s: &str) -> Result<Grouping, DiffusionError> {
        match s {
            "micro" => Ok(Grouping::Micro),
            "macro" => Ok(Grouping::Macro),
            _ => Err(DiffusionError::Config(format!("unknown grouping {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RocReport<T: Real> {
    Micro { auc: T, positives: u64, negatives: u64 },
    Macro { mean: T, std_dev: T, entities_used: u64, entities_skipped: u64 },
}

/// AUC equals the probability that a uniformly random positive outranks a
/// uniformly random negative, ties counting one half; computed through
/// mid-rank sums.
fn auc_mid_rank<T: Real>(scored: &mut Vec<(T, bool)>) -> Result<T, DiffusionError> {
    let positives = scored.iter().filter(|(_, y)| *y).count() as u64;
    let negatives = scored.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(DiffusionError::UndefinedAuc(format!(
            "need both outcomes, have {positives} positive and {negatives} negative"
        )));
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite probabilities"));

    // Mid-rank assignment over tied score runs.
    let mut rank_sum_pos = T::zero();
    let mut i = 0;
    while i < scored.len() {
        let mut j = i;
        while j < scored.len() && scored[j].0 == scored[i].0 {
            j += 1;
        }
        // Ranks are 1-based: positions i+1 ..= j share the average rank.
        let avg_rank = real::<T>((i + 1 + j) as f64 / 2.0);
        for item in &scored[i..j] {
            if item.1 {
                rank_sum_pos = rank_sum_pos + avg_rank;
            }
        }
        i = j;
    }
    let np = count::<T>(positives);
    let nn = count::<T>(negatives);
    Ok((rank_sum_pos - np * (np + T::one()) / real(2.0)) / (np * nn))
}

/// Evaluate adoption tuples as a ranking. Micro pools everything and
/// errors when only one outcome class is present; macro averages
/// per-entity AUCs, skipping single-class entities (the skip count is
/// reported).
pub fn evaluate<T: Real>(
    tuples: &[AdoptionTuple<T>],
    grouping: Grouping,
) -> Result<RocReport<T>, DiffusionError> {
    if tuples.is_empty() {
        return Err(DiffusionError::UndefinedAuc("no tuples".into()));
    }
    match grouping {
        Grouping::Micro => {
            let mut scored: Vec<(T, bool)> = tuples.iter().map(|t| (t.p, t.adopted)).collect();
            let positives = scored.iter().filter(|(_, y)| *y).count() as u64;
            let negatives = scored.len() as u64 - positives;
            let auc = auc_mid_rank(&mut scored)?;
            Ok(RocReport::Micro { auc, positives, negatives })
        }
        Grouping::Macro => {
            let mut by_entity: BTreeMap<&str, Vec<(T, bool)>> = BTreeMap::new();
            for t in tuples {
                by_entity.entry(&t.entity).or_default().push((t.p, t.adopted));
            }
            let mut aucs: Vec<T> = Vec::new();
            let mut skipped = 0u64;
            for (_, mut scored) in by_entity {
                match auc_mid_rank(&mut scored) {
                    Ok(a) => aucs.push(a),
                    Err(DiffusionError::UndefinedAuc(_)) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
            if aucs.is_empty() {
                return Err(DiffusionError::UndefinedAuc(
                    "every entity had single-class outcomes".into(),
                ));
            }
            let n = count::<T>(aucs.len() as u64);
            let mean = aucs.iter().copied().sum::<T>() / n;
            // Population standard deviation of the per-entity values.
            let var = aucs.iter().map(|a| (*a - mean) * (*a - mean)).sum::<T>() / n;
            Ok(RocReport::Macro {
                mean,
                std_dev: var.sqrt(),
                entities_used: aucs.len() as u64,
                entities_skipped: skipped,
            })
        }
    }
}
