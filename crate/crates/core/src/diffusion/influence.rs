//! Pairwise influence probabilities and the adoption-probability algebra.

use crate::corpus::{CorpusStore, UserIdx};
use crate::scalar::{count, Real};

use super::{Construct, DiffusionError, InfluenceStats, Variant};

/// Half-open influence window `[t_now - tau, t_now)` as integer seconds.
/// An infinite `tau` means no temporal restriction at all, which makes the
/// discrete variant coincide with the static one exactly.
fn window<T: Real>(t_now: i64, tau: T) -> Option<(i64, i64)> {
    if tau.is_infinite() {
        None
    } else {
        let lo = (T::from_i64(t_now).expect("timestamp fits scalar") - tau)
            .ceil()
            .to_i64()
            .unwrap_or(i64::MIN);
        Some((lo, t_now))
    }
}

fn in_window(t: i64, w: Option<(i64, i64)>) -> bool {
    match w {
        None => true,
        Some((lo, hi)) => t >= lo && t < hi,
    }
}

fn ratio<T: Real>(num: u64, den: u64) -> T {
    if den == 0 {
        T::zero()
    } else {
        count::<T>(num) / count::<T>(den)
    }
}

/// Influence probability of `source` on `adopter` at replay time `t_now`,
/// under the given construct and variant. Zero denominators and missing
/// influence windows yield zero.
pub fn influence_probability<T: Real>(
    construct: Construct,
    variant: Variant,
    source: UserIdx,
    adopter: UserIdx,
    t_now: i64,
    stats: &InfluenceStats<T>,
    store: &CorpusStore,
) -> T {
    let w = match variant {
        Variant::Static => None,
        Variant::Discrete => match stats.tau(source, adopter) {
            None => return T::zero(),
            Some(tau) => window(t_now, tau),
        },
    };

    match construct {
        Construct::EntityPropagation => {
            let num = match stats.pair(source, adopter) {
                None => 0,
                Some(pair) => match w {
                    None => pair.count,
                    Some(_) => pair.source_times.iter().filter(|&&t| in_window(t, w)).count() as u64,
                },
            };
            let den = match w {
                None => stats.entity_count.get(&source).copied().unwrap_or(0),
                Some(_) => stats
                    .activation_times
                    .get(&source)
                    .map(|ts| ts.iter().filter(|&&t| in_window(t, w)).count() as u64)
                    .unwrap_or(0),
            };
            ratio(num, den)
        }
        Construct::Interaction => {
            let (to_source, total) = store.interactions_count(adopter, source, w);
            ratio(to_source, total)
        }
        Construct::CommunityHomophily => {
            let (a, b) = match w {
                None => (
                    store.user_subreddits(adopter).iter().map(|&(s, _)| s).collect::<Vec<_>>(),
                    store.user_subreddits(source).iter().map(|&(s, _)| s).collect::<Vec<_>>(),
                ),
                Some((lo, hi)) => {
                    (store.user_subreddits_window(adopter, lo, hi), store.user_subreddits_window(source, lo, hi))
                }
            };
            jaccard(&a, &b)
        }
    }
}

/// Jaccard similarity of two sorted, deduplicated id sets.
fn jaccard<T: Real>(a: &[u32], b: &[u32]) -> T {
    if a.is_empty() && b.is_empty() {
        return T::zero();
    }
    let (mut i, mut j) = (0, 0);
    let mut inter = 0u64;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() as u64 + b.len() as u64 - inter;
    ratio(inter, union)
}

/// Probability that a user adopts given independent neighbour influences:
/// `1 - prod(1 - p_i)`. An empty list yields zero.
pub fn joint_adoption_probability<T: Real>(influences: &[T]) -> Result<T, DiffusionError> {
    let mut survive = T::one();
    for &p in influences {
        if !(T::zero()..=T::one()).contains(&p) {
            return Err(DiffusionError::ProbabilityOutOfRange(p.to_f64().unwrap_or(f64::NAN)));
        }
        survive = survive * (T::one() - p);
    }
    Ok(T::one() - survive)
}

/// Fold one more neighbour's influence into a running adoption
/// probability: `p + (1 - p) * p_new`. Commutative and associative across
/// updates, matching the closed form.
pub fn update_adoption<T: Real>(p_current: T, p_new: T) -> T {
    debug_assert!((T::zero()..=T::one()).contains(&p_current));
    debug_assert!((T::zero()..=T::one()).contains(&p_new));
    p_current + (T::one() - p_current) * p_new
}
