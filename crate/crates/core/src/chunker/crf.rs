//! Linear-chain model: scoring, conditional log-likelihood with exact
//! marginals, and exact decoding.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::brown::ClusterHierarchy;
use crate::scalar::{real, Real};

use super::features::extract_features;
use super::{Label, N_LABELS};

/// Trained chunker weights: per-(feature, label) emission weights plus a
/// dense label-transition table. Decoding is a pure function of these.
#[derive(Debug, Clone)]
pub struct SequenceModel<T: Real> {
    pub(super) feature_ids: HashMap<String, u32>,
    /// Layout: `n_features * 3` emission weights, then 9 transitions.
    pub(super) weights: Vec<T>,
    pub(super) c2: T,
}

/// A sentence reduced to interned feature ids per position.
#[derive(Debug, Clone)]
pub(super) struct Encoded {
    pub feats: Vec<Vec<u32>>,
    pub labels: Vec<u8>,
}

impl<T: Real> SequenceModel<T> {
    pub fn from_parts(feature_ids: HashMap<String, u32>, weights: Vec<T>, c2: T) -> Self {
        debug_assert_eq!(weights.len(), feature_ids.len() * N_LABELS + N_LABELS * N_LABELS);
        SequenceModel { feature_ids, weights, c2 }
    }

    pub fn n_features(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn c2(&self) -> T {
        self.c2
    }

    pub fn feature_id(&self, name: &str) -> Option<u32> {
        self.feature_ids.get(name).copied()
    }

    /// Emission weight of a named feature for a label, if the feature was
    /// seen in training.
    pub fn feature_weight(&self, name: &str, label: Label) -> Option<T> {
        self.feature_id(name).map(|f| self.weights[f as usize * N_LABELS + label.idx()])
    }

    pub fn transition(&self, from: Label, to: Label) -> T {
        self.weights[self.trans_base() + from.idx() * N_LABELS + to.idx()]
    }

    fn trans_base(&self) -> usize {
        self.feature_ids.len() * N_LABELS
    }

    fn emit(&self, feats: &[u32], label: usize) -> T {
        let mut score = T::zero();
        for &f in feats {
            score = score + self.weights[f as usize * N_LABELS + label];
        }
        score
    }

    /// Map feature names to ids, silently dropping features unseen in
    /// training (their weight is zero).
    pub(super) fn encode_tokens(&self, tokens: &[String], hierarchy: &ClusterHierarchy) -> Vec<Vec<u32>> {
        (0..tokens.len())
            .map(|pos| {
                extract_features(tokens, pos, hierarchy)
                    .into_iter()
                    .filter_map(|name| self.feature_ids.get(&name).copied())
                    .collect()
            })
            .collect()
    }

    /// Total path score of a label sequence over encoded features.
    pub fn sequence_score(&self, feats: &[Vec<u32>], labels: &[Label]) -> T {
        debug_assert_eq!(feats.len(), labels.len());
        let mut score = T::zero();
        for (t, fs) in feats.iter().enumerate() {
            score = score + self.emit(fs, labels[t].idx());
            if t > 0 {
                score = score + self.transition(labels[t - 1], labels[t]);
            }
        }
        score
    }

    /// Exact maximum-score label path. Ties break toward the earlier label
    /// in `B < I < O` order at every decision.
    pub fn decode(&self, tokens: &[String], hierarchy: &ClusterHierarchy) -> Vec<Label> {
        let feats = self.encode_tokens(tokens, hierarchy);
        self.decode_encoded(&feats)
    }

    pub(super) fn decode_encoded(&self, feats: &[Vec<u32>]) -> Vec<Label> {
        let n = feats.len();
        if n == 0 {
            return Vec::new();
        }
        let mut delta = vec![[T::zero(); N_LABELS]; n];
        let mut back = vec![[0usize; N_LABELS]; n];
        for y in 0..N_LABELS {
            delta[0][y] = self.emit(&feats[0], y);
        }
        for t in 1..n {
            for y in 0..N_LABELS {
                let emit = self.emit(&feats[t], y);
                let mut best_prev = 0;
                let mut best = delta[t - 1][0] + self.weights[self.trans_base() + y];
                for prev in 1..N_LABELS {
                    let cand =
                        delta[t - 1][prev] + self.weights[self.trans_base() + prev * N_LABELS + y];
                    if cand > best {
                        best = cand;
                        best_prev = prev;
                    }
                }
                delta[t][y] = best + emit;
                back[t][y] = best_prev;
            }
        }
        let mut last = 0;
        for y in 1..N_LABELS {
            if delta[n - 1][y] > delta[n - 1][last] {
                last = y;
            }
        }
        let mut path = vec![last; n];
        for t in (1..n).rev() {
            path[t - 1] = back[t][path[t]];
        }
        path.into_iter().map(Label::from_idx).collect()
    }

}

/// Negative conditional log-likelihood (nats) plus `c2 * ||w||^2`, and its
/// gradient, over an encoded training set. Per-sentence terms are computed
/// in fixed-size chunks that may run in parallel and are folded in chunk
/// order, so the result is deterministic.
pub(super) fn objective<T: Real>(weights: &[T], c2: T, data: &[Encoded]) -> (T, Vec<T>) {
    let chunk_size = 64;
    let chunks: Vec<&[Encoded]> = data.chunks(chunk_size).collect();
    let parts: Vec<(T, Vec<T>)> = if chunks.len() > 1 {
        chunks.par_iter().map(|c| objective_chunk(weights, c)).collect()
    } else {
        chunks.iter().map(|c| objective_chunk(weights, c)).collect()
    };

    let mut loss = T::zero();
    let mut grad = vec![T::zero(); weights.len()];
    for (l, g) in parts {
        loss = loss + l;
        for (acc, x) in grad.iter_mut().zip(g) {
            *acc = *acc + x;
        }
    }
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g + real::<T>(2.0) * c2 * *w;
    }
    let penalty: T = weights.iter().map(|w| *w * *w).sum();
    (loss + c2 * penalty, grad)
}

fn objective_chunk<T: Real>(weights: &[T], data: &[Encoded]) -> (T, Vec<T>) {
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); weights.len()];
    for sent in data {
        loss = loss + sentence_nll_grad(weights, sent, &mut grad);
    }
    (loss, grad)
}

fn emit_score<T: Real>(weights: &[T], feats: &[u32], label: usize) -> T {
    let mut score = T::zero();
    for &f in feats {
        score = score + weights[f as usize * N_LABELS + label];
    }
    score
}

/// One sentence's negative log-likelihood; accumulates its gradient
/// (expected minus empirical feature counts) into `grad`.
fn sentence_nll_grad<T: Real>(weights: &[T], sent: &Encoded, grad: &mut [T]) -> T {
    let n = sent.labels.len();
    debug_assert!(n > 0);
    let tb = weights.len() - N_LABELS * N_LABELS;

    let emits: Vec<[T; N_LABELS]> = sent
        .feats
        .iter()
        .map(|fs| {
            let mut e = [T::zero(); N_LABELS];
            for (y, slot) in e.iter_mut().enumerate() {
                *slot = emit_score(weights, fs, y);
            }
            e
        })
        .collect();

    // Forward/backward in log space.
    let mut alpha = vec![[T::zero(); N_LABELS]; n];
    alpha[0] = emits[0];
    for t in 1..n {
        for y in 0..N_LABELS {
            let mut terms = [T::zero(); N_LABELS];
            for (prev, term) in terms.iter_mut().enumerate() {
                *term = alpha[t - 1][prev] + weights[tb + prev * N_LABELS + y];
            }
            alpha[t][y] = log_sum_exp(&terms) + emits[t][y];
        }
    }
    let log_z = log_sum_exp(&alpha[n - 1]);

    let mut beta = vec![[T::zero(); N_LABELS]; n];
    for t in (0..n - 1).rev() {
        for y in 0..N_LABELS {
            let mut terms = [T::zero(); N_LABELS];
            for (next, term) in terms.iter_mut().enumerate() {
                *term = weights[tb + y * N_LABELS + next] + emits[t + 1][next] + beta[t + 1][next];
            }
            beta[t][y] = log_sum_exp(&terms);
        }
    }

    for t in 0..n {
        let gold = sent.labels[t] as usize;
        for y in 0..N_LABELS {
            let marginal = (alpha[t][y] + beta[t][y] - log_z).exp();
            for &f in &sent.feats[t] {
                grad[f as usize * N_LABELS + y] = grad[f as usize * N_LABELS + y] + marginal;
            }
        }
        for &f in &sent.feats[t] {
            grad[f as usize * N_LABELS + gold] = grad[f as usize * N_LABELS + gold] - T::one();
        }
    }
    for t in 1..n {
        for prev in 0..N_LABELS {
            for y in 0..N_LABELS {
                let marginal = (alpha[t - 1][prev]
                    + weights[tb + prev * N_LABELS + y]
                    + emits[t][y]
                    + beta[t][y]
                    - log_z)
                    .exp();
                grad[tb + prev * N_LABELS + y] = grad[tb + prev * N_LABELS + y] + marginal;
            }
        }
        let (prev, cur) = (sent.labels[t - 1] as usize, sent.labels[t] as usize);
        grad[tb + prev * N_LABELS + cur] = grad[tb + prev * N_LABELS + cur] - T::one();
    }

    let mut gold_score = T::zero();
    for t in 0..n {
        gold_score = gold_score + emits[t][sent.labels[t] as usize];
        if t > 0 {
            gold_score = gold_score
                + weights[tb + sent.labels[t - 1] as usize * N_LABELS + sent.labels[t] as usize];
        }
    }
    log_z - gold_score
}

fn log_sum_exp<T: Real>(xs: &[T; N_LABELS]) -> T {
    let mut max = xs[0];
    for x in &xs[1..] {
        if *x > max {
            max = *x;
        }
    }
    if !max.is_finite() {
        return max;
    }
    let sum: T = xs.iter().map(|x| (*x - max).exp()).sum();
    max + sum.ln()
}
