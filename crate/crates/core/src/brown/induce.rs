//! Greedy cluster induction with an active set.
//!
//! Word types enter the active set most-frequent-first, one singleton class
//! each. Whenever the active set exceeds its size bound, the pair of
//! classes whose merge loses the least average mutual information is
//! merged (ties: lexicographically smallest `(older id, newer id)`). After
//! all types are inserted the active set is reduced to the terminal
//! cluster count, and the remaining merges build the binary tree that
//! assigns bitstrings.
//!
//! Probabilities are always normalized by the full corpus bigram count, so
//! the final AMI is the corpus AMI. Bigram statistics cover adjacent
//! tokens within a sentence; sentence boundaries do not form bigrams.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::scalar::Real;

use super::stats::mi_term;
use super::{BrownError, ClusterHierarchy};

/// Per-merge AMI trace, for oracle comparison and loss monotonicity checks.
#[derive(Debug, Clone, Default)]
pub struct InductionDiagnostics {
    pub initial_ami: f64,
    pub ami_before_merge: Vec<f64>,
    pub ami_after_merge: Vec<f64>,
}

pub fn induce_clusters<T: Real>(
    sentences: &[Vec<String>],
    active_size: usize,
    classes: usize,
) -> Result<ClusterHierarchy, BrownError> {
    induce_clusters_diagnostic::<T>(sentences, active_size, classes).map(|(h, _)| h)
}

pub fn induce_clusters_diagnostic<T: Real>(
    sentences: &[Vec<String>],
    active_size: usize,
    classes: usize,
) -> Result<(ClusterHierarchy, InductionDiagnostics), BrownError> {
    if active_size < 2 {
        return Err(BrownError::InvalidHyperparameters("active set size must be at least 2".into()));
    }
    if classes < 1 {
        return Err(BrownError::InvalidHyperparameters("cluster count must be at least 1".into()));
    }
    if active_size > classes {
        return Err(BrownError::InvalidHyperparameters(format!(
            "active set ({active_size}) larger than cluster count ({classes}) is unreliable"
        )));
    }
    if active_size < classes {
        return Err(BrownError::InvalidHyperparameters(format!(
            "active set ({active_size}) cannot produce {classes} terminal clusters"
        )));
    }

    // Vocabulary, most frequent first; ties lexicographic. A word's rank is
    // its initial class id.
    let mut freqs: BTreeMap<&str, u64> = BTreeMap::new();
    for sent in sentences {
        for tok in sent {
            *freqs.entry(tok.as_str()).or_default() += 1;
        }
    }
    if freqs.is_empty() {
        return Err(BrownError::EmptyCorpus);
    }
    let mut vocab: Vec<(String, u64)> = freqs.iter().map(|(w, f)| (w.to_string(), *f)).collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let rank: HashMap<&str, u32> =
        vocab.iter().enumerate().map(|(i, (w, _))| (w.as_str(), i as u32)).collect();
    let n = vocab.len();

    // Word-level bigram adjacency (within sentences) and the fixed total.
    let mut bigrams: HashMap<(u32, u32), u64> = HashMap::new();
    let mut total_bigrams = 0u64;
    for sent in sentences {
        for pair in sent.windows(2) {
            let a = rank[pair[0].as_str()];
            let b = rank[pair[1].as_str()];
            *bigrams.entry((a, b)).or_default() += 1;
            total_bigrams += 1;
        }
    }
    let mut fwd: Vec<Vec<(u32, u64)>> = vec![Vec::new(); n];
    let mut bwd: Vec<Vec<(u32, u64)>> = vec![Vec::new(); n];
    for (&(a, b), &c) in &bigrams {
        fwd[a as usize].push((b, c));
        bwd[b as usize].push((a, c));
    }
    for v in fwd.iter_mut().chain(bwd.iter_mut()) {
        v.sort_unstable();
    }

    let a_eff = active_size.min(n);
    let c_eff = classes.min(n);
    let inv_total = if total_bigrams == 0 {
        T::zero()
    } else {
        T::one() / T::from_u64(total_bigrams).expect("bigram count fits scalar")
    };

    let mut state: ActiveState<T> = ActiveState::new(n, inv_total);
    let mut diag = InductionDiagnostics::default();

    for w in 0..a_eff as u32 {
        state.insert_word(w, &fwd, &bwd);
    }
    diag.initial_ami = state.current_ami().to_f64().unwrap_or(f64::NAN);

    // Insertion phase: each remaining type enters, then merges restore the
    // active-set bound.
    for w in a_eff as u32..n as u32 {
        state.insert_word(w, &fwd, &bwd);
        while state.slots() > a_eff {
            state.merge_best(&mut diag);
        }
    }
    // Reduction to the terminal cluster count (no-op when the active set
    // size equals it).
    while state.slots() > c_eff {
        state.merge_best(&mut diag);
    }

    // Terminal snapshot: every word's class at the cut.
    let terminal_of_word: Vec<u32> = (0..n as u32).map(|w| state.find(w)).collect();
    debug_assert_eq!(state.slots(), c_eff);
    let terminal_ids = state.ids.clone();

    // Final merges build the tree over terminal clusters.
    while state.slots() > 1 {
        state.merge_best(&mut diag);
    }

    // Bitstrings: walk the final merges top-down; the older branch gets '0'.
    let mut bits = super::bits_from_merges(n, &state.merges, n - c_eff);
    if c_eff == 1 {
        bits.insert(terminal_ids[0], String::new());
    }

    let mut paths: BTreeMap<String, String> = BTreeMap::new();
    for (w, (word, _)) in vocab.iter().enumerate() {
        let terminal = terminal_of_word[w];
        let path = bits.get(&terminal).cloned().unwrap_or_default();
        paths.insert(word.clone(), path);
    }

    let hierarchy = ClusterHierarchy {
        paths,
        vocab,
        merges: state.merges,
        active_size,
        classes,
        merge_ami: diag.ami_after_merge.clone(),
        initial_ami: diag.initial_ami,
    };
    Ok((hierarchy, diag))
}

/// Mutable clustering state: probabilities between active classes, the
/// union-find over class ids, and the merge log.
struct ActiveState<T: Real> {
    ids: Vec<u32>,
    joint: Vec<Vec<T>>,
    left: Vec<T>,
    right: Vec<T>,
    /// Class id -> slot, rebuilt after structural changes.
    slot_of: HashMap<u32, usize>,
    /// Union-find over class ids; roots are live classes.
    parent: Vec<u32>,
    inserted: Vec<bool>,
    merges: Vec<(u32, u32)>,
    next_id: u32,
    inv_total: T,
}

impl<T: Real> ActiveState<T> {
    fn new(n_words: usize, inv_total: T) -> Self {
        // Ids 0..n are word classes; merges allocate n..2n-1.
        let capacity = 2 * n_words;
        ActiveState {
            ids: Vec::new(),
            joint: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            slot_of: HashMap::new(),
            parent: (0..capacity as u32).collect(),
            inserted: vec![false; n_words],
            merges: Vec::new(),
            next_id: n_words as u32,
            inv_total,
        }
    }

    fn slots(&self) -> usize {
        self.ids.len()
    }

    fn find(&mut self, mut id: u32) -> u32 {
        while self.parent[id as usize] != id {
            let up = self.parent[self.parent[id as usize] as usize];
            self.parent[id as usize] = up;
            id = up;
        }
        id
    }

    /// Add word `w` (by rank) as a fresh singleton class, pulling in its
    /// bigram mass against already-inserted words.
    fn insert_word(&mut self, w: u32, fwd: &[Vec<(u32, u64)>], bwd: &[Vec<(u32, u64)>]) {
        let k = self.slots();
        for row in self.joint.iter_mut() {
            row.push(T::zero());
        }
        self.joint.push(vec![T::zero(); k + 1]);
        self.left.push(T::zero());
        self.right.push(T::zero());
        self.ids.push(w);
        self.slot_of.insert(w, k);
        self.inserted[w as usize] = true;

        for &(x, c) in &fwd[w as usize] {
            if !self.inserted[x as usize] {
                continue;
            }
            let root = self.find(x);
            let sx = self.slot_of[&root];
            let p = T::from_u64(c).expect("count fits scalar") * self.inv_total;
            self.joint[k][sx] = self.joint[k][sx] + p;
            self.left[k] = self.left[k] + p;
            self.right[sx] = self.right[sx] + p;
        }
        for &(x, c) in &bwd[w as usize] {
            if !self.inserted[x as usize] || x == w {
                continue; // the self-bigram was already counted via fwd
            }
            let root = self.find(x);
            let sx = self.slot_of[&root];
            let p = T::from_u64(c).expect("count fits scalar") * self.inv_total;
            self.joint[sx][k] = self.joint[sx][k] + p;
            self.left[sx] = self.left[sx] + p;
            self.right[k] = self.right[k] + p;
        }
    }

    fn current_ami(&self) -> T {
        let k = self.slots();
        let mut total = T::zero();
        for i in 0..k {
            for j in 0..k {
                total = total + mi_term(self.joint[i][j], self.left[i], self.right[j]);
            }
        }
        total
    }

    /// Merge the pair of active classes with the least AMI loss.
    fn merge_best(&mut self, diag: &mut InductionDiagnostics) {
        let k = self.slots();
        debug_assert!(k >= 2);

        // MI terms and per-slot sums enable an O(k) loss evaluation:
        // the merged pair's contribution replaces everything involving
        // either constituent.
        let q: Vec<Vec<T>> = (0..k)
            .map(|i| (0..k).map(|j| mi_term(self.joint[i][j], self.left[i], self.right[j])).collect())
            .collect();
        let mut s = vec![T::zero(); k];
        let mut ami = T::zero();
        for i in 0..k {
            for j in 0..k {
                s[i] = s[i] + q[i][j] + q[j][i];
                ami = ami + q[i][j];
            }
            s[i] = s[i] - q[i][i];
        }

        let loss_of = |i: usize, j: usize| -> T {
            let pl_m = self.left[i] + self.left[j];
            let pr_m = self.right[i] + self.right[j];
            let mut kept = T::zero();
            for x in 0..k {
                if x == i || x == j {
                    continue;
                }
                kept = kept
                    + mi_term(self.joint[i][x] + self.joint[j][x], pl_m, self.right[x])
                    + mi_term(self.joint[x][i] + self.joint[x][j], self.left[x], pr_m);
            }
            let self_m = mi_term(
                self.joint[i][i] + self.joint[i][j] + self.joint[j][i] + self.joint[j][j],
                pl_m,
                pr_m,
            );
            s[i] + s[j] - q[i][j] - q[j][i] - kept - self_m
        };

        let tie_key = |i: usize, j: usize| -> (u32, u32) {
            let (a, b) = (self.ids[i], self.ids[j]);
            (a.min(b), a.max(b))
        };
        let pairs: Vec<(usize, usize)> =
            (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
        let evaluate = |&(i, j): &(usize, usize)| {
            let (older, newer) = tie_key(i, j);
            (loss_of(i, j), older, newer, i, j)
        };
        let better = |a: &(T, u32, u32, usize, usize), b: &(T, u32, u32, usize, usize)| {
            (a.0, a.1, a.2) < (b.0, b.1, b.2)
        };
        // The min over a total order is associative and commutative, so the
        // parallel reduction is deterministic regardless of partitioning.
        let best = if pairs.len() >= 4096 {
            pairs.par_iter().map(evaluate).reduce_with(|a, b| if better(&b, &a) { b } else { a })
        } else {
            pairs.iter().map(evaluate).reduce(|a, b| if better(&b, &a) { b } else { a })
        }
        .expect("at least one candidate pair");

        let (loss, older, newer, i, j) = best;
        diag.ami_before_merge.push(ami.to_f64().unwrap_or(f64::NAN));
        diag.ami_after_merge.push((ami - loss).to_f64().unwrap_or(f64::NAN));
        debug_assert!(loss >= -T::from_f64(1e-9).unwrap(), "negative merge loss");

        // Fold slot j into slot i, then drop j.
        let (i, j) = (i.min(j), i.max(j));
        for x in 0..k {
            let add = self.joint[j][x];
            self.joint[i][x] = self.joint[i][x] + add;
        }
        for x in 0..k {
            let add = self.joint[x][j];
            self.joint[x][i] = self.joint[x][i] + add;
        }
        self.joint.remove(j);
        for row in self.joint.iter_mut() {
            row.remove(j);
        }
        self.left[i] = self.left[i] + self.left[j];
        self.right[i] = self.right[i] + self.right[j];
        self.left.remove(j);
        self.right.remove(j);

        let new_id = self.next_id;
        self.next_id += 1;
        self.parent[older as usize] = new_id;
        self.parent[newer as usize] = new_id;
        self.merges.push((older, newer));
        self.ids[i] = new_id;
        self.ids.remove(j);
        self.slot_of.clear();
        for (slot, &id) in self.ids.iter().enumerate() {
            self.slot_of.insert(id, slot);
        }
    }
}
