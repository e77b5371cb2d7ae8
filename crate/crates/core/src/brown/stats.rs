//! Class-level bigram statistics and mutual information.

use crate::scalar::{real, Real};

use super::BrownError;

/// Joint and marginal probabilities of adjacent-class bigrams.
#[derive(Debug, Clone)]
pub struct ClusterCorpusStats<T: Real> {
    joint: Vec<Vec<T>>,
    left: Vec<T>,
    right: Vec<T>,
}

impl<T: Real> ClusterCorpusStats<T> {
    /// Build from an explicit joint probability table; marginals are
    /// derived as row and column sums.
    pub fn from_probabilities(joint: Vec<Vec<T>>) -> Result<Self, BrownError> {
        let n = joint.len();
        if joint.iter().any(|row| row.len() != n) {
            return Err(BrownError::InvalidHyperparameters("joint table must be square".into()));
        }
        if joint.iter().flatten().any(|p| *p < T::zero() || !p.is_finite()) {
            return Err(BrownError::InvalidHyperparameters("probabilities must be finite and nonnegative".into()));
        }
        let total: T = joint.iter().flatten().copied().sum();
        if n > 0 && (total - T::one()).abs() > real(1e-6) {
            return Err(BrownError::InvalidHyperparameters(format!(
                "joint probabilities sum to {total}, expected 1"
            )));
        }
        let left = (0..n).map(|i| joint[i].iter().copied().sum()).collect();
        let right = (0..n).map(|j| (0..n).map(|i| joint[i][j]).sum()).collect();
        Ok(ClusterCorpusStats { joint, left, right })
    }

    /// Build from raw bigram counts; rows index the first class of the
    /// bigram.
    pub fn from_bigram_counts(counts: &[Vec<u64>]) -> Result<Self, BrownError> {
        let total: u64 = counts.iter().flatten().sum();
        if total == 0 {
            return Err(BrownError::EmptyCorpus);
        }
        let t = T::from_u64(total).expect("count fits scalar");
        let joint = counts
            .iter()
            .map(|row| row.iter().map(|&c| T::from_u64(c).expect("count fits scalar") / t).collect())
            .collect();
        Self::from_probabilities(joint)
    }

    /// Assemble from explicit joint and marginal tables without validating
    /// consistency; lets callers probe the inconsistent-stats error path.
    pub fn from_parts(joint: Vec<Vec<T>>, left: Vec<T>, right: Vec<T>) -> Self {
        ClusterCorpusStats { joint, left, right }
    }

    pub fn n_classes(&self) -> usize {
        self.joint.len()
    }

    pub fn joint(&self, i: usize, j: usize) -> T {
        self.joint[i][j]
    }

    /// Mutual information of the ordered class pair `(i, j)`:
    /// `p(i,j) * log2(p(i,j) / (p(i,*) * p(*,j)))`, with zero joint mass
    /// contributing zero by the limit convention.
    pub fn mutual_information(&self, i: usize, j: usize) -> Result<T, BrownError> {
        let p = self.joint[i][j];
        if p == T::zero() {
            return Ok(T::zero());
        }
        let denom = self.left[i] * self.right[j];
        if denom == T::zero() {
            return Err(BrownError::InconsistentStats(i, j));
        }
        Ok(p * (p / denom).log2())
    }

    /// Sum of mutual information over all ordered class pairs (self-pairs
    /// included) with nonzero joint mass.
    pub fn average_mutual_information(&self) -> Result<T, BrownError> {
        let n = self.n_classes();
        let mut total = T::zero();
        for i in 0..n {
            for j in 0..n {
                total = total + self.mutual_information(i, j)?;
            }
        }
        Ok(total)
    }
}

/// One term of the mutual-information sum, from probabilities. Shared by
/// the induction loop, which maintains its own matrices.
pub(super) fn mi_term<T: Real>(p: T, p_left: T, p_right: T) -> T {
    if p <= T::zero() {
        T::zero()
    } else {
        p * (p / (p_left * p_right)).log2()
    }
}
