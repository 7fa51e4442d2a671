//! Joint probability mass functions over outcome tuples and their Shannon
//! entropies (always in bits). Uses the same mixed-radix flat index as
//! [`crate::state::PartyLayout`]: party 0 is the most significant digit.

use crate::error::{Error, Result};

const PMF_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    sizes: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(sizes: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if sizes.is_empty() || sizes.iter().any(|&s| s == 0) {
            return Err(Error::BadPmf("alphabet sizes must be >= 1".into()));
        }
        let total: usize = sizes.iter().product();
        if probs.len() != total {
            return Err(Error::BadPmf(format!(
                "{} probabilities supplied, alphabet product is {}",
                probs.len(),
                total
            )));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::BadPmf(format!("negative or non-finite entry {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::BadPmf(format!("probabilities sum to {sum}")));
        }
        Ok(Self { sizes, probs })
    }

    pub fn parties(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn index_of(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.sizes.len());
        let mut idx = 0;
        for (i, &x) in tuple.iter().enumerate() {
            idx = idx * self.sizes[i] + x;
        }
        idx
    }

    pub fn tuple_of(&self, mut index: usize) -> Vec<usize> {
        let m = self.sizes.len();
        let mut out = vec![0usize; m];
        for i in (0..m).rev() {
            out[i] = index % self.sizes[i];
            index /= self.sizes[i];
        }
        out
    }

    pub fn prob(&self, tuple: &[usize]) -> f64 {
        self.probs[self.index_of(tuple)]
    }

    /// Outcome tuples with nonzero probability, in flat-index order.
    pub fn support(&self) -> Vec<(Vec<usize>, f64)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (self.tuple_of(i), p))
            .collect()
    }

    /// Exact marginal onto `keep` (strictly increasing party indices).
    pub fn marginal(&self, keep: &[usize]) -> Result<JointPmf> {
        if keep.is_empty() {
            return Err(Error::BadSubset("marginal subset must be nonempty".into()));
        }
        for (k, &p) in keep.iter().enumerate() {
            if p >= self.sizes.len() {
                return Err(Error::PartyOutOfRange {
                    party: p,
                    parties: self.sizes.len(),
                });
            }
            if k > 0 && keep[k - 1] >= p {
                return Err(Error::BadSubset(
                    "party indices must be strictly increasing".into(),
                ));
            }
        }
        let out_sizes: Vec<usize> = keep.iter().map(|&p| self.sizes[p]).collect();
        let total: usize = out_sizes.iter().product();
        let mut out = vec![0.0; total];
        for (i, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let t = self.tuple_of(i);
            let mut idx = 0;
            for (k, &party) in keep.iter().enumerate() {
                idx = idx * out_sizes[k] + t[party];
            }
            out[idx] += p;
        }
        JointPmf::new(out_sizes, out)
    }

    /// H(X_{[m]}) in bits.
    pub fn entropy_bits(&self) -> f64 {
        entropy_of(&self.probs)
    }

    /// H(X_margin | X_given) = H(X_{margin u given}) - H(X_given), from exact
    /// marginalization. `given` may be empty.
    pub fn conditional_entropy(&self, margin: &[usize], given: &[usize]) -> Result<f64> {
        if margin.is_empty() {
            return Err(Error::BadSubset("margin subset must be nonempty".into()));
        }
        if margin.iter().any(|p| given.contains(p)) {
            return Err(Error::BadSubset("margin and given subsets overlap".into()));
        }
        let mut joint: Vec<usize> = margin.iter().chain(given.iter()).copied().collect();
        joint.sort_unstable();
        let h_joint = self.marginal(&joint)?.entropy_bits();
        if given.is_empty() {
            return Ok(h_joint);
        }
        let mut g: Vec<usize> = given.to_vec();
        g.sort_unstable();
        let h_given = self.marginal(&g)?.entropy_bits();
        Ok(h_joint - h_given)
    }
}

/// Conditional Shannon entropy of a joint pmf; see
/// [`JointPmf::conditional_entropy`].
pub fn shannon_entropy(p: &JointPmf, margin: &[usize], given: &[usize]) -> Result<f64> {
    p.conditional_entropy(margin, given)
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h.max(0.0)
}
