//! Hashed n-gram featurizer: tokens -> n-grams -> FNV-1a bucket counts ->
//! L2-normalized sparse vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Featurizer {
    pub n_gram_orders: Vec<usize>,
    pub hash_dim: usize,
    pub lowercase: bool,
}

impl Default for Featurizer {
    fn default() -> Self {
        Self {
            n_gram_orders: vec![1, 2],
            hash_dim: 4096,
            lowercase: true,
        }
    }
}

impl Featurizer {
    pub fn validate(&self) -> Result<()> {
        if self.n_gram_orders.is_empty() {
            return Err(Error::Config("n_gram_orders must not be empty".into()));
        }
        if self.n_gram_orders.contains(&0) {
            return Err(Error::Config("n-gram orders must be >= 1".into()));
        }
        let mut sorted = self.n_gram_orders.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.n_gram_orders.len() {
            return Err(Error::Config("n-gram orders must be distinct".into()));
        }
        if self.hash_dim < 2 || !self.hash_dim.is_power_of_two() {
            return Err(Error::Config(format!(
                "hash_dim must be a power of two >= 2, got {}",
                self.hash_dim
            )));
        }
        Ok(())
    }

    /// Sparse L2-normalized feature vector, sorted by bucket index.
    /// Errors on text that tokenizes to zero tokens.
    pub fn features(&self, text_in: &str) -> Result<Vec<(usize, f64)>> {
        self.validate()?;
        let tokens = text::tokenize(text_in, self.lowercase);
        if tokens.is_empty() {
            return Err(Error::EmptyInput(format!(
                "text tokenizes to zero tokens: {text_in:?}"
            )));
        }
        let mask = (self.hash_dim - 1) as u64;
        let mut counts = std::collections::BTreeMap::<usize, f64>::new();
        for gram in text::ngrams(&tokens, &self.n_gram_orders) {
            let idx = (text::fnv1a64(gram.as_bytes()) & mask) as usize;
            *counts.entry(idx).or_insert(0.0) += 1.0;
        }
        let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
        Ok(counts.into_iter().map(|(i, c)| (i, c / norm)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent re-implementation of the bucket rule used as an oracle.
    fn oracle_bucket(gram: &str, hash_dim: usize) -> usize {
        const OFFSET: u64 = 0xcbf29ce484222325;
        const PRIME: u64 = 0x100000001b3;
        let mut h = OFFSET;
        for &b in gram.as_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
        (h % hash_dim as u64) as usize // hash_dim is a power of two: mod == mask
    }

    #[test]
    fn features_match_brute_force_rehash() {
        let fz = Featurizer::default();
        let text = "a b";
        let got = fz.features(text).unwrap();

        // Expected buckets for {a, b, a b}, each count 1, norm sqrt(3).
        let mut expected = std::collections::BTreeMap::<usize, f64>::new();
        for gram in ["a", "b", "a b"] {
            *expected.entry(oracle_bucket(gram, fz.hash_dim)).or_insert(0.0) += 1.0;
        }
        let norm = expected.values().map(|c| c * c).sum::<f64>().sqrt();
        let expected: Vec<(usize, f64)> =
            expected.into_iter().map(|(i, c)| (i, c / norm)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn features_are_unit_norm() {
        let fz = Featurizer::default();
        let v = fz.features("the river walk was quiet this morning").unwrap();
        let norm: f64 = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_tokens_accumulate_counts() {
        let fz = Featurizer {
            n_gram_orders: vec![1],
            hash_dim: 64,
            lowercase: true,
        };
        let v = fz.features("go go go stop").unwrap();
        // counts: go=3, stop=1; normalized by sqrt(10)
        let max = v.iter().map(|(_, x)| *x).fold(0.0, f64::max);
        assert!((max - 3.0 / 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_and_punctuation_texts_error() {
        let fz = Featurizer::default();
        assert!(matches!(fz.features(""), Err(Error::EmptyInput(_))));
        assert!(matches!(fz.features("?!... --"), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn hash_dim_must_be_power_of_two() {
        let fz = Featurizer {
            n_gram_orders: vec![1],
            hash_dim: 100,
            lowercase: true,
        };
        assert!(matches!(fz.features("x"), Err(Error::Config(_))));
    }

    #[test]
    fn case_folding_is_controlled_by_flag() {
        let base = Featurizer {
            n_gram_orders: vec![1],
            ..Featurizer::default()
        };
        let folded = base.clone();
        let exact = Featurizer {
            lowercase: false,
            ..base
        };
        assert_eq!(
            folded.features("Hello hello").unwrap().len(),
            1,
            "case-folded duplicates collapse to one bucket"
        );
        assert_eq!(exact.features("Hello hello").unwrap().len(), 2);
    }
}
