//! Unigram language models, cross-entropy scoring, and budgeted token sampling.

use std::hash::Hash;

use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token counts of a training sample.
///
/// Unseen tokens are scored as if they had been seen once, so the model is not
/// normalized over unseen types.
#[derive(Clone, Debug)]
pub struct UnigramLm<T> {
    counts: FxHashMap<T, u32>,
    total: u32,
}

impl<T: Hash + Eq + Clone> UnigramLm<T> {
    pub fn fit(tokens: &[T]) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Parameter("cannot fit a language model on no tokens".into()));
        }
        let total = u32::try_from(tokens.len())
            .map_err(|_| Error::Parameter("training sample too large".into()))?;
        let mut counts = FxHashMap::default();
        counts.reserve(tokens.len().min(4096));
        for t in tokens {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
        Ok(Self { counts, total })
    }
}

impl<T: Hash + Eq> UnigramLm<T> {
    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn count(&self, token: &T) -> u32 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn n_types(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> impl Iterator<Item = (&T, u32)> {
        self.counts.iter().map(|(t, &c)| (t, c))
    }

    pub fn prob(&self, token: &T) -> f64 {
        f64::from(self.count(token).max(1)) / f64::from(self.total)
    }

    /// Mean surprisal of `tokens` in bits per token.
    pub fn cross_entropy(&self, tokens: &[T]) -> Result<f64> {
        if tokens.is_empty() {
            return Err(Error::Parameter("cross-entropy of an empty token list".into()));
        }
        let log_total = f64::from(self.total).log2();
        let sum: f64 = tokens
            .iter()
            .map(|t| log_total - f64::from(self.count(t).max(1)).log2())
            .sum();
        Ok(sum / tokens.len() as f64)
    }
}

/// Training/evaluation budgets and number of resampling iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingParams {
    /// Tokens drawn to fit each language model.
    pub train_budget: usize,
    /// Tokens drawn from each scored conversation.
    pub eval_budget: usize,
    pub n_samples: usize,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            train_budget: 2000,
            eval_budget: 200,
            n_samples: 50,
        }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<()> {
        if self.eval_budget == 0 || self.train_budget < self.eval_budget || self.n_samples == 0 {
            return Err(Error::Parameter(format!(
                "need train_budget >= eval_budget >= 1 and n_samples >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Uniform sample of `k` tokens without replacement.
pub fn sample_tokens<T: Clone, R: Rng + ?Sized>(tokens: &[T], k: usize, rng: &mut R) -> Result<Vec<T>> {
    if k == 0 {
        return Err(Error::Parameter("sample size must be positive".into()));
    }
    if tokens.len() < k {
        return Err(Error::InsufficientData {
            needed: k,
            available: tokens.len(),
        });
    }
    Ok(rand::seq::index::sample(rng, tokens.len(), k)
        .into_iter()
        .map(|i| tokens[i].clone())
        .collect())
}
