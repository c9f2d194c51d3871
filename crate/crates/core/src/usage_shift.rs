//! Population-level lexical change between the first and the tenured stage.

use std::collections::BTreeSet;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Individual, Role, TokenId, TENURED_CAREER_LENGTH};
use crate::error::{Error, Result};
use crate::lifestage::{tenured_stage_index, DEFAULT_STAGE_WIDTH};
use crate::segmentation::{Component, ComponentWordStats};
use crate::stats::median;

pub const DEFAULT_CORE_USER_FRACTION: f64 = 0.2;
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftEntry {
    pub word: String,
    /// Add-one smoothed share of first-stage conversations containing the word.
    pub p0: f64,
    /// Same for the tenured stage.
    pub pbar: f64,
    /// `ln(pbar / p0)`.
    pub shift: f64,
}

fn eligible(corpus: &Corpus) -> impl Iterator<Item = &Individual> {
    corpus.with_min_conversations(TENURED_CAREER_LENGTH)
}

fn counselor_types<'a>(convs: impl IntoIterator<Item = &'a crate::corpus::Conversation>) -> FxHashSet<TokenId> {
    convs
        .into_iter()
        .flat_map(|c| c.messages_by(Role::Counselor))
        .flat_map(|m| m.tokens.iter().copied())
        .collect()
}

/// Words used at least once in the first 120 conversations by at least
/// `min_user_fraction` of the individuals who reached that many.
pub fn core_vocabulary(corpus: &Corpus, min_user_fraction: f64) -> BTreeSet<String> {
    let mut users: FxHashMap<TokenId, usize> = FxHashMap::default();
    let mut n = 0usize;
    for ind in eligible(corpus) {
        n += 1;
        for t in counselor_types(&ind.conversations[..TENURED_CAREER_LENGTH]) {
            *users.entry(t).or_default() += 1;
        }
    }
    users
        .into_iter()
        .filter(|&(_, k)| k as f64 >= min_user_fraction * n as f64)
        .map(|(t, _)| corpus.vocab.word(t).to_owned())
        .collect()
}

/// Conversation-containment counts for two stages of every eligible individual.
#[derive(Clone, Debug, Default)]
pub struct StageContainment {
    n_from: u64,
    n_to: u64,
    k_from: FxHashMap<TokenId, u64>,
    k_to: FxHashMap<TokenId, u64>,
}

impl StageContainment {
    pub fn new(corpus: &Corpus, from_stage: usize, to_stage: usize, width: usize) -> Self {
        let mut out = Self::default();
        for ind in eligible(corpus) {
            for (stage, n, k) in [
                (from_stage, &mut out.n_from, &mut out.k_from),
                (to_stage, &mut out.n_to, &mut out.k_to),
            ] {
                let Some(convs) = ind.conversations.get(stage * width..(stage + 1) * width) else {
                    continue;
                };
                for conv in convs {
                    *n += 1;
                    for t in counselor_types([conv]) {
                        *k.entry(t).or_default() += 1;
                    }
                }
            }
        }
        out
    }

    /// First stage to tenured stage at the default width.
    pub fn tenure(corpus: &Corpus) -> Self {
        Self::new(corpus, 0, tenured_stage_index(DEFAULT_STAGE_WIDTH), DEFAULT_STAGE_WIDTH)
    }

    pub fn swapped(&self) -> Self {
        Self {
            n_from: self.n_to,
            n_to: self.n_from,
            k_from: self.k_to.clone(),
            k_to: self.k_from.clone(),
        }
    }

    pub fn counts(&self, token: TokenId) -> (u64, u64, u64, u64) {
        (
            self.k_from.get(&token).copied().unwrap_or(0),
            self.n_from,
            self.k_to.get(&token).copied().unwrap_or(0),
            self.n_to,
        )
    }

    pub fn entry(&self, word: &str, token: TokenId) -> ShiftEntry {
        let (k0, n0, k1, n1) = self.counts(token);
        shift_from_counts(word, k0, n0, k1, n1)
    }
}

/// Shift from raw containment counts with `(k + 1) / (n + 2)` smoothing.
pub fn shift_from_counts(word: &str, k0: u64, n0: u64, k1: u64, n1: u64) -> ShiftEntry {
    let p0 = (k0 + 1) as f64 / (n0 + 2) as f64;
    let pbar = (k1 + 1) as f64 / (n1 + 2) as f64;
    ShiftEntry {
        word: word.to_owned(),
        p0,
        pbar,
        // difference of logs so that swapping the stages negates the shift exactly
        shift: pbar.ln() - p0.ln(),
    }
}

pub fn usage_shift(corpus: &Corpus, word: &str) -> Result<ShiftEntry> {
    let token = corpus
        .vocab
        .id(word)
        .ok_or_else(|| Error::NotFound(format!("word {word:?} never occurs in the corpus")))?;
    Ok(StageContainment::tenure(corpus).entry(word, token))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShiftTable {
    /// Sorted by shift, then word.
    pub entries: Vec<ShiftEntry>,
    pub histogram: Vec<HistogramBin>,
    pub median: Option<f64>,
}

impl ShiftTable {
    pub fn from_entries(mut entries: Vec<ShiftEntry>) -> Self {
        entries.sort_by(|a, b| a.shift.total_cmp(&b.shift).then_with(|| a.word.cmp(&b.word)));
        let shifts: Vec<f64> = entries.iter().map(|e| e.shift).collect();
        Self {
            histogram: histogram(&shifts, HISTOGRAM_BIN_WIDTH),
            median: median(&shifts),
            entries,
        }
    }

    pub fn get(&self, word: &str) -> Option<&ShiftEntry> {
        self.entries.iter().find(|e| e.word == word)
    }
}

/// Fixed-width bins spanning the observed range; bin `i` covers `[i*w, (i+1)*w)`.
pub fn histogram(values: &[f64], width: f64) -> Vec<HistogramBin> {
    if values.is_empty() {
        return Vec::new();
    }
    let bin = |v: f64| (v / width).floor() as i64;
    let lo = values.iter().map(|&v| bin(v)).min().expect("non-empty");
    let hi = values.iter().map(|&v| bin(v)).max().expect("non-empty");
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &v in values {
        counts[(bin(v) - lo) as usize] += 1;
    }
    let scale = 1.0 / width;
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            bin_left: (lo + i as i64) as f64 / scale,
            count,
        })
        .collect()
}

/// Shift entries for every vocabulary word that occurs in the corpus.
pub fn shift_table(corpus: &Corpus, vocab: &BTreeSet<String>) -> ShiftTable {
    let counts = StageContainment::tenure(corpus);
    shift_table_with(corpus, &counts, vocab.iter().map(String::as_str))
}

pub fn shift_table_with<'a>(
    corpus: &Corpus,
    counts: &StageContainment,
    words: impl IntoIterator<Item = &'a str>,
) -> ShiftTable {
    ShiftTable::from_entries(
        words
            .into_iter()
            .filter_map(|w| corpus.vocab.id(w).map(|t| counts.entry(w, t)))
            .collect(),
    )
}

/// Shift table restricted to the vocabulary words characteristic of `component`.
pub fn component_shift_table(
    corpus: &Corpus,
    vocab: &BTreeSet<String>,
    stats: &ComponentWordStats,
    component: Component,
    threshold: f64,
) -> ShiftTable {
    let counts = StageContainment::tenure(corpus);
    let characteristic = stats.characteristic(corpus, component, threshold);
    shift_table_with(
        corpus,
        &counts,
        characteristic
            .iter()
            .map(|c| c.word.as_str())
            .filter(|w| vocab.contains(*w)),
    )
}
