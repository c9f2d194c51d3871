//! Share of helpful ratings per career window, and how it relates to diversity.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Individual, Rating};
use crate::diversity::{compute_windows, DiversityConfig, Measure, Scope, Window};
use crate::error::{Error, Result};
use crate::stats::mann_whitney_u;

pub const MIN_RATINGS: usize = 4;

/// Experienced window (conversations 80..120) used for the concurrent comparison.
pub const EXPERIENCED_WINDOW: Range<usize> = 80..120;
/// Earlier window (conversations 40..80) for the lagged comparison.
pub const EARLIER_WINDOW: Range<usize> = 40..80;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessRecord {
    pub individual_id: String,
    pub window: (usize, usize),
    pub n_ratings: usize,
    pub frac_positive: f64,
}

/// Positive share over rated conversations only. Needs [`MIN_RATINGS`] ratings.
pub fn window_effectiveness(individual: &Individual, window: Range<usize>) -> Result<EffectivenessRecord> {
    let convs = individual.conversations.get(window.clone()).ok_or_else(|| {
        Error::Eligibility(format!(
            "{} has {} conversations, window {window:?} is out of range",
            individual.individual_id,
            individual.len()
        ))
    })?;
    let (mut rated, mut positive) = (0usize, 0usize);
    for c in convs {
        match c.rating {
            Rating::Helpful => {
                rated += 1;
                positive += 1;
            }
            Rating::NotHelpful => rated += 1,
            Rating::None => {}
        }
    }
    if rated < MIN_RATINGS {
        return Err(Error::Eligibility(format!(
            "{} has {rated} ratings in {window:?}, need {MIN_RATINGS}",
            individual.individual_id
        )));
    }
    Ok(EffectivenessRecord {
        individual_id: individual.individual_id.clone(),
        window: (window.start, window.end),
        n_ratings: rated,
        frac_positive: positive as f64 / rated as f64,
    })
}

pub fn all_effectiveness(corpus: &Corpus, window: Range<usize>) -> Vec<EffectivenessRecord> {
    corpus
        .iter()
        .filter_map(|i| window_effectiveness(i, window.clone()).ok())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub n_individuals: usize,
    pub tercile_size: usize,
    pub top_mean: f64,
    pub bottom_mean: f64,
    pub u_statistic: f64,
    pub p_value: f64,
}

/// Splits individuals present in both inputs into terciles by diversity (ties by
/// id) and compares the effectiveness of the top and bottom thirds with a
/// two-sided Mann-Whitney U test.
pub fn tercile_compare(diversity: &BTreeMap<String, f64>, effectiveness: &[EffectivenessRecord]) -> Result<Comparison> {
    let mut joined: Vec<(f64, &str, f64)> = effectiveness
        .iter()
        .filter_map(|e| diversity.get(&e.individual_id).map(|&d| (d, e.individual_id.as_str(), e.frac_positive)))
        .collect();
    if joined.len() < 3 {
        return Err(Error::Eligibility(format!(
            "{} individuals have both diversity and effectiveness, need 3",
            joined.len()
        )));
    }
    joined.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let k = joined.len() / 3;
    let bottom: Vec<f64> = joined[..k].iter().map(|x| x.2).collect();
    let top: Vec<f64> = joined[joined.len() - k..].iter().map(|x| x.2).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mwu = mann_whitney_u(&top, &bottom)?;
    Ok(Comparison {
        n_individuals: joined.len(),
        tercile_size: k,
        top_mean: mean(&top),
        bottom_mean: mean(&bottom),
        u_statistic: mwu.u_a,
        p_value: mwu.p_value,
    })
}

/// One diversity measure per individual over a career window, using the same
/// interleaved split and budgets as the stage analysis.
pub fn window_diversity(
    corpus: &Corpus,
    window: Range<usize>,
    cfg: &DiversityConfig,
    measure: Measure,
    seed: u64,
) -> Result<BTreeMap<String, f64>> {
    let width = window.len().max(1);
    let windows = [Window {
        index: window.start / width,
        range: window,
    }];
    let run = compute_windows(corpus, cfg, Scope::Whole, &windows, seed)?;
    Ok(run
        .records
        .into_iter()
        .filter(|r| r.measure == measure)
        .map(|r| (r.individual_id, r.value))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowComparison {
    pub measure: Measure,
    pub diversity_window: (usize, usize),
    pub effectiveness_window: (usize, usize),
    #[serde(flatten)]
    pub comparison: Comparison,
}

pub fn compare_windows(
    corpus: &Corpus,
    cfg: &DiversityConfig,
    measure: Measure,
    diversity_window: Range<usize>,
    effectiveness_window: Range<usize>,
    seed: u64,
) -> Result<WindowComparison> {
    let diversity = window_diversity(corpus, diversity_window.clone(), cfg, measure, seed)?;
    let effectiveness = all_effectiveness(corpus, effectiveness_window.clone());
    Ok(WindowComparison {
        measure,
        diversity_window: (diversity_window.start, diversity_window.end),
        effectiveness_window: (effectiveness_window.start, effectiveness_window.end),
        comparison: tercile_compare(&diversity, &effectiveness)?,
    })
}

/// Diversity and effectiveness both over conversations 80..120.
pub fn concurrent_compare(corpus: &Corpus, cfg: &DiversityConfig, measure: Measure, seed: u64) -> Result<WindowComparison> {
    compare_windows(corpus, cfg, measure, EXPERIENCED_WINDOW, EXPERIENCED_WINDOW, seed)
}

/// Diversity over conversations 40..80 against effectiveness over 80..120.
pub fn lagged_compare(corpus: &Corpus, cfg: &DiversityConfig, measure: Measure, seed: u64) -> Result<WindowComparison> {
    compare_windows(corpus, cfg, measure, EARLIER_WINDOW, EXPERIENCED_WINDOW, seed)
}
