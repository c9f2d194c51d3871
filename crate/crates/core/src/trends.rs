//! Change toward the tenured stage: increase fractions, the stage-by-component
//! heatmap, surface-statistic null checks, and tenure-duration correlation.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Role, TENURED_CAREER_LENGTH};
use crate::diversity::{self, DiversityConfig, DiversityRecord, DiversityRun, Measure};
use crate::error::{Error, Result};
use crate::lifestage::{tenured_stage_index, DEFAULT_STAGE_WIDTH};
use crate::rng::{substream, Key};
use crate::segmentation::{component_diversity, Component};
use crate::stats::{binom_test_two_sided, bootstrap_mean_ci, spearman, Interval};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendCell {
    pub measure: Measure,
    pub component: Option<Component>,
    pub stage_index: usize,
    /// Share of individuals whose tenured value is strictly greater.
    pub frac_increase: f64,
    pub n: usize,
    pub p_value: f64,
}

impl TrendCell {
    pub fn significant(&self) -> bool {
        self.p_value < SIGNIFICANCE_LEVEL
    }
}

/// Increase fraction from `stage_index` to the default tenured stage.
pub fn increase_fraction(records: &[DiversityRecord], measure: Measure, stage_index: usize) -> Result<TrendCell> {
    increase_fraction_vs(records, measure, stage_index, tenured_stage_index(DEFAULT_STAGE_WIDTH))
}

/// Increase fraction from `stage_index` to `tenured_index`, with a two-sided
/// exact binomial test against one half. Ties count as non-increase.
pub fn increase_fraction_vs(
    records: &[DiversityRecord],
    measure: Measure,
    stage_index: usize,
    tenured_index: usize,
) -> Result<TrendCell> {
    type Endpoints = (Option<f64>, Option<f64>);
    let mut pairs: BTreeMap<(&str, Option<Component>), Endpoints> = BTreeMap::new();
    let mut components = Vec::new();
    for r in records.iter().filter(|r| r.measure == measure) {
        let slot = pairs.entry((&r.individual_id, r.component)).or_default();
        if r.stage_index == stage_index {
            slot.0 = Some(r.value);
        }
        if r.stage_index == tenured_index {
            slot.1 = Some(r.value);
        }
        if !components.contains(&r.component) {
            components.push(r.component);
        }
    }
    let (mut n, mut k) = (0u64, 0u64);
    for (early, late) in pairs.values() {
        if let (Some(early), Some(late)) = (early, late) {
            n += 1;
            if late > early {
                k += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::Eligibility(format!(
            "no individual has {measure} records at both stage {stage_index} and stage {tenured_index}"
        )));
    }
    Ok(TrendCell {
        measure,
        component: if components.len() == 1 { components[0] } else { None },
        stage_index,
        frac_increase: k as f64 / n as f64,
        n: n as usize,
        p_value: binom_test_two_sided(k, n, 0.5)?.p_value,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    /// `None` is the whole-conversation row.
    pub component: Option<Component>,
    pub measure: Measure,
    pub stage_index: usize,
    /// `None` when no individual had both records.
    pub cell: Option<TrendCell>,
}

impl HeatmapCell {
    pub fn row_label(&self) -> String {
        match self.component {
            None => format!("whole/{}", self.measure),
            Some(c) => format!("{c}/{}", self.measure),
        }
    }

    pub fn significant(&self) -> bool {
        self.cell.as_ref().is_some_and(TrendCell::significant)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub tenured_index: usize,
    pub cells: Vec<HeatmapCell>,
}

impl Heatmap {
    pub fn get(&self, component: Option<Component>, measure: Measure, stage_index: usize) -> Option<&HeatmapCell> {
        self.cells
            .iter()
            .find(|c| c.component == component && c.measure == measure && c.stage_index == stage_index)
    }

    /// Assembles rows for the whole conversation and each component that has a run.
    pub fn from_runs(whole: &DiversityRun, components: &[(Component, DiversityRun)], tenured_index: usize) -> Self {
        let mut rows: Vec<(Option<Component>, &DiversityRun)> = vec![(None, whole)];
        rows.extend(components.iter().map(|(c, run)| (Some(*c), run)));
        let mut cells = Vec::new();
        for (component, run) in rows {
            for measure in Measure::ALL {
                for stage_index in 0..tenured_index {
                    cells.push(HeatmapCell {
                        component,
                        measure,
                        stage_index,
                        cell: increase_fraction_vs(&run.records, measure, stage_index, tenured_index).ok(),
                    });
                }
            }
        }
        Self { tenured_index, cells }
    }
}

/// Runs whole-conversation diversity with `cfg` and per-component diversity with
/// `cfg` scaled for components, then assembles the heatmap.
pub fn heatmap(corpus: &Corpus, cfg: &DiversityConfig, seed: u64) -> Result<Heatmap> {
    let whole = diversity::compute_all(corpus, cfg, seed)?;
    let component_cfg = cfg.scaled_for_components();
    let components = Component::ALL
        .into_iter()
        .map(|c| Ok((c, component_diversity(corpus, c, &component_cfg, seed)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Heatmap::from_runs(&whole, &components, tenured_stage_index(cfg.stage_width)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceStatRow {
    pub stage_index: usize,
    pub n_individuals: usize,
    pub words_per_message: f64,
    pub words_per_message_ci: Interval,
    pub messages_per_conversation: f64,
    pub messages_per_conversation_ci: Interval,
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Per-stage means of counselor message length and counselor messages per
/// conversation, with 95% bootstrap intervals over individuals.
pub fn surface_stats(corpus: &Corpus, width: usize, seed: u64) -> Result<Vec<SurfaceStatRow>> {
    let n_stages = corpus.iter().map(|i| i.len() / width.max(1)).max().unwrap_or(0);
    let mut rows = Vec::new();
    for stage in 0..n_stages {
        let (mut words, mut msgs) = (Vec::new(), Vec::new());
        for ind in corpus.iter() {
            let Some(convs) = ind.conversations.get(stage * width..(stage + 1) * width) else {
                continue;
            };
            let counselor: Vec<usize> = convs
                .iter()
                .flat_map(|c| c.messages_by(Role::Counselor).map(|m| m.tokens.len()))
                .collect();
            if counselor.is_empty() {
                continue;
            }
            words.push(counselor.iter().sum::<usize>() as f64 / counselor.len() as f64);
            msgs.push(counselor.len() as f64 / convs.len() as f64);
        }
        if words.is_empty() {
            continue;
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let mut rng = substream(seed, &[Key::Str("surface"), stage.into()]);
        rows.push(SurfaceStatRow {
            stage_index: stage,
            n_individuals: words.len(),
            words_per_message: mean(&words),
            words_per_message_ci: bootstrap(&words, &mut rng)?,
            messages_per_conversation: mean(&msgs),
            messages_per_conversation_ci: bootstrap(&msgs, &mut rng)?,
        });
    }
    Ok(rows)
}

fn bootstrap<R: Rng>(values: &[f64], rng: &mut R) -> Result<Interval> {
    bootstrap_mean_ci(values, BOOTSTRAP_RESAMPLES, 0.95, rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureCorrelation {
    pub measure: Measure,
    pub n: usize,
    /// `None` when ranks are constant.
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationCorrelation {
    pub correlations: Vec<MeasureCorrelation>,
    /// Individuals without timestamps on their first and 120th conversations.
    pub excluded: Vec<String>,
}

/// Spearman correlation between the time taken to reach the 120th conversation
/// and each measure's change from the first to the tenured stage.
pub fn tenure_duration_correlation(corpus: &Corpus, run: &DiversityRun) -> Result<DurationCorrelation> {
    let tenured = tenured_stage_index(DEFAULT_STAGE_WIDTH);
    let mut durations = BTreeMap::new();
    let mut excluded = Vec::new();
    for ind in corpus.with_min_conversations(TENURED_CAREER_LENGTH) {
        let first = ind.conversations[0].timestamp;
        let last = ind.conversations[TENURED_CAREER_LENGTH - 1].timestamp;
        match (first, last) {
            (Some(a), Some(b)) => {
                durations.insert(ind.individual_id.as_str(), (b - a) as f64);
            }
            _ => excluded.push(ind.individual_id.clone()),
        }
    }
    if durations.len() < 3 {
        return Err(Error::Eligibility(format!(
            "{} individuals have timestamps, need 3; excluded: {}",
            durations.len(),
            excluded.join(", ")
        )));
    }
    let mut correlations = Vec::new();
    for measure in Measure::ALL {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (id, &duration) in &durations {
            if let (Some(early), Some(late)) = (run.value(id, 0, measure), run.value(id, tenured, measure)) {
                xs.push(duration);
                ys.push(late - early);
            }
        }
        let rho = if xs.len() >= 3 { spearman(&xs, &ys)? } else { None };
        correlations.push(MeasureCorrelation { measure, n: xs.len(), rho });
    }
    Ok(DurationCorrelation { correlations, excluded })
}
