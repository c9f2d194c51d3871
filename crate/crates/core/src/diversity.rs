//! Within-, between-, and relative diversity of an individual over a career window.
//!
//! A window's conversations are split into interleaved train/test halves. Each
//! iteration fits a unigram model on `train_budget` tokens drawn from the pooled
//! train half and scores `eval_budget` tokens drawn from each test conversation.
//! The between measure replaces the individual's model with a model fitted the
//! same way on a randomly drawn peer's train half for the same window.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Conversation, Corpus, Individual, Role, TokenId};
use crate::error::{Error, Result};
use crate::langmodel::{sample_tokens, SamplingParams, UnigramLm};
use crate::lifestage::{self, LifeStage, DEFAULT_STAGE_WIDTH};
use crate::rng::{substream, Key};
use crate::segmentation::{split_fifths, Component};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Within,
    Between,
    Relative,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Within, Measure::Between, Measure::Relative];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Within => "within",
            Measure::Between => "between",
            Measure::Relative => "relative",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown measure {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeerPolicy {
    #[default]
    SameCohort,
    Any,
}

/// Which counselor tokens of a conversation feed the models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    Whole,
    Component(Component),
}

impl Scope {
    pub fn component(self) -> Option<Component> {
        match self {
            Scope::Whole => None,
            Scope::Component(c) => Some(c),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Scope::Whole => "whole",
            Scope::Component(c) => c.name(),
        }
    }

    /// Tokens of `conv` in this scope, or `None` if the conversation cannot be segmented.
    pub fn tokens(self, conv: &Conversation) -> Option<Vec<TokenId>> {
        match self {
            Scope::Whole => Some(conv.role_tokens(Role::Counselor)),
            Scope::Component(c) => split_fifths(conv).ok().map(|s| s[c.index()].tokens()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityConfig {
    pub sampling: SamplingParams,
    pub min_test_convs: usize,
    pub peer_policy: PeerPolicy,
    pub stage_width: usize,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        Self {
            sampling: SamplingParams::default(),
            min_test_convs: 1,
            peer_policy: PeerPolicy::SameCohort,
            stage_width: DEFAULT_STAGE_WIDTH,
        }
    }
}

impl DiversityConfig {
    /// Defaults for per-component analysis: both budgets divided by five.
    pub fn component_default() -> Self {
        Self::default().scaled_for_components()
    }

    pub fn scaled_for_components(mut self) -> Self {
        self.sampling.train_budget = (self.sampling.train_budget / 5).max(1);
        self.sampling.eval_budget = (self.sampling.eval_budget / 5).max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        if self.min_test_convs == 0 {
            return Err(Error::Parameter("min_test_convs must be >= 1".into()));
        }
        if self.stage_width < 2 {
            return Err(Error::Parameter("stage_width must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityRecord {
    pub individual_id: String,
    pub stage_index: usize,
    pub component: Option<Component>,
    pub measure: Measure,
    /// Bits per token; relative values may be negative.
    pub value: f64,
    pub n_test_convs: usize,
    pub n_samples_used: usize,
}

/// A cell that could not be computed, with the reason.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub individual_id: String,
    pub stage_index: usize,
    pub component: Option<Component>,
    pub measure: Measure,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiversityRun {
    pub records: Vec<DiversityRecord>,
    pub skipped: Vec<SkippedCell>,
}

impl DiversityRun {
    pub fn value(&self, individual_id: &str, stage_index: usize, measure: Measure) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.individual_id == individual_id && r.stage_index == stage_index && r.measure == measure)
            .map(|r| r.value)
    }

    pub fn of_measure(&self, measure: Measure) -> impl Iterator<Item = &DiversityRecord> {
        self.records.iter().filter(move |r| r.measure == measure)
    }
}

/// Even positions train, odd positions test.
pub fn split_interleaved<T>(items: &[T]) -> Result<(Vec<&T>, Vec<&T>)> {
    if items.len() < 2 {
        return Err(Error::Parameter(format!(
            "interleaved split needs >= 2 conversations, got {}",
            items.len()
        )));
    }
    Ok((items.iter().step_by(2).collect(), items.iter().skip(1).step_by(2).collect()))
}

pub fn interleaved_split<'a>(stage: &LifeStage<'a>) -> Result<(Vec<&'a Conversation>, Vec<&'a Conversation>)> {
    split_interleaved(stage.conversations)
}

/// Token pools of one individual's window, ready for resampling.
#[derive(Clone, Debug)]
pub struct WindowPools {
    /// Pooled counselor tokens of the train half.
    pub train: Vec<TokenId>,
    /// Tokens of each test conversation with at least `eval_budget` tokens.
    pub test: Vec<Vec<TokenId>>,
}

impl WindowPools {
    pub fn new(conversations: &[Conversation], scope: Scope, eval_budget: usize) -> Result<Self> {
        let (train, test) = split_interleaved(conversations)?;
        let train = train.into_iter().filter_map(|c| scope.tokens(c)).flatten().collect();
        let test = test
            .into_iter()
            .filter_map(|c| scope.tokens(c))
            .filter(|t| t.len() >= eval_budget)
            .collect();
        Ok(Self { train, test })
    }

    fn check_train(&self, params: &SamplingParams) -> Result<()> {
        if self.train.len() < params.train_budget {
            return Err(Error::Eligibility(format!(
                "train half has {} tokens, budget is {}",
                self.train.len(),
                params.train_budget
            )));
        }
        Ok(())
    }

    fn check(&self, cfg: &DiversityConfig) -> Result<()> {
        self.check_train(&cfg.sampling)?;
        if self.test.len() < cfg.min_test_convs.max(1) {
            return Err(Error::Eligibility(format!(
                "{} test conversations with >= {} tokens, need {}",
                self.test.len(),
                cfg.sampling.eval_budget,
                cfg.min_test_convs.max(1)
            )));
        }
        Ok(())
    }

    fn sample_model<R: Rng + ?Sized>(&self, params: &SamplingParams, rng: &mut R) -> Result<UnigramLm<TokenId>> {
        UnigramLm::fit(&sample_tokens(&self.train, params.train_budget, rng)?)
    }
}

/// Mean cross-entropies of one window. `between`/`relative` are present when peers were given.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowEstimate {
    pub within: f64,
    pub between: Option<f64>,
    pub relative: Option<f64>,
    pub n_test_convs: usize,
    pub n_samples_used: usize,
}

/// Runs the resampling protocol on prepared pools.
///
/// Each test conversation is sampled once per iteration and scored against both
/// models, so `relative` is the mean of paired differences.
pub fn estimate<R: Rng + ?Sized>(
    own: &WindowPools,
    peers: &[&WindowPools],
    cfg: &DiversityConfig,
    rng: &mut R,
) -> Result<WindowEstimate> {
    cfg.validate()?;
    own.check(cfg)?;
    for p in peers {
        p.check_train(&cfg.sampling)?;
    }
    let params = &cfg.sampling;
    let n_test = own.test.len() as f64;
    let (mut within_sum, mut between_sum, mut relative_sum) = (0.0, 0.0, 0.0);
    for _ in 0..params.n_samples {
        let own_lm = own.sample_model(params, rng)?;
        let peer_lm = if peers.is_empty() {
            None
        } else {
            let j = rng.gen_range(0..peers.len());
            Some(peers[j].sample_model(params, rng)?)
        };
        let (mut w_iter, mut b_iter, mut r_iter) = (0.0, 0.0, 0.0);
        for conv in &own.test {
            let sample = sample_tokens(conv, params.eval_budget, rng)?;
            let w = own_lm.cross_entropy(&sample)?;
            w_iter += w;
            if let Some(lm) = &peer_lm {
                let b = lm.cross_entropy(&sample)?;
                b_iter += b;
                r_iter += b - w;
            }
        }
        within_sum += w_iter / n_test;
        between_sum += b_iter / n_test;
        relative_sum += r_iter / n_test;
    }
    let n = params.n_samples as f64;
    let with_peers = !peers.is_empty();
    Ok(WindowEstimate {
        within: within_sum / n,
        between: with_peers.then_some(between_sum / n),
        relative: with_peers.then_some(relative_sum / n),
        n_test_convs: own.test.len(),
        n_samples_used: params.n_samples,
    })
}

/// Between-only estimate: every iteration draws a peer and scores fresh test samples.
pub fn estimate_between<R: Rng + ?Sized>(
    own: &WindowPools,
    peers: &[&WindowPools],
    cfg: &DiversityConfig,
    rng: &mut R,
) -> Result<f64> {
    cfg.validate()?;
    own.check(cfg)?;
    if peers.is_empty() {
        return Err(Error::Eligibility("no eligible peer".into()));
    }
    for p in peers {
        p.check_train(&cfg.sampling)?;
    }
    let params = &cfg.sampling;
    let mut total = 0.0;
    for _ in 0..params.n_samples {
        let peer = peers[rng.gen_range(0..peers.len())];
        let lm = peer.sample_model(params, rng)?;
        let mut sum = 0.0;
        for conv in &own.test {
            sum += lm.cross_entropy(&sample_tokens(conv, params.eval_budget, rng)?)?;
        }
        total += sum / own.test.len() as f64;
    }
    Ok(total / params.n_samples as f64)
}

fn is_peer(cfg: &DiversityConfig, individual: &Individual, other: &Individual) -> bool {
    other.individual_id != individual.individual_id
        && (cfg.peer_policy == PeerPolicy::Any || other.cohort == individual.cohort)
}

fn stage_pools(individual: &Individual, stage_index: usize, cfg: &DiversityConfig, scope: Scope) -> Result<WindowPools> {
    let stage = lifestage::stage(individual, stage_index, cfg.stage_width)?;
    WindowPools::new(stage.conversations, scope, cfg.sampling.eval_budget)
}

fn eligible_peer_pools(
    individual: &Individual,
    stage_index: usize,
    peers: &[&Individual],
    cfg: &DiversityConfig,
    scope: Scope,
) -> Result<Vec<WindowPools>> {
    let pools: Vec<WindowPools> = peers
        .iter()
        .filter(|p| is_peer(cfg, individual, p))
        .filter_map(|p| stage_pools(p, stage_index, cfg, scope).ok())
        .filter(|p| p.train.len() >= cfg.sampling.train_budget)
        .collect();
    if pools.is_empty() {
        return Err(Error::Eligibility(format!(
            "{} has no eligible peer at stage {stage_index}",
            individual.individual_id
        )));
    }
    Ok(pools)
}

fn record(individual: &Individual, stage_index: usize, scope: Scope, measure: Measure, value: f64, est: &WindowEstimate) -> DiversityRecord {
    DiversityRecord {
        individual_id: individual.individual_id.clone(),
        stage_index,
        component: scope.component(),
        measure,
        value,
        n_test_convs: est.n_test_convs,
        n_samples_used: est.n_samples_used,
    }
}

pub fn within_diversity<R: Rng + ?Sized>(
    individual: &Individual,
    stage_index: usize,
    cfg: &DiversityConfig,
    rng: &mut R,
) -> Result<DiversityRecord> {
    let pools = stage_pools(individual, stage_index, cfg, Scope::Whole)?;
    let est = estimate(&pools, &[], cfg, rng)?;
    Ok(record(individual, stage_index, Scope::Whole, Measure::Within, est.within, &est))
}

/// `peers` may include `individual` and out-of-cohort individuals; they are filtered here.
pub fn between_diversity<R: Rng + ?Sized>(
    individual: &Individual,
    stage_index: usize,
    peers: &[&Individual],
    cfg: &DiversityConfig,
    rng: &mut R,
) -> Result<DiversityRecord> {
    let pools = stage_pools(individual, stage_index, cfg, Scope::Whole)?;
    let peer_pools = eligible_peer_pools(individual, stage_index, peers, cfg, Scope::Whole)?;
    let refs: Vec<&WindowPools> = peer_pools.iter().collect();
    let value = estimate_between(&pools, &refs, cfg, rng)?;
    Ok(DiversityRecord {
        individual_id: individual.individual_id.clone(),
        stage_index,
        component: None,
        measure: Measure::Between,
        value,
        n_test_convs: pools.test.len(),
        n_samples_used: cfg.sampling.n_samples,
    })
}

/// All three measures from one joint pass; relative is exactly between minus within
/// up to rounding.
pub fn stage_diversity<R: Rng + ?Sized>(
    individual: &Individual,
    stage_index: usize,
    peers: &[&Individual],
    cfg: &DiversityConfig,
    rng: &mut R,
) -> Result<[DiversityRecord; 3]> {
    let pools = stage_pools(individual, stage_index, cfg, Scope::Whole)?;
    let peer_pools = eligible_peer_pools(individual, stage_index, peers, cfg, Scope::Whole)?;
    let refs: Vec<&WindowPools> = peer_pools.iter().collect();
    let est = estimate(&pools, &refs, cfg, rng)?;
    let rec = |m, v| record(individual, stage_index, Scope::Whole, m, v, &est);
    Ok([
        rec(Measure::Within, est.within),
        rec(Measure::Between, est.between.expect("peers present")),
        rec(Measure::Relative, est.relative.expect("peers present")),
    ])
}

pub fn relative_diversity<R: Rng + ?Sized>(
    individual: &Individual,
    stage_index: usize,
    peers: &[&Individual],
    cfg: &DiversityConfig,
    rng: &mut R,
) -> Result<DiversityRecord> {
    let [_, _, relative] = stage_diversity(individual, stage_index, peers, cfg, rng)?;
    Ok(relative)
}

/// A career window to analyze, labelled by `index` in the output records.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    pub index: usize,
    pub range: Range<usize>,
}

/// Every complete stage at `width` that any individual reaches.
pub fn stage_windows(corpus: &Corpus, width: usize) -> Vec<Window> {
    let max_len = corpus.iter().map(Individual::len).max().unwrap_or(0);
    (0..max_len / width.max(1))
        .map(|i| Window {
            index: i,
            range: i * width..(i + 1) * width,
        })
        .collect()
}

/// Whole-conversation records for every (individual, stage, measure) cell.
pub fn compute_all(corpus: &Corpus, cfg: &DiversityConfig, seed: u64) -> Result<DiversityRun> {
    compute_scope(corpus, cfg, Scope::Whole, seed)
}

pub fn compute_scope(corpus: &Corpus, cfg: &DiversityConfig, scope: Scope, seed: u64) -> Result<DiversityRun> {
    cfg.validate()?;
    let windows = stage_windows(corpus, cfg.stage_width);
    compute_windows(corpus, cfg, scope, &windows, seed)
}

/// Computes all measures for each individual over each window.
///
/// Each cell draws from its own RNG substream keyed by individual, scope, and
/// window, so output does not depend on the thread pool size.
pub fn compute_windows(
    corpus: &Corpus,
    cfg: &DiversityConfig,
    scope: Scope,
    windows: &[Window],
    seed: u64,
) -> Result<DiversityRun> {
    cfg.validate()?;
    let individuals: Vec<&Individual> = corpus.iter().collect();
    let cells: Vec<(usize, usize)> = (0..individuals.len())
        .flat_map(|i| (0..windows.len()).map(move |w| (i, w)))
        .collect();

    // Pools for every (individual, window); None where the window is out of career.
    let pools: Vec<Option<WindowPools>> = cells
        .par_iter()
        .map(|&(i, w)| {
            let convs = individuals[i].conversations.get(windows[w].range.clone())?;
            WindowPools::new(convs, scope, cfg.sampling.eval_budget).ok()
        })
        .collect();
    let pool_at = |i: usize, w: usize| pools[i * windows.len() + w].as_ref();

    let results: Vec<(Vec<DiversityRecord>, Vec<SkippedCell>)> = cells
        .par_iter()
        .filter(|&&(i, w)| pool_at(i, w).is_some())
        .map(|&(i, w)| {
            let individual = individuals[i];
            let window = &windows[w];
            let own = pool_at(i, w).expect("filtered");
            let peers: Vec<&WindowPools> = individuals
                .iter()
                .enumerate()
                .filter(|(_, p)| is_peer(cfg, individual, p))
                .filter_map(|(j, _)| pool_at(j, w))
                .filter(|p| p.train.len() >= cfg.sampling.train_budget)
                .collect();
            let mut rng = substream(
                seed,
                &[
                    Key::Str("diversity"),
                    Key::Str(&individual.individual_id),
                    Key::Str(scope.label()),
                    window.range.start.into(),
                    window.range.end.into(),
                ],
            );
            let skip = |measure: Measure, reason: String| SkippedCell {
                individual_id: individual.individual_id.clone(),
                stage_index: window.index,
                component: scope.component(),
                measure,
                reason,
            };
            match estimate(own, &peers, cfg, &mut rng) {
                Ok(est) => {
                    let mut recs = vec![record(individual, window.index, scope, Measure::Within, est.within, &est)];
                    let mut skipped = Vec::new();
                    match (est.between, est.relative) {
                        (Some(b), Some(r)) => {
                            recs.push(record(individual, window.index, scope, Measure::Between, b, &est));
                            recs.push(record(individual, window.index, scope, Measure::Relative, r, &est));
                        }
                        _ => {
                            for m in [Measure::Between, Measure::Relative] {
                                skipped.push(skip(m, "no eligible peer".into()));
                            }
                        }
                    }
                    (recs, skipped)
                }
                Err(e) => (Vec::new(), Measure::ALL.iter().map(|&m| skip(m, e.to_string())).collect()),
            }
        })
        .collect();

    let mut run = DiversityRun::default();
    for (recs, skipped) in results {
        run.records.extend(recs);
        run.skipped.extend(skipped);
    }
    Ok(run)
}
