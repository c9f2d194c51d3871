//! Paired new-vs-tenured probe.
//!
//! For each sampled individual one conversation is drawn from the first stage
//! and one from the tenured stage. A sparse L1 logistic regression over tf-idf
//! weighted bigrams is trained with grouped cross-validation (no individual in
//! both train and test), and accuracy is the share of held-out pairs whose
//! tenured conversation scores higher than the early one.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{Conversation, Corpus, Role, TokenId, TENURED_CAREER_LENGTH};
use crate::error::{Error, Result};
use crate::lifestage::{self, DEFAULT_STAGE_WIDTH};
use crate::rng::{substream, Key};

/// Bigram key: first token in the high 32 bits.
pub type Bigram = u64;

pub fn bigram(a: TokenId, b: TokenId) -> Bigram {
    (u64::from(a) << 32) | u64::from(b)
}

pub type BigramCounts = FxHashMap<Bigram, u32>;

/// Adjacent-token bigrams within each message spoken by `role`; never across messages.
pub fn bigram_counts(conv: &Conversation, role: Role) -> BigramCounts {
    let mut counts = BigramCounts::default();
    for m in conv.messages_by(role) {
        for w in m.tokens.windows(2) {
            *counts.entry(bigram(w[0], w[1])).or_default() += 1;
        }
    }
    counts
}

/// Sparse feature vector sorted by feature index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVector(pub Vec<(usize, f64)>);

impl FeatureVector {
    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.0.iter().map(|&(i, v)| weights[i] * v).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|(_, v)| v * v).sum()
    }
}

/// Bigram vocabulary and idf weights fitted on a set of training documents.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TfidfVocab {
    index: FxHashMap<Bigram, usize>,
    idf: Vec<f64>,
}

impl TfidfVocab {
    /// Keeps bigrams with document frequency share `<= max_df`, then the
    /// `max_features` most frequent by total count (ties by key).
    pub fn fit(docs: &[&BigramCounts], max_features: usize, max_df: f64) -> Self {
        let n_docs = docs.len();
        let mut stats: FxHashMap<Bigram, (u32, u64)> = FxHashMap::default();
        for doc in docs {
            for (&b, &c) in doc.iter() {
                let s = stats.entry(b).or_default();
                s.0 += 1;
                s.1 += u64::from(c);
            }
        }
        let mut kept: Vec<(Bigram, u32, u64)> = stats
            .into_iter()
            .filter(|&(_, (df, _))| f64::from(df) <= max_df * n_docs as f64)
            .map(|(b, (df, total))| (b, df, total))
            .collect();
        kept.sort_unstable_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
        kept.truncate(max_features);
        kept.sort_unstable_by_key(|k| k.0);
        let d = n_docs as f64;
        let idf = kept.iter().map(|&(_, df, _)| ((1.0 + d) / (1.0 + f64::from(df))).ln() + 1.0).collect();
        let index = kept.iter().enumerate().map(|(i, k)| (k.0, i)).collect();
        Self { index, idf }
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    pub fn idf(&self, b: Bigram) -> Option<f64> {
        self.index.get(&b).map(|&i| self.idf[i])
    }

    /// Raw counts times idf, L2-normalized. Out-of-vocabulary bigrams are dropped.
    pub fn transform(&self, doc: &BigramCounts) -> FeatureVector {
        let mut v: Vec<(usize, f64)> = doc
            .iter()
            .filter_map(|(b, &c)| self.index.get(b).map(|&i| (i, f64::from(c) * self.idf[i])))
            .collect();
        v.sort_unstable_by_key(|e| e.0);
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut v {
                e.1 /= norm;
            }
        }
        FeatureVector(v)
    }
}

pub fn extract_features(conv: &Conversation, role: Role, vocab: &TfidfVocab) -> FeatureVector {
    vocab.transform(&bigram_counts(conv, role))
}

/// L1-penalized logistic regression, `C * sum(logloss) + ||w||_1`, bias unpenalized.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticL1 {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticL1 {
    /// Accelerated proximal gradient (FISTA) for a fixed number of iterations.
    pub fn fit(x: &[FeatureVector], y: &[bool], n_features: usize, c: f64, iterations: usize) -> Self {
        let n = x.len().max(1) as f64;
        let lambda = 1.0 / (c * n);
        // Lipschitz bound of the mean logistic loss gradient, bias column included.
        let max_sq = x.iter().map(FeatureVector::norm_sq).fold(0.0, f64::max);
        let step = 1.0 / (0.25 * (max_sq + 1.0));
        let threshold = step * lambda;

        let mut w = vec![0.0; n_features];
        let mut b = 0.0;
        let mut z = w.clone();
        let mut zb = b;
        let mut t = 1.0f64;
        let mut grad = vec![0.0; n_features];
        for _ in 0..iterations {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for (xi, &yi) in x.iter().zip(y) {
                let r = sigmoid(xi.dot(&z) + zb) - if yi { 1.0 } else { 0.0 };
                for &(j, v) in &xi.0 {
                    grad[j] += r * v;
                }
                grad_b += r;
            }
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let momentum = (t - 1.0) / t_next;
            for j in 0..n_features {
                let u = z[j] - step * grad[j] / n;
                let w_new = u.signum() * (u.abs() - threshold).max(0.0);
                z[j] = w_new + momentum * (w_new - w[j]);
                w[j] = w_new;
            }
            let b_new = zb - step * grad_b / n;
            zb = b_new + momentum * (b_new - b);
            b = b_new;
            t = t_next;
        }
        Self { weights: w, bias: b }
    }

    pub fn score(&self, x: &FeatureVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn n_nonzero(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }
}

/// One individual's early and tenured conversation.
#[derive(Clone, Copy, Debug)]
pub struct Pair<'a> {
    pub individual_id: &'a str,
    pub early: &'a Conversation,
    pub tenured: &'a Conversation,
}

/// Samples `ceil(fraction * N)` eligible individuals and one random conversation
/// from each of their first and tenured stages.
pub fn build_pairs<'a, R: Rng + ?Sized>(corpus: &'a Corpus, sample_fraction: f64, rng: &mut R) -> Result<Vec<Pair<'a>>> {
    if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
        return Err(Error::Parameter(format!("sample fraction must be in (0, 1], got {sample_fraction}")));
    }
    let eligible: Vec<_> = corpus.with_min_conversations(TENURED_CAREER_LENGTH).collect();
    let k = ((sample_fraction * eligible.len() as f64).ceil() as usize).min(eligible.len());
    let mut chosen: Vec<usize> = rand::seq::index::sample(rng, eligible.len(), k).into_vec();
    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|i| {
            let ind = eligible[i];
            let early = lifestage::stage(ind, 0, DEFAULT_STAGE_WIDTH)?;
            let tenured = lifestage::tenured_stage(ind, DEFAULT_STAGE_WIDTH)?;
            Ok(Pair {
                individual_id: &ind.individual_id,
                early: early.conversations.choose(rng).expect("non-empty stage"),
                tenured: tenured.conversations.choose(rng).expect("non-empty stage"),
            })
        })
        .collect()
}

/// Hyperparameter grid: regularization strength, bigram cap, and document-frequency cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub c: Vec<f64>,
    pub max_features: Vec<usize>,
    pub max_df: Vec<f64>,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        Self {
            c: vec![0.1, 1.0, 10.0],
            max_features: vec![10_000, 50_000],
            max_df: vec![0.5, 1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub c: f64,
    pub max_features: usize,
    pub max_df: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub role: Role,
    pub k_folds: usize,
    /// Grouped folds inside each training split used for grid search.
    pub inner_folds: usize,
    pub grid: ProbeGrid,
    pub iterations: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            role: Role::Counselor,
            k_folds: 10,
            inner_folds: 3,
            grid: ProbeGrid::default(),
            iterations: 150,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_folds < 2 || self.inner_folds < 2 || self.iterations == 0 {
            return Err(Error::Parameter("need k_folds >= 2, inner_folds >= 2, iterations >= 1".into()));
        }
        if self.grid.c.is_empty() || self.grid.max_features.is_empty() || self.grid.max_df.is_empty() {
            return Err(Error::Parameter("hyperparameter grid has an empty axis".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub accuracy: f64,
    pub chosen: Hyper,
    pub n_features: usize,
    pub n_nonzero: usize,
    pub train_individuals: Vec<String>,
    pub test_individuals: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub role: Role,
    pub n_pairs: usize,
    /// Mean of the fold accuracies.
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub folds: Vec<FoldReport>,
}

struct PairDocs {
    early: BigramCounts,
    tenured: BigramCounts,
}

/// Share of pairs where the tenured conversation scores higher; ties count one half.
pub fn paired_accuracy(scores: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let (mut n, mut hits) = (0usize, 0.0f64);
    for (early, tenured) in scores {
        n += 1;
        if tenured > early {
            hits += 1.0;
        } else if tenured == early {
            hits += 0.5;
        }
    }
    if n == 0 {
        0.5
    } else {
        hits / n as f64
    }
}

struct Fitted {
    vocab: TfidfVocab,
    model: LogisticL1,
}

impl Fitted {
    fn accuracy(&self, docs: &[PairDocs], idx: &[usize]) -> f64 {
        paired_accuracy(idx.iter().map(|&i| {
            (
                self.model.score(&self.vocab.transform(&docs[i].early)),
                self.model.score(&self.vocab.transform(&docs[i].tenured)),
            )
        }))
    }
}

fn training_set<'a>(docs: &'a [PairDocs], idx: &[usize]) -> (Vec<&'a BigramCounts>, Vec<bool>) {
    let mut x = Vec::with_capacity(idx.len() * 2);
    let mut y = Vec::with_capacity(idx.len() * 2);
    for &i in idx {
        x.push(&docs[i].early);
        y.push(false);
        x.push(&docs[i].tenured);
        y.push(true);
    }
    (x, y)
}

/// Fits vocabulary, idf, and one model per `c` on the training pairs only.
fn fit_path(docs: &[PairDocs], train: &[usize], max_features: usize, max_df: f64, cs: &[f64], iterations: usize) -> Vec<Fitted> {
    let (raw, y) = training_set(docs, train);
    let vocab = TfidfVocab::fit(&raw, max_features, max_df);
    let x: Vec<FeatureVector> = raw.iter().map(|d| vocab.transform(d)).collect();
    cs.iter()
        .map(|&c| Fitted {
            model: LogisticL1::fit(&x, &y, vocab.len(), c, iterations),
            vocab: vocab.clone(),
        })
        .collect()
}

fn select_hyper(docs: &[PairDocs], train: &[usize], cfg: &ProbeConfig) -> Hyper {
    type Split = (Vec<usize>, Vec<usize>);
    let inner: Vec<Split> = (0..cfg.inner_folds)
        .map(|f| {
            type Indexed = Vec<(usize, usize)>;
            let (test, fit): (Indexed, Indexed) =
                train.iter().copied().enumerate().partition(|(pos, _)| pos % cfg.inner_folds == f);
            let split: Split = (fit.into_iter().map(|p| p.1).collect(), test.into_iter().map(|p| p.1).collect());
            split
        })
        .filter(|(fit, test)| !fit.is_empty() && !test.is_empty())
        .collect();

    let mut best: Option<(f64, Hyper)> = None;
    for &max_features in &cfg.grid.max_features {
        for &max_df in &cfg.grid.max_df {
            let mut totals = vec![0.0; cfg.grid.c.len()];
            for (fit, test) in &inner {
                for (k, fitted) in fit_path(docs, fit, max_features, max_df, &cfg.grid.c, cfg.iterations).iter().enumerate() {
                    totals[k] += fitted.accuracy(docs, test);
                }
            }
            for (k, &c) in cfg.grid.c.iter().enumerate() {
                let score = totals[k] / inner.len().max(1) as f64;
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, Hyper { c, max_features, max_df }));
                }
            }
        }
    }
    best.expect("validated grid is non-empty").1
}

/// Assigns individuals to `k` folds after a seeded shuffle.
pub fn assign_folds<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Grouped k-fold paired accuracy with inner grid search.
pub fn grouped_cv_accuracy<R: Rng + ?Sized>(pairs: &[Pair<'_>], cfg: &ProbeConfig, rng: &mut R) -> Result<ProbeReport> {
    cfg.validate()?;
    if pairs.len() < cfg.k_folds {
        return Err(Error::Parameter(format!(
            "{} individuals cannot fill {} folds",
            pairs.len(),
            cfg.k_folds
        )));
    }
    let docs: Vec<PairDocs> = pairs
        .par_iter()
        .map(|p| PairDocs {
            early: bigram_counts(p.early, cfg.role),
            tenured: bigram_counts(p.tenured, cfg.role),
        })
        .collect();
    let folds = assign_folds(pairs.len(), cfg.k_folds, rng);

    let reports: Vec<FoldReport> = (0..cfg.k_folds)
        .into_par_iter()
        .map(|f| {
            let test = &folds[f];
            let train: Vec<usize> = (0..cfg.k_folds).filter(|&g| g != f).flat_map(|g| folds[g].iter().copied()).collect();
            let chosen = select_hyper(&docs, &train, cfg);
            let fitted = fit_path(&docs, &train, chosen.max_features, chosen.max_df, &[chosen.c], cfg.iterations)
                .pop()
                .expect("one model");
            let ids = |idx: &[usize]| idx.iter().map(|&i| pairs[i].individual_id.to_owned()).collect();
            FoldReport {
                fold: f,
                accuracy: fitted.accuracy(&docs, test),
                chosen,
                n_features: fitted.vocab.len(),
                n_nonzero: fitted.model.n_nonzero(),
                train_individuals: ids(&train),
                test_individuals: ids(test),
            }
        })
        .collect();

    let fold_accuracies: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    Ok(ProbeReport {
        role: cfg.role,
        n_pairs: pairs.len(),
        accuracy: fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64,
        fold_accuracies,
        folds: reports,
    })
}

/// Samples pairs and runs the grouped cross-validation, both seeded from `seed`.
pub fn run_probe(corpus: &Corpus, sample_fraction: f64, cfg: &ProbeConfig, seed: u64) -> Result<ProbeReport> {
    let mut rng = substream(seed, &[Key::Str("probe"), Key::Str("pairs")]);
    let pairs = build_pairs(corpus, sample_fraction, &mut rng)?;
    let mut rng = substream(seed, &[Key::Str("probe"), Key::Str("folds")]);
    grouped_cv_accuracy(&pairs, cfg, &mut rng)
}
