//! Five-way split of a conversation's counselor messages into functional components.

use std::fmt;
use std::str::FromStr;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::corpus::{Conversation, Corpus, Message, Role, TokenId};
use crate::diversity::{self, DiversityConfig, DiversityRun, Scope};
use crate::error::{Error, Result};

/// Conversations need this many counselor messages to be split.
pub const MIN_COUNSELOR_MESSAGES_FOR_FIFTHS: usize = 20;

pub const DEFAULT_CHARACTERISTIC_THRESHOLD: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Hello,
    ProblemExploration,
    GoalIdentification,
    ProblemSolving,
    Goodbye,
}

impl Component {
    pub const ALL: [Component; 5] = [
        Component::Hello,
        Component::ProblemExploration,
        Component::GoalIdentification,
        Component::ProblemSolving,
        Component::Goodbye,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::Hello => "hello",
            Component::ProblemExploration => "problem_exploration",
            Component::GoalIdentification => "goal_identification",
            Component::ProblemSolving => "problem_solving",
            Component::Goodbye => "goodbye",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(i) = s.parse::<usize>() {
            return Component::from_index(i)
                .ok_or_else(|| Error::Parameter(format!("component index {i} out of range 0..5")));
        }
        Component::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown component {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct ComponentSlice<'a> {
    pub conv_id: &'a str,
    pub component: Component,
    pub counselor_messages: Vec<&'a Message>,
}

impl ComponentSlice<'_> {
    pub fn tokens(&self) -> Vec<TokenId> {
        self.counselor_messages
            .iter()
            .flat_map(|m| m.tokens.iter().copied())
            .collect()
    }
}

/// Start offsets of the five slices of `m` messages: `round(k * m / 5)` for k = 0..=5.
/// `k * m / 5` is never exactly half-integral, so the rounding mode does not matter.
pub fn fifth_boundaries(m: usize) -> [usize; 6] {
    std::array::from_fn(|k| (2 * k * m + 5) / 10)
}

/// Component of the counselor message at position `i` among `m` counselor messages.
pub fn component_of(i: usize, m: usize) -> Component {
    let b = fifth_boundaries(m);
    let k = (1..=5).find(|&k| i < b[k]).unwrap_or(5) - 1;
    Component::ALL[k]
}

pub fn split_fifths(conv: &Conversation) -> Result<[ComponentSlice<'_>; 5]> {
    let counselor: Vec<&Message> = conv.messages_by(Role::Counselor).collect();
    let m = counselor.len();
    if m < MIN_COUNSELOR_MESSAGES_FOR_FIFTHS {
        return Err(Error::Eligibility(format!(
            "conversation {} has {m} counselor messages, fifths need {MIN_COUNSELOR_MESSAGES_FOR_FIFTHS}",
            conv.conv_id
        )));
    }
    let b = fifth_boundaries(m);
    Ok(std::array::from_fn(|k| ComponentSlice {
        conv_id: &conv.conv_id,
        component: Component::ALL[k],
        counselor_messages: counselor[b[k]..b[k + 1]].to_vec(),
    }))
}

/// Counselor-token diversity restricted to one component.
///
/// Budgets come from `cfg` unchanged; [`DiversityConfig::component_default`]
/// gives the scaled defaults.
pub fn component_diversity(
    corpus: &Corpus,
    component: Component,
    cfg: &DiversityConfig,
    seed: u64,
) -> Result<DiversityRun> {
    diversity::compute_scope(corpus, cfg, Scope::Component(component), seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicWord {
    pub word: String,
    pub component: Component,
    pub log_ratio: f64,
}

/// Message-containment counts per component over every conversation that can be split.
#[derive(Clone, Debug, Default)]
pub struct ComponentWordStats {
    total_messages: usize,
    component_messages: [usize; 5],
    overall: FxHashMap<TokenId, usize>,
    per_component: [FxHashMap<TokenId, usize>; 5],
}

impl ComponentWordStats {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut stats = Self::default();
        let mut seen = FxHashSet::default();
        for conv in corpus.iter().flat_map(|i| &i.conversations) {
            let Ok(slices) = split_fifths(conv) else { continue };
            for slice in &slices {
                let k = slice.component.index();
                for msg in &slice.counselor_messages {
                    stats.total_messages += 1;
                    stats.component_messages[k] += 1;
                    seen.clear();
                    seen.extend(msg.tokens.iter().copied());
                    for &t in &seen {
                        *stats.overall.entry(t).or_default() += 1;
                        *stats.per_component[k].entry(t).or_default() += 1;
                    }
                }
            }
        }
        stats
    }

    pub fn total_messages(&self) -> usize {
        self.total_messages
    }

    pub fn component_messages(&self, component: Component) -> usize {
        self.component_messages[component.index()]
    }

    /// `ln(p_k / p)` for a token present in the component, else `None`.
    pub fn log_ratio(&self, token: TokenId, component: Component) -> Option<f64> {
        let k = component.index();
        let in_k = *self.per_component[k].get(&token)?;
        let all = self.overall[&token];
        let p_k = in_k as f64 / self.component_messages[k] as f64;
        let p = all as f64 / self.total_messages as f64;
        Some((p_k / p).ln())
    }

    /// Words with `ln(p_k / p) >= threshold`, highest ratio first.
    pub fn characteristic(&self, corpus: &Corpus, component: Component, threshold: f64) -> Vec<CharacteristicWord> {
        let mut out: Vec<CharacteristicWord> = self.per_component[component.index()]
            .keys()
            .filter_map(|&t| {
                let r = self.log_ratio(t, component)?;
                (r >= threshold).then(|| CharacteristicWord {
                    word: corpus.vocab.word(t).to_owned(),
                    component,
                    log_ratio: r,
                })
            })
            .collect();
        out.sort_by(|a, b| b.log_ratio.total_cmp(&a.log_ratio).then_with(|| a.word.cmp(&b.word)));
        out
    }
}

pub fn characteristic_words(corpus: &Corpus, component: Component, threshold: f64) -> Vec<CharacteristicWord> {
    ComponentWordStats::from_corpus(corpus).characteristic(corpus, component, threshold)
}
