//! Synthetic corpora with known ground truth.
//!
//! Counselor tokens are a per-message mixture of a shared Zipfian base
//! vocabulary, the conversation's topic vocabulary, an agent-private idiolect,
//! a shared colloquial vocabulary, and per-component script words. Mixture
//! weights follow schedules over the agent's tenure, which is how diversifying,
//! specializing, and colloquializing agents are planted. Planted words appear
//! in a conversation with a logistic probability over tenure.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson, WeightedAliasIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ConversationRecord, Corpus, CorpusFilters, MessageRecord, Rating, Role};
use crate::error::{Error, Result};
use crate::rng::{substream, Key};
use crate::segmentation::{component_of, Component};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    Static,
    Diversifying,
    Specializing,
    Colloquializing,
}

/// A weight as a function of tenure (0-based conversation index).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Constant(f64),
    Linear { from: f64, to: f64, over: usize },
    Logistic { lo: f64, hi: f64, midpoint: f64, steepness: f64 },
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Schedule {
    pub fn at(&self, t: usize) -> f64 {
        let t = t as f64;
        match *self {
            Schedule::Constant(v) => v,
            Schedule::Linear { from, to, over } => {
                let frac = if over == 0 { 1.0 } else { (t / over as f64).min(1.0) };
                from + (to - from) * frac
            }
            Schedule::Logistic { lo, hi, midpoint, steepness } => lo + (hi - lo) * logistic((t - midpoint) / steepness),
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            Schedule::Constant(_) => true,
            Schedule::Linear { from, to, .. } => from == to,
            Schedule::Logistic { lo, hi, .. } => lo == hi,
        }
    }

    fn in_unit_range(&self) -> bool {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        match *self {
            Schedule::Constant(v) => ok(v),
            Schedule::Linear { from, to, .. } => ok(from) && ok(to),
            Schedule::Logistic { lo, hi, steepness, .. } => ok(lo) && ok(hi) && steepness > 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedWord {
    pub word: String,
    /// +1 adopted with tenure, -1 abandoned.
    pub sign: i8,
    /// Restrict insertion to messages of this component.
    pub component: Option<Component>,
    pub midpoint: f64,
    pub steepness: f64,
    /// Probability of use in a conversation at the far end of the schedule.
    pub peak: f64,
}

impl PlantedWord {
    pub fn usage(&self, t: usize) -> f64 {
        let rise = logistic((t as f64 - self.midpoint) / self.steepness);
        self.peak * if self.sign > 0 { rise } else { 1.0 - rise }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub agent_id: String,
    pub cohort: String,
    pub dynamics: Dynamics,
    /// Share of counselor tokens from the conversation's topic.
    pub topic_weight: Schedule,
    /// Share from the agent's private vocabulary.
    pub idiolect_weight: Schedule,
    /// Share from the shared colloquial vocabulary.
    pub colloquial_weight: Schedule,
    pub planted: Vec<PlantedWord>,
    /// In [0, 1]; drives rating positivity.
    pub skill: f64,
    pub seconds_per_conversation: f64,
}

impl AgentProfile {
    /// Canonical schedules for each dynamics label.
    pub fn preset(agent_id: impl Into<String>, cohort: impl Into<String>, dynamics: Dynamics, skill: f64) -> Self {
        let rising = |lo: f64, hi: f64| Schedule::Logistic { lo, hi, midpoint: 50.0, steepness: 12.0 };
        let (topic, idiolect, colloquial) = match dynamics {
            Dynamics::Static => (Schedule::Constant(0.25), Schedule::Constant(0.0), Schedule::Constant(0.0)),
            Dynamics::Diversifying => (rising(0.1, 0.6), Schedule::Constant(0.0), Schedule::Constant(0.0)),
            Dynamics::Specializing => (Schedule::Constant(0.25), rising(0.0, 0.3), Schedule::Constant(0.0)),
            Dynamics::Colloquializing => (Schedule::Constant(0.25), Schedule::Constant(0.0), rising(0.0, 0.4)),
        };
        Self {
            agent_id: agent_id.into(),
            cohort: cohort.into(),
            dynamics,
            topic_weight: topic,
            idiolect_weight: idiolect,
            colloquial_weight: colloquial,
            planted: Vec::new(),
            skill,
            seconds_per_conversation: 86_400.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let schedules = [self.topic_weight, self.idiolect_weight, self.colloquial_weight];
        if !schedules.iter().all(Schedule::in_unit_range) {
            return Err(Error::Parameter(format!("{}: schedule weights must lie in [0, 1]", self.agent_id)));
        }
        if !(0.0..=1.0).contains(&self.skill) || self.seconds_per_conversation < 0.0 {
            return Err(Error::Parameter(format!("{}: skill must lie in [0, 1]", self.agent_id)));
        }
        for p in &self.planted {
            if !(0.0..=1.0).contains(&p.peak) || p.steepness <= 0.0 || p.sign == 0 {
                return Err(Error::Parameter(format!("{}: invalid planted word {}", self.agent_id, p.word)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_agents: usize,
    pub convs_per_agent: usize,
    pub messages_per_conv: f64,
    pub min_messages_per_conv: usize,
    pub words_per_message: f64,
    pub min_words_per_message: usize,
    pub texter_words_per_message: f64,
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    pub n_topics: usize,
    pub topic_vocab_size: usize,
    pub idiolect_vocab_size: usize,
    pub colloquial_vocab_size: usize,
    pub texter_vocab_size: usize,
    pub script_vocab_size: usize,
    /// Multiplies the topic weight in each fifth of the conversation.
    pub component_topic_multipliers: [f64; 5],
    /// Share of script words in each fifth.
    pub component_script_weights: [f64; 5],
    pub rating_rate: f64,
    pub rating_positivity_base: f64,
    /// Half-range of positivity around the base as skill goes from 0 to 1.
    pub rating_skill_gain: f64,
    pub start_timestamp: i64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_agents: 200,
            convs_per_agent: 120,
            messages_per_conv: 14.0,
            min_messages_per_conv: 10,
            words_per_message: 28.0,
            min_words_per_message: 1,
            texter_words_per_message: 15.0,
            vocab_size: 5000,
            zipf_exponent: 1.1,
            n_topics: 40,
            topic_vocab_size: 100,
            idiolect_vocab_size: 60,
            colloquial_vocab_size: 200,
            texter_vocab_size: 2000,
            script_vocab_size: 8,
            component_topic_multipliers: [1.0; 5],
            component_script_weights: [0.0; 5],
            rating_rate: 0.26,
            rating_positivity_base: 0.87,
            rating_skill_gain: 0.1,
            start_timestamp: 1_420_070_400, // 2015-01-01
            seed: 0,
        }
    }
}

impl GenConfig {
    fn validate(&self, profiles: &[AgentProfile]) -> Result<()> {
        if profiles.len() != self.n_agents {
            return Err(Error::Parameter(format!(
                "config expects {} agents, got {} profiles",
                self.n_agents,
                profiles.len()
            )));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let sizes = [
            self.vocab_size,
            self.n_topics,
            self.topic_vocab_size,
            self.idiolect_vocab_size,
            self.colloquial_vocab_size,
            self.texter_vocab_size,
            self.script_vocab_size,
        ];
        if sizes.contains(&0)
            || self.convs_per_agent == 0
            || !unit(self.rating_rate)
            || !unit(self.rating_positivity_base)
            || !(self.messages_per_conv > 0.0 && self.words_per_message > 0.0 && self.texter_words_per_message > 0.0)
            || self.component_topic_multipliers.iter().any(|m| *m < 0.0)
            || !self.component_script_weights.iter().all(|w| unit(*w))
        {
            return Err(Error::Parameter("invalid generator configuration".into()));
        }
        let mut ids: Vec<&str> = profiles.iter().map(|p| p.agent_id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("agent ids must be unique".into()));
        }
        profiles.iter().try_for_each(AgentProfile::validate)
    }
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Pronounceable, injective spelling of a non-negative integer (at least two syllables).
pub fn word_form(id: u64) -> String {
    let base = (CONSONANTS.len() * VOWELS.len()) as u64;
    let mut n = id + base;
    let mut syllables = Vec::new();
    while n > 0 {
        let d = (n % base) as usize;
        syllables.push([CONSONANTS[d / VOWELS.len()], VOWELS[d % VOWELS.len()]]);
        n /= base;
    }
    syllables.reverse();
    syllables.iter().flat_map(|s| s.iter().map(|&b| b as char)).collect()
}

/// Disjoint id ranges for each word class.
#[derive(Clone, Debug)]
struct Lexicon {
    base: u64,
    topics: u64,
    colloquial: u64,
    scripts: u64,
    texter: u64,
    idiolects: u64,
}

impl Lexicon {
    fn new(cfg: &GenConfig) -> Self {
        let base = 0;
        let topics = base + cfg.vocab_size as u64;
        let colloquial = topics + (cfg.n_topics * cfg.topic_vocab_size) as u64;
        let scripts = colloquial + cfg.colloquial_vocab_size as u64;
        let texter = scripts + (5 * cfg.script_vocab_size) as u64;
        let idiolects = texter + cfg.texter_vocab_size as u64;
        Self { base, topics, colloquial, scripts, texter, idiolects }
    }

    fn end(&self, cfg: &GenConfig) -> u64 {
        self.idiolects + (cfg.n_agents * cfg.idiolect_vocab_size) as u64
    }
}

fn zipf_table(n: usize, exponent: f64) -> WeightedAliasIndex<f64> {
    WeightedAliasIndex::new((1..=n).map(|r| (r as f64).powf(-exponent)).collect()).expect("positive weights")
}

struct Tables {
    base: WeightedAliasIndex<f64>,
    topic: WeightedAliasIndex<f64>,
    idiolect: WeightedAliasIndex<f64>,
    colloquial: WeightedAliasIndex<f64>,
    texter: WeightedAliasIndex<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentTruth {
    pub agent_id: String,
    pub dynamics: Dynamics,
    pub skill: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub word: String,
    pub sign: i8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component: Option<Component>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub agents: Vec<AgentTruth>,
    pub planted_words: Vec<PlantedTruth>,
    /// Whether any agent's topic weight drifts within each component.
    pub component_drift: [bool; 5],
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub records: Vec<ConversationRecord>,
    pub ground_truth: GroundTruth,
}

impl Generated {
    pub fn corpus(&self, filters: CorpusFilters) -> Result<Corpus> {
        Corpus::from_records(self.records.iter().cloned().enumerate().map(|(i, r)| (i + 1, r)), filters)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
        }
        Ok(())
    }

    pub fn save(&self, corpus_path: &Path, truth_path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        std::fs::write(corpus_path, buf).map_err(|e| Error::io(corpus_path, e))?;
        let truth = serde_json::to_vec_pretty(&self.ground_truth)?;
        std::fs::write(truth_path, truth).map_err(|e| Error::io(truth_path, e))?;
        Ok(())
    }
}

struct AgentContext<'a> {
    cfg: &'a GenConfig,
    lex: &'a Lexicon,
    tables: &'a Tables,
    profile: &'a AgentProfile,
    agent_index: usize,
    cohort_index: usize,
}

impl AgentContext<'_> {
    fn counselor_word<R: Rng>(&self, rng: &mut R, t: usize, component: Component, topic: usize) -> u64 {
        let (cfg, lex, p) = (self.cfg, self.lex, self.profile);
        let k = component.index();
        let script = cfg.component_script_weights[k];
        let topic_w = (p.topic_weight.at(t) * cfg.component_topic_multipliers[k]).min(1.0);
        let weights = [script, topic_w, p.idiolect_weight.at(t), p.colloquial_weight.at(t)];
        let total: f64 = weights.iter().sum();
        let scale = if total > 1.0 { 1.0 / total } else { 1.0 };
        let mut u: f64 = rng.gen();
        for (class, w) in weights.into_iter().enumerate() {
            let w = w * scale;
            if u < w {
                return match class {
                    0 => lex.scripts + (k * cfg.script_vocab_size + rng.gen_range(0..cfg.script_vocab_size)) as u64,
                    1 => lex.topics + (topic * cfg.topic_vocab_size + self.tables.topic.sample(rng)) as u64,
                    2 => lex.idiolects + (self.agent_index * cfg.idiolect_vocab_size + self.tables.idiolect.sample(rng)) as u64,
                    _ => lex.colloquial + self.tables.colloquial.sample(rng) as u64,
                };
            }
            u -= w;
        }
        lex.base + self.tables.base.sample(rng) as u64
    }

    fn texter_word<R: Rng>(&self, rng: &mut R, topic: usize) -> u64 {
        // texters mention the conversation topic at a fixed rate
        if rng.gen_bool(0.2) {
            self.lex.topics + (topic * self.cfg.topic_vocab_size + self.tables.topic.sample(rng)) as u64
        } else {
            self.lex.texter + self.tables.texter.sample(rng) as u64
        }
    }

    fn positivity(&self) -> f64 {
        let cfg = self.cfg;
        let centered = 2.0 * logistic(4.0 * (self.profile.skill - 0.5)) - 1.0;
        (cfg.rating_positivity_base + cfg.rating_skill_gain * centered).clamp(0.0, 1.0)
    }

    fn conversations(&self, seed: u64) -> Vec<ConversationRecord> {
        let cfg = self.cfg;
        let p = self.profile;
        let mut rng = substream(seed, &[Key::Str("agent"), Key::Str(&p.agent_id)]);
        let n_msgs = Poisson::new(cfg.messages_per_conv).expect("positive mean");
        let n_words = Poisson::new(cfg.words_per_message).expect("positive mean");
        let n_texter_words = Poisson::new(cfg.texter_words_per_message).expect("positive mean");
        let start = cfg.start_timestamp + self.cohort_index as i64 * 31 * 86_400;
        let mut elapsed = 0.0f64;

        (0..cfg.convs_per_agent)
            .map(|t| {
                let topic = rng.gen_range(0..cfg.n_topics);
                let m = (n_msgs.sample(&mut rng) as usize).max(cfg.min_messages_per_conv);
                let mut counselor: Vec<Vec<String>> = (0..m)
                    .map(|i| {
                        let len = (n_words.sample(&mut rng) as usize).max(cfg.min_words_per_message);
                        let component = component_of(i, m);
                        (0..len)
                            .map(|_| word_form(self.counselor_word(&mut rng, t, component, topic)))
                            .collect()
                    })
                    .collect();
                for planted in &p.planted {
                    if !rng.gen_bool(planted.usage(t)) {
                        continue;
                    }
                    let slots: Vec<usize> = (0..m)
                        .filter(|&i| planted.component.is_none_or(|c| component_of(i, m) == c))
                        .collect();
                    let msg = slots[rng.gen_range(0..slots.len())];
                    let pos = rng.gen_range(0..=counselor[msg].len());
                    counselor[msg].insert(pos, planted.word.clone());
                }

                let mut messages = Vec::with_capacity(2 * m);
                for words in counselor {
                    let len = (n_texter_words.sample(&mut rng) as usize).max(1);
                    let texter: Vec<String> = (0..len).map(|_| word_form(self.texter_word(&mut rng, topic))).collect();
                    messages.push(MessageRecord { role: Role::Texter, text: sentence(&texter) });
                    messages.push(MessageRecord { role: Role::Counselor, text: sentence(&words) });
                }

                let rating = if rng.gen_bool(cfg.rating_rate) {
                    Some(if rng.gen_bool(self.positivity()) { Rating::Helpful } else { Rating::NotHelpful })
                } else {
                    None
                };
                let timestamp = start + elapsed.round() as i64;
                elapsed += p.seconds_per_conversation * (0.5 + rng.gen::<f64>());
                ConversationRecord {
                    conv_id: format!("{}-{t:04}", p.agent_id),
                    individual_id: p.agent_id.clone(),
                    order_index: Some(t),
                    timestamp: Some(timestamp),
                    rating,
                    cohort: Some(p.cohort.clone()),
                    messages,
                }
            })
            .collect()
    }
}

fn sentence(words: &[String]) -> String {
    let mut s = words.join(" ");
    s.push('.');
    s
}

/// Generates a corpus for `profiles`, in agent id then career order.
pub fn generate(cfg: &GenConfig, profiles: &[AgentProfile]) -> Result<Generated> {
    cfg.validate(profiles)?;
    let lex = Lexicon::new(cfg);
    let tables = Tables {
        base: zipf_table(cfg.vocab_size, cfg.zipf_exponent),
        topic: zipf_table(cfg.topic_vocab_size, cfg.zipf_exponent),
        idiolect: zipf_table(cfg.idiolect_vocab_size, cfg.zipf_exponent),
        colloquial: zipf_table(cfg.colloquial_vocab_size, cfg.zipf_exponent),
        texter: zipf_table(cfg.texter_vocab_size, cfg.zipf_exponent),
    };
    let planted_max = lex.end(cfg);
    for p in profiles.iter().flat_map(|p| &p.planted) {
        // planted words must not collide with generated vocabulary
        if (0..planted_max).contains(&decode_word_form(&p.word).unwrap_or(u64::MAX)) {
            return Err(Error::Parameter(format!("planted word {} collides with generated vocabulary", p.word)));
        }
    }
    let mut cohorts: Vec<&str> = profiles.iter().map(|p| p.cohort.as_str()).collect();
    cohorts.sort_unstable();
    cohorts.dedup();

    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.sort_by(|&a, &b| profiles[a].agent_id.cmp(&profiles[b].agent_id));
    let records: Vec<ConversationRecord> = order
        .par_iter()
        .map(|&i| {
            let profile = &profiles[i];
            AgentContext {
                cfg,
                lex: &lex,
                tables: &tables,
                profile,
                agent_index: i,
                cohort_index: cohorts.binary_search(&profile.cohort.as_str()).expect("collected"),
            }
            .conversations(cfg.seed)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let mut planted_words: Vec<PlantedTruth> = Vec::new();
    for p in profiles.iter().flat_map(|p| &p.planted) {
        if !planted_words.iter().any(|w| w.word == p.word) {
            planted_words.push(PlantedTruth { word: p.word.clone(), sign: p.sign, component: p.component });
        }
    }
    let drifting = profiles.iter().any(|p| !p.topic_weight.is_constant());
    let ground_truth = GroundTruth {
        agents: order
            .iter()
            .map(|&i| AgentTruth {
                agent_id: profiles[i].agent_id.clone(),
                dynamics: profiles[i].dynamics,
                skill: profiles[i].skill,
            })
            .collect(),
        planted_words,
        component_drift: std::array::from_fn(|k| drifting && cfg.component_topic_multipliers[k] > 0.0),
    };
    Ok(Generated { records, ground_truth })
}

fn decode_word_form(word: &str) -> Option<u64> {
    let base = (CONSONANTS.len() * VOWELS.len()) as u64;
    let bytes = word.as_bytes();
    if bytes.len() < 4 || !bytes.len().is_multiple_of(2) {
        return None;
    }
    let mut n = 0u64;
    for s in bytes.chunks(2) {
        let c = CONSONANTS.iter().position(|&x| x == s[0])? as u64;
        let v = VOWELS.iter().position(|&x| x == s[1])? as u64;
        n = n.checked_mul(base)?.checked_add(c * VOWELS.len() as u64 + v)?;
    }
    n.checked_sub(base)
}

pub fn agent_id(i: usize) -> String {
    format!("agent{i:04}")
}

/// Every agent static and identical in distribution.
pub fn null_corpus(cfg: &GenConfig, n_agents: usize) -> Result<Generated> {
    let cfg = GenConfig { n_agents, ..cfg.clone() };
    let profiles: Vec<AgentProfile> = (0..n_agents)
        .map(|i| AgentProfile::preset(agent_id(i), "2015-01", Dynamics::Static, 0.5))
        .collect();
    generate(&cfg, &profiles)
}

/// Planted word spelled outside every generated vocabulary.
pub fn planted_word_form(sign: i8, i: usize) -> String {
    format!("{}{}", if sign > 0 { "adopt" } else { "drop" }, word_form(i as u64))
}

/// Ready-made populations for the CLI and for validation runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// A quarter of each dynamics, planted words, and a skill-diversity link.
    Mixed,
    Null,
    /// Half diversifying, half static.
    Diversification,
    /// Every agent grows a private idiolect.
    Idiolect,
    /// Topic drift only in the middle three components, scripted closings.
    ComponentDrift,
    /// Ten adopted and ten abandoned planted words.
    PlantedShift,
    /// Counselor language drifts toward a shared colloquial vocabulary.
    ProbeDrift,
    /// Skill sets both the (persistent) topic weight and rating positivity.
    SkillLinked,
    /// As `SkillLinked`, but the topic weight is independent of skill.
    SkillSevered,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Mixed,
        Scenario::Null,
        Scenario::Diversification,
        Scenario::Idiolect,
        Scenario::ComponentDrift,
        Scenario::PlantedShift,
        Scenario::ProbeDrift,
        Scenario::SkillLinked,
        Scenario::SkillSevered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Mixed => "mixed",
            Scenario::Null => "null",
            Scenario::Diversification => "diversification",
            Scenario::Idiolect => "idiolect",
            Scenario::ComponentDrift => "component_drift",
            Scenario::PlantedShift => "planted_shift",
            Scenario::ProbeDrift => "probe_drift",
            Scenario::SkillLinked => "skill_linked",
            Scenario::SkillSevered => "skill_severed",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown scenario {s:?}")))
    }
}

fn planted_set(n_each: usize, component_of: impl Fn(usize) -> Option<Component>) -> Vec<PlantedWord> {
    let mut out = Vec::new();
    for sign in [1i8, -1] {
        for i in 0..n_each {
            out.push(PlantedWord {
                word: planted_word_form(sign, i),
                sign,
                component: component_of(i),
                midpoint: 60.0,
                steepness: 8.0,
                peak: 0.6,
            });
        }
    }
    out
}

/// Config and profiles for `scenario` with `n_agents` agents.
pub fn scenario(scenario: Scenario, n_agents: usize, seed: u64) -> (GenConfig, Vec<AgentProfile>) {
    let mut cfg = GenConfig { n_agents, seed, ..GenConfig::default() };
    let mut rng = substream(seed, &[Key::Str("scenario"), Key::Str(scenario.name())]);
    let cohort = |i: usize| format!("2015-{:02}", 1 + i % 2);
    let profiles = (0..n_agents)
        .map(|i| {
            let skill: f64 = rng.gen();
            let id = agent_id(i);
            match scenario {
                Scenario::Null => AgentProfile::preset(id, "2015-01", Dynamics::Static, skill),
                Scenario::Diversification => {
                    let d = if i % 2 == 0 { Dynamics::Diversifying } else { Dynamics::Static };
                    AgentProfile::preset(id, cohort(i), d, skill)
                }
                Scenario::Idiolect => AgentProfile::preset(id, cohort(i), Dynamics::Specializing, skill),
                Scenario::ComponentDrift => AgentProfile::preset(id, cohort(i), Dynamics::Diversifying, skill),
                Scenario::PlantedShift => {
                    let mut p = AgentProfile::preset(id, cohort(i), Dynamics::Static, skill);
                    p.planted = planted_set(10, |_| None);
                    p
                }
                Scenario::ProbeDrift => AgentProfile::preset(id, cohort(i), Dynamics::Colloquializing, skill),
                Scenario::SkillLinked | Scenario::SkillSevered => {
                    let trait_level = if scenario == Scenario::SkillLinked { skill } else { rng.gen() };
                    let mut p = AgentProfile::preset(id, cohort(i), Dynamics::Static, skill);
                    p.topic_weight = Schedule::Constant(0.05 + 0.5 * trait_level);
                    p
                }
                Scenario::Mixed => {
                    let d = [Dynamics::Static, Dynamics::Diversifying, Dynamics::Specializing, Dynamics::Colloquializing][i % 4];
                    let mut p = AgentProfile::preset(id, cohort(i), d, skill);
                    p.planted = planted_set(10, |k| (k < 5).then(|| Component::ALL[k]));
                    p
                }
            }
        })
        .collect();
    match scenario {
        Scenario::ComponentDrift => {
            cfg.messages_per_conv = 26.0;
            cfg.min_messages_per_conv = 20;
            cfg.component_topic_multipliers = [0.0, 1.0, 1.0, 1.0, 0.0];
            cfg.component_script_weights = [0.0, 0.0, 0.0, 0.0, 0.5];
        }
        Scenario::SkillLinked | Scenario::SkillSevered => cfg.rating_skill_gain = 0.12,
        Scenario::Mixed => {
            cfg.messages_per_conv = 22.0;
            cfg.component_script_weights = [0.0, 0.0, 0.0, 0.0, 0.3];
        }
        _ => {}
    }
    (cfg, profiles)
}
