//! Conversation corpora: loading, validation, and role-filtered token access.

mod jsonl;
mod tokenize;

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

pub use jsonl::{parse_corpus, read_corpus, write_jsonl, ConversationRecord, MessageRecord};
pub use tokenize::tokenize;

use crate::error::{Error, Result};

pub type TokenId = u32;

/// Conversations an individual needs to reach the tenured stage.
pub const TENURED_CAREER_LENGTH: usize = 120;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Counselor,
    Texter,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rating {
    Helpful,
    NotHelpful,
    #[default]
    None,
}

/// Interned token strings shared by every conversation in a corpus.
#[derive(Clone, Debug, Default)]
pub struct Vocab {
    words: Vec<String>,
    index: FxHashMap<String, TokenId>,
}

impl Vocab {
    pub fn intern(&mut self, word: &str) -> TokenId {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = TokenId::try_from(self.words.len()).expect("vocabulary exceeds u32 ids");
        self.words.push(word.to_owned());
        self.index.insert(word.to_owned(), id);
        id
    }

    pub fn id(&self, word: &str) -> Option<TokenId> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: TokenId) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub role: Role,
    pub text: String,
    /// Position within the conversation, contiguous from 0.
    pub seq: usize,
    pub tokens: Vec<TokenId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conversation {
    pub conv_id: String,
    pub individual_id: String,
    /// Position in the individual's career, 0-based and contiguous after loading.
    pub order_index: usize,
    pub timestamp: Option<i64>,
    pub rating: Rating,
    pub messages: Vec<Message>,
}

impl Conversation {
    pub fn messages_by(&self, role: Role) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(move |m| m.role == role)
    }

    pub fn counselor_message_count(&self) -> usize {
        self.messages_by(Role::Counselor).count()
    }

    /// Concatenated tokens of every message spoken by `role`, in message order.
    pub fn role_tokens(&self, role: Role) -> Vec<TokenId> {
        self.messages_by(role)
            .flat_map(|m| m.tokens.iter().copied())
            .collect()
    }
}

/// [`Conversation::role_tokens`] rendered back to strings.
pub fn role_tokens<'a>(vocab: &'a Vocab, conv: &Conversation, role: Role) -> Vec<&'a str> {
    conv.role_tokens(role)
        .into_iter()
        .map(|id| vocab.word(id))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub individual_id: String,
    /// Peer-group label; individuals who started in the same month share one.
    pub cohort: String,
    pub conversations: Vec<Conversation>,
}

impl Individual {
    pub fn len(&self) -> usize {
        self.conversations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conversations.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFilters {
    pub min_conversations: usize,
    pub min_counselor_messages: usize,
}

impl Default for CorpusFilters {
    fn default() -> Self {
        Self {
            min_conversations: TENURED_CAREER_LENGTH,
            min_counselor_messages: 10,
        }
    }
}

impl CorpusFilters {
    /// Keeps everything.
    pub fn none() -> Self {
        Self {
            min_conversations: 0,
            min_counselor_messages: 0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub individuals: BTreeMap<String, Individual>,
    pub vocab: Vocab,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn get(&self, individual_id: &str) -> Option<&Individual> {
        self.individuals.get(individual_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Individual> {
        self.individuals.values()
    }

    pub fn n_conversations(&self) -> usize {
        self.iter().map(Individual::len).sum()
    }

    /// Individuals with at least `n` conversations.
    pub fn with_min_conversations(&self, n: usize) -> impl Iterator<Item = &Individual> {
        self.iter().filter(move |i| i.len() >= n)
    }

    /// Builds a corpus from raw records, applying `filters`.
    ///
    /// Records are grouped by individual in input order. A record without an
    /// `order_index` takes its position among that individual's records.
    /// Duplicate `(individual_id, order_index)` pairs are rejected. After the
    /// message filter is applied, the retained conversations are renumbered
    /// contiguously so career positions count qualifying conversations only.
    pub fn from_records<I>(records: I, filters: CorpusFilters) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, ConversationRecord)>,
    {
        let mut vocab = Vocab::default();
        let mut groups: BTreeMap<String, Vec<(usize, usize, ConversationRecord)>> = BTreeMap::new();
        for (line, record) in records {
            if record.messages.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: format!("conversation {} has no messages", record.conv_id),
                });
            }
            let group = groups.entry(record.individual_id.clone()).or_default();
            let position = group.len();
            group.push((line, position, record));
        }

        let mut individuals = BTreeMap::new();
        for (individual_id, group) in groups {
            let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
            for (line, position, record) in &group {
                let index = record.order_index.unwrap_or(*position);
                if let Some(first) = seen.insert(index, *line) {
                    return Err(Error::Validation(format!(
                        "individual {individual_id}: order_index {index} appears on lines {first} and {line}"
                    )));
                }
            }

            let cohort = group
                .iter()
                .find_map(|(_, _, r)| r.cohort.clone())
                .or_else(|| {
                    group
                        .iter()
                        .min_by_key(|(_, p, r)| r.order_index.unwrap_or(*p))
                        .and_then(|(_, _, r)| r.timestamp)
                        .map(month_label)
                })
                .unwrap_or_else(|| "all".to_owned());

            let mut convs: Vec<Conversation> = group
                .into_iter()
                .map(|(_, position, record)| {
                    let order_index = record.order_index.unwrap_or(position);
                    record.into_conversation(order_index, &mut vocab)
                })
                .filter(|c| c.counselor_message_count() >= filters.min_counselor_messages)
                .collect();
            convs.sort_by_key(|c| c.order_index);
            for (i, conv) in convs.iter_mut().enumerate() {
                conv.order_index = i;
            }

            if convs.len() >= filters.min_conversations && !convs.is_empty() {
                individuals.insert(
                    individual_id.clone(),
                    Individual {
                        individual_id,
                        cohort,
                        conversations: convs,
                    },
                );
            }
        }
        Ok(Self { individuals, vocab })
    }
}

/// `YYYY-MM` of a unix timestamp (UTC).
fn month_label(timestamp: i64) -> String {
    // civil-from-days, proleptic Gregorian
    let days = timestamp.div_euclid(86_400);
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + i64::from(month <= 2);
    format!("{year:04}-{month:02}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(ind: &str, idx: Option<usize>, counselor_msgs: usize) -> ConversationRecord {
        let mut messages = vec![MessageRecord {
            role: Role::Texter,
            text: "hello?".into(),
        }];
        messages.extend((0..counselor_msgs).map(|i| MessageRecord {
            role: Role::Counselor,
            text: format!("hi there {i}"),
        }));
        ConversationRecord {
            conv_id: format!("{ind}-{idx:?}"),
            individual_id: ind.into(),
            order_index: idx,
            timestamp: None,
            rating: None,
            cohort: None,
            messages,
        }
    }

    #[test]
    fn month_labels() {
        assert_eq!(month_label(0), "1970-01");
        assert_eq!(month_label(951_782_400), "2000-02");
        assert_eq!(month_label(1_700_000_000), "2023-11");
        assert_eq!(month_label(-1), "1969-12");
    }

    #[test]
    fn role_tokens_concatenate_in_order() {
        let mut vocab = Vocab::default();
        let rec = ConversationRecord {
            conv_id: "c".into(),
            individual_id: "a".into(),
            order_index: None,
            timestamp: None,
            rating: None,
            cohort: None,
            messages: vec![
                MessageRecord { role: Role::Counselor, text: "hi there".into() },
                MessageRecord { role: Role::Texter, text: "help me".into() },
                MessageRecord { role: Role::Counselor, text: "ok".into() },
            ],
        };
        let conv = rec.into_conversation(0, &mut vocab);
        assert_eq!(role_tokens(&vocab, &conv, Role::Counselor), vec!["hi", "there", "ok"]);
        assert_eq!(role_tokens(&vocab, &conv, Role::Texter), vec!["help", "me"]);
        assert_eq!(conv.messages.iter().map(|m| m.seq).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn role_tokens_empty_for_missing_role() {
        let mut vocab = Vocab::default();
        let mut rec = record("a", Some(0), 3);
        rec.messages.retain(|m| m.role == Role::Counselor);
        let conv = rec.into_conversation(0, &mut vocab);
        assert!(conv.role_tokens(Role::Texter).is_empty());
    }

    #[test]
    fn filters_conversations_then_individuals() {
        let mut recs = Vec::new();
        for i in 0..140 {
            // every 10th conversation is too short
            let msgs = if i % 10 == 0 { 9 } else { 10 };
            recs.push((i + 1, record("keep", Some(i), msgs)));
        }
        for i in 0..50 {
            recs.push((200 + i, record("short", Some(i), 12)));
        }
        let corpus = Corpus::from_records(recs, CorpusFilters::default()).unwrap();
        assert_eq!(corpus.len(), 1);
        let ind = corpus.get("keep").unwrap();
        assert_eq!(ind.len(), 126);
        assert!(ind
            .conversations
            .iter()
            .enumerate()
            .all(|(i, c)| c.order_index == i && c.counselor_message_count() >= 10));
    }

    #[test]
    fn order_index_defaults_to_input_position() {
        let recs = vec![(1, record("a", None, 1)), (2, record("a", None, 1))];
        let corpus = Corpus::from_records(recs, CorpusFilters::none()).unwrap();
        let ind = corpus.get("a").unwrap();
        assert_eq!(ind.conversations[0].conv_id, "a-None");
        assert_eq!(ind.len(), 2);
    }

    #[test]
    fn explicit_order_index_sorts() {
        let recs = vec![(1, record("a", Some(5), 1)), (2, record("a", Some(2), 1))];
        let corpus = Corpus::from_records(recs, CorpusFilters::none()).unwrap();
        let ind = corpus.get("a").unwrap();
        assert_eq!(ind.conversations[0].conv_id, "a-Some(2)");
        assert_eq!(ind.conversations[0].order_index, 0);
        assert_eq!(ind.conversations[1].order_index, 1);
    }

    #[test]
    fn duplicate_order_index_rejected() {
        let recs = vec![(1, record("a", Some(3), 1)), (2, record("a", Some(3), 1))];
        let err = Corpus::from_records(recs, CorpusFilters::none()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn raising_min_conversations_never_adds_individuals() {
        let mut recs = Vec::new();
        for (k, n) in [3usize, 7, 12, 20].into_iter().enumerate() {
            for i in 0..n {
                recs.push((recs.len() + 1, record(&format!("ind{k}"), Some(i), 2)));
            }
        }
        let mut previous: Option<Vec<String>> = None;
        for min in 0..25 {
            let filters = CorpusFilters { min_conversations: min, min_counselor_messages: 0 };
            let ids: Vec<String> = Corpus::from_records(recs.clone(), filters)
                .unwrap()
                .individuals
                .into_keys()
                .collect();
            if let Some(prev) = &previous {
                assert!(ids.iter().all(|id| prev.contains(id)));
            }
            previous = Some(ids);
        }
    }
}
