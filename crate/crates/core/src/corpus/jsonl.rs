use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Conversation, Corpus, CorpusFilters, Message, Rating, Role, Vocab};
use crate::error::{Error, Result};

/// One JSONL line. Unknown keys are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub conv_id: String,
    pub individual_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
    #[serde(default)]
    pub rating: Option<Rating>,
    /// Optional peer-group label. When absent the start month is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort: Option<String>,
    pub messages: Vec<MessageRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub role: Role,
    pub text: String,
}

impl ConversationRecord {
    pub(crate) fn into_conversation(self, order_index: usize, vocab: &mut Vocab) -> Conversation {
        let messages = self
            .messages
            .into_iter()
            .enumerate()
            .map(|(seq, m)| {
                let tokens = super::tokenize(&m.text)
                    .iter()
                    .map(|t| vocab.intern(t))
                    .collect();
                Message {
                    role: m.role,
                    text: m.text,
                    seq,
                    tokens,
                }
            })
            .collect();
        Conversation {
            conv_id: self.conv_id,
            individual_id: self.individual_id,
            order_index,
            timestamp: self.timestamp,
            rating: self.rating.unwrap_or_default(),
            messages,
        }
    }

    fn from_conversation(conv: &Conversation, cohort: &str) -> Self {
        Self {
            conv_id: conv.conv_id.clone(),
            individual_id: conv.individual_id.clone(),
            order_index: Some(conv.order_index),
            timestamp: conv.timestamp,
            rating: match conv.rating {
                Rating::None => None,
                r => Some(r),
            },
            cohort: Some(cohort.to_owned()),
            messages: conv
                .messages
                .iter()
                .map(|m| MessageRecord {
                    role: m.role,
                    text: m.text.clone(),
                })
                .collect(),
        }
    }
}

/// Reads a JSONL corpus from any buffered reader. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R, filters: CorpusFilters) -> Result<Corpus> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ConversationRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        records.push((line_no, record));
    }
    Corpus::from_records(records, filters)
}

pub fn parse_corpus(path: impl AsRef<Path>, filters: CorpusFilters) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), filters)
}

/// Writes one line per conversation, ordered by individual id then career order.
pub fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for individual in corpus.iter() {
        for conv in &individual.conversations {
            let record = ConversationRecord::from_conversation(conv, &individual.cohort);
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
        }
    }
    Ok(())
}
