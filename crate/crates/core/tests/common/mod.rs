#![allow(dead_code)]

use lingdiv::corpus::{ConversationRecord, Corpus, CorpusFilters, MessageRecord, Rating, Role};
use lingdiv::synthgen::Generated;

/// One conversation that alternates a fixed texter line with each counselor message.
pub fn record(
    individual: &str,
    index: usize,
    timestamp: Option<i64>,
    rating: Option<Rating>,
    counselor: Vec<String>,
) -> ConversationRecord {
    let messages = counselor
        .into_iter()
        .flat_map(|text| {
            [
                MessageRecord { role: Role::Texter, text: "texter line".into() },
                MessageRecord { role: Role::Counselor, text },
            ]
        })
        .collect();
    ConversationRecord {
        conv_id: format!("{individual}-{index}"),
        individual_id: individual.into(),
        order_index: Some(index),
        timestamp,
        rating,
        cohort: Some("c".into()),
        messages,
    }
}

pub fn corpus(records: Vec<ConversationRecord>) -> Corpus {
    Corpus::from_records(records.into_iter().enumerate().map(|(i, r)| (i + 1, r)), CorpusFilters::default()).unwrap()
}

pub fn load(generated: &Generated) -> Corpus {
    generated.corpus(CorpusFilters::default()).unwrap()
}
