//! Whitespace tokenizer that keeps emoticons and other all-punctuation pieces intact.

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Lowercases `text`, splits on whitespace, and strips leading/trailing punctuation
/// from each piece. Pieces made only of punctuation (`:)`, `...`)
/// are kept whole. Empty pieces are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|piece| {
            let lower = piece.to_lowercase();
            if lower.chars().all(is_punct) {
                return Some(lower);
            }
            let trimmed = lower.trim_matches(is_punct);
            (!trimmed.is_empty()).then(|| trimmed.to_owned())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn keeps_emoticons() {
        assert_eq!(tokenize("Hey there :)"), vec!["hey", "there", ":)"]);
    }

    #[test]
    fn strips_edge_punctuation_but_not_internal() {
        assert_eq!(tokenize("I'm OK."), vec!["i'm", "ok"]);
        assert_eq!(tokenize("(well-known)"), vec!["well-known"]);
        assert_eq!(tokenize("<3"), vec!["3"]);
    }

    #[test]
    fn empty_and_blank() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \t\n ").is_empty());
    }

    proptest! {
        #[test]
        fn idempotent_on_own_tokens(text in "[a-zA-Z0-9 .,!?:;()'\\-]{0,60}") {
            for token in tokenize(&text) {
                prop_assert_eq!(tokenize(&token), vec![token.clone()]);
            }
        }
    }
}
