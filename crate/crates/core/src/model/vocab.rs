use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedSentence;

pub const UNK: &str = "<unk>";

/// Token to row mapping for the embedding table. Row 0 is always `<unk>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// `<unk>` followed by the distinct corpus tokens in sorted order.
    pub fn from_corpus(sentences: &[AnnotatedSentence]) -> Self {
        let distinct: BTreeSet<&str> = sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
            .filter(|t| *t != UNK)
            .collect();
        let mut tokens = vec![UNK.to_string()];
        tokens.extend(distinct.into_iter().map(str::to_string));
        Vocab::from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl From<Vec<String>> for Vocab {
    fn from(mut tokens: Vec<String>) -> Self {
        if tokens.first().map(String::as_str) != Some(UNK) {
            tokens.insert(0, UNK.to_string());
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocab { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::fluent_sentence;

    #[test]
    fn unknown_maps_to_zero() {
        let corpus = vec![fluent_sentence(vec!["b".into(), "a".into(), "b".into()])];
        let v = Vocab::from_corpus(&corpus);
        assert_eq!(v.tokens(), &["<unk>", "a", "b"]);
        assert_eq!(v.id("a"), 1);
        assert_eq!(v.id("zzz"), 0);
    }
}
