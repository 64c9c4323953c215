use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use super::tokenize::tokenize;
use crate::corpus::Document;

static STOPWORD_LIST: &str = include_str!("stopwords.txt");

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORD_LIST
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

/// `word` must already be lowercased.
pub fn is_stopword(word: &str) -> bool {
    stopwords().contains(word)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    pub doc_id: String,
    /// Lowercased, sorted, deduplicated.
    pub keywords: BTreeSet<String>,
}

impl KeywordSet {
    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }
}

fn is_keyword_shape(word: &str) -> bool {
    word.chars().all(|c| c.is_alphabetic() || c == '-')
        && word.chars().any(char::is_alphabetic)
        && word.chars().count() >= 2
}

pub fn extract_keywords(doc: &Document) -> KeywordSet {
    keywords_from_text(&doc.doc_id, &doc.text)
}

pub(crate) fn keywords_from_text(doc_id: &str, text: &str) -> KeywordSet {
    let keywords = tokenize(text)
        .into_iter()
        .map(|t| t.norm)
        .filter(|w| is_keyword_shape(w) && !is_stopword(w))
        .collect();
    KeywordSet {
        doc_id: doc_id.to_owned(),
        keywords,
    }
}
