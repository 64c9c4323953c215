//! Tokenization, keyword extraction and named-entity tagging.

mod keywords;
mod ner;
mod tokenize;

use thiserror::Error;

pub use keywords::{extract_keywords, is_stopword, KeywordSet};
pub use ner::{
    detect_proper_nouns, ner_tag, ExternalTags, Gazetteer, NerTag, SentencePosition, Span,
    TaggedSentence, TaggerConfig,
};
pub use tokenize::{is_punctuation, join_surfaces, tokenize, Token};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("tag file line {line}: {reason}")]
    TagParse { line: usize, reason: String },
    #[error("tag alignment error in sentence {sentence}: {reason}")]
    Alignment { sentence: usize, reason: String },
}
