//! Corpus-to-training-data toolkit for knowledge-grounded dialogue.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`corpus`] loads dialogues with their retrieved knowledge passages and
//!    flattens them into documents.
//! 2. [`textproc`] turns documents into keyword sets and tags named entities.
//! 3. [`cograph`] builds an undirected keyword co-occurrence graph and answers
//!    weighted 1-hop queries.
//! 4. [`augment`] produces dialogue, `[GRAPH]` and `[NER]` training instances
//!    as deterministic JSONL.
//!
//! [`metrics`] implements perplexity, unigram F1 and ROUGE-N for evaluating
//! models trained on the emitted data.

pub mod augment;
pub mod cograph;
pub mod corpus;
pub mod metrics;
pub mod textproc;

pub use augment::{
    AugmentConfig, AugmentError, Augmenter, InstanceMeta, Task, TaskSet, TrainingInstance,
};
pub use cograph::{CoGraph, GraphBuilder, GraphError, NeighborWeight};
pub use corpus::{
    Corpus, CorpusError, Dialogue, Document, DocumentOrigin, KnowledgeScope, Speaker, Utterance,
};
pub use metrics::{LogProbRecord, Metric, MetricError, MetricReport};
pub use textproc::{
    Gazetteer, KeywordSet, NerTag, Span, TaggedSentence, TaggerConfig, TextError, Token,
};
