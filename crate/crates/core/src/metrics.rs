//! Evaluation metrics: perplexity, unigram F1 and ROUGE-N.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::textproc::tokenize;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("record {0}: no log-probabilities")]
    EmptyLogProbs(String),
    #[error(
        "record {id}: log-probability {value} at position {position} is not a finite value <= 0"
    )]
    InvalidLogProb {
        id: String,
        position: usize,
        value: f64,
    },
    #[error("n must be at least 1")]
    ZeroN,
    #[error("at least one reference is required")]
    NoReferences,
    #[error("every reference is shorter than {0} tokens; ROUGE is undefined")]
    UndefinedRouge(usize),
    #[error("no items to score")]
    Empty,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Natural-log token probabilities for one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProbRecord {
    pub id: String,
    pub logprobs: Vec<f64>,
}

impl LogProbRecord {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.logprobs.is_empty() {
            return Err(MetricError::EmptyLogProbs(self.id.clone()));
        }
        if let Some((position, &value)) = self
            .logprobs
            .iter()
            .enumerate()
            .find(|(_, &v)| !v.is_finite() || v > 0.0)
        {
            return Err(MetricError::InvalidLogProb {
                id: self.id.clone(),
                position,
                value,
            });
        }
        Ok(())
    }
}

/// Reads `{"id":..,"logprobs":[..]}` lines. Blank lines are skipped.
pub fn read_logprobs(reader: impl Read) -> Result<Vec<LogProbRecord>, MetricError> {
    let mut out = Vec::new();
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let parse_err = |reason: String| MetricError::Parse {
            line: n + 1,
            reason,
        };
        let line = line.map_err(|e| parse_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogProbRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

/// `exp(-mean(logprobs))`.
pub fn perplexity(rec: &LogProbRecord) -> Result<f64, MetricError> {
    rec.validate()?;
    let nll: f64 = -rec.logprobs.iter().sum::<f64>();
    Ok((nll / rec.logprobs.len() as f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Perplexity,
    UnigramF1,
    RougeN(usize),
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Perplexity => f.write_str("ppl"),
            Metric::UnigramF1 => f.write_str("f1"),
            Metric::RougeN(n) => write!(f, "rouge-{n}"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemScore {
    pub id: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub metric: Metric,
    pub corpus_value: f64,
    pub per_item: Vec<ItemScore>,
}

/// Corpus perplexity pools every token of every record; it is not the mean
/// of per-record perplexities.
pub fn corpus_perplexity(records: &[LogProbRecord]) -> Result<MetricReport, MetricError> {
    if records.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut per_item = Vec::with_capacity(records.len());
    let (mut nll, mut tokens) = (0.0, 0usize);
    for rec in records {
        per_item.push(ItemScore {
            id: rec.id.clone(),
            value: perplexity(rec)?,
        });
        nll -= rec.logprobs.iter().sum::<f64>();
        tokens += rec.logprobs.len();
    }
    Ok(MetricReport {
        metric: Metric::Perplexity,
        corpus_value: (nll / tokens as f64).exp(),
        per_item,
    })
}

/// Tokenization options shared by F1 and ROUGE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOptions {
    pub lowercase: bool,
    pub strip_punctuation: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            lowercase: true,
            strip_punctuation: false,
        }
    }
}

fn words(text: &str, opts: MatchOptions) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !(opts.strip_punctuation && t.is_punctuation()))
        .map(|t| if opts.lowercase { t.norm } else { t.surface })
        .collect()
}

fn counts<T: Eq + Hash>(items: impl IntoIterator<Item = T>) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for it in items {
        *m.entry(it).or_insert(0) += 1;
    }
    m
}

fn clipped_overlap<T: Eq + Hash>(a: &HashMap<T, usize>, b: &HashMap<T, usize>) -> usize {
    a.iter()
        .map(|(k, &ca)| b.get(k).map_or(0, |&cb| ca.min(cb)))
        .sum()
}

pub fn unigram_f1(hyp: &str, reference: &str) -> f64 {
    unigram_f1_with(hyp, reference, MatchOptions::default())
}

/// Harmonic mean of clipped-unigram precision and recall. Two empty inputs
/// score 1; exactly one empty input scores 0.
pub fn unigram_f1_with(hyp: &str, reference: &str, opts: MatchOptions) -> f64 {
    let h = words(hyp, opts);
    let r = words(reference, opts);
    match (h.is_empty(), r.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let overlap = clipped_overlap(&counts(&h), &counts(&r));
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / h.len() as f64;
    let recall = overlap as f64 / r.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

fn ngrams(words: &[String], n: usize) -> HashMap<&[String], usize> {
    if words.len() < n {
        return HashMap::new();
    }
    counts(words.windows(n))
}

/// Matched reference n-grams over total reference n-grams, summed across all
/// references. Matches are clipped by the hypothesis count.
pub fn rouge_n(hyp: &str, refs: &[&str], n: usize) -> Result<f64, MetricError> {
    rouge_n_with(hyp, refs, n, MatchOptions::default())
}

pub fn rouge_n_with(
    hyp: &str,
    refs: &[&str],
    n: usize,
    opts: MatchOptions,
) -> Result<f64, MetricError> {
    if n == 0 {
        return Err(MetricError::ZeroN);
    }
    if refs.is_empty() {
        return Err(MetricError::NoReferences);
    }
    let h = words(hyp, opts);
    let hyp_grams = ngrams(&h, n);
    let (mut matched, mut total) = (0usize, 0usize);
    for r in refs {
        let r = words(r, opts);
        let ref_grams = ngrams(&r, n);
        matched += clipped_overlap(&ref_grams, &hyp_grams);
        total += ref_grams.values().sum::<usize>();
    }
    if total == 0 {
        return Err(MetricError::UndefinedRouge(n));
    }
    Ok(matched as f64 / total as f64)
}

/// Mean unigram F1 over aligned pairs. Items are numbered from 1.
pub fn corpus_f1(pairs: &[(&str, &str)], opts: MatchOptions) -> Result<MetricReport, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let per_item: Vec<ItemScore> = pairs
        .iter()
        .enumerate()
        .map(|(i, (h, r))| ItemScore {
            id: (i + 1).to_string(),
            value: unigram_f1_with(h, r, opts),
        })
        .collect();
    Ok(MetricReport {
        metric: Metric::UnigramF1,
        corpus_value: mean(&per_item),
        per_item,
    })
}

/// Mean ROUGE-N over items, each with its own reference set.
pub fn corpus_rouge(
    items: &[(&str, Vec<&str>)],
    n: usize,
    opts: MatchOptions,
) -> Result<MetricReport, MetricError> {
    if items.is_empty() {
        return Err(MetricError::Empty);
    }
    let per_item = items
        .iter()
        .enumerate()
        .map(|(i, (h, refs))| {
            rouge_n_with(h, refs, n, opts).map(|value| ItemScore {
                id: (i + 1).to_string(),
                value,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricReport {
        metric: Metric::RougeN(n),
        corpus_value: mean(&per_item),
        per_item,
    })
}

fn mean(items: &[ItemScore]) -> f64 {
    items.iter().map(|s| s.value).sum::<f64>() / items.len() as f64
}
