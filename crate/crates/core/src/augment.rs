//! Training-instance generation.
//!
//! Three instance streams come out of each dialogue:
//!
//! * `dialogue`: the previous turns joined by a separator token predict the
//!   current turn.
//! * `graph`: `[GRAPH]` plus the same context predicts the top-K 1-hop
//!   neighbors of a proper noun found in the context.
//! * `ner`: `[NER]` plus a single turn predicts the turn with every entity
//!   token replaced by its bracketed tag.
//!
//! All `src`/`tgt` strings are tokenizer output joined by single spaces, so
//! splitting on whitespace recovers the tokens exactly.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cograph::CoGraph;
use crate::corpus::{Corpus, Dialogue};
use crate::textproc::{
    detect_proper_nouns, ner_tag, tokenize, Gazetteer, SentencePosition, TaggedSentence,
    TaggerConfig, TextError, Token,
};

pub const GRAPH_MARKER: &str = "[GRAPH]";
pub const NER_MARKER: &str = "[NER]";
pub const DEFAULT_K: usize = 10;
pub const DEFAULT_MAX_SRC_TOKENS: usize = 512;
pub const DEFAULT_TURN_SEPARATOR: &str = "[SEP]";

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("invalid augment config: {0}")]
    Config(String),
    #[error("dialogue {dialogue}, turn {turn}: {source}")]
    Tagging {
        dialogue: String,
        turn: usize,
        #[source]
        source: TextError,
    },
    #[error("dialogue {dialogue}, turn {turn}: tagged tokens do not match the turn")]
    Alignment { dialogue: String, turn: usize },
    #[error("tag file has {tagged} sentences but the corpus has {turns} turns")]
    TagCount { tagged: usize, turns: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Dialogue,
    Graph,
    Ner,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Dialogue => "dialogue",
            Task::Graph => "graph",
            Task::Ner => "ner",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "dialogue" => Ok(Task::Dialogue),
            "graph" => Ok(Task::Graph),
            "ner" => Ok(Task::Ner),
            other => Err(format!("unknown task `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskSet {
    pub dialogue: bool,
    pub graph: bool,
    pub ner: bool,
}

impl TaskSet {
    pub const ALL: TaskSet = TaskSet {
        dialogue: true,
        graph: true,
        ner: true,
    };

    pub fn contains(&self, task: Task) -> bool {
        match task {
            Task::Dialogue => self.dialogue,
            Task::Graph => self.graph,
            Task::Ner => self.ner,
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.dialogue || self.graph || self.ner)
    }
}

impl Default for TaskSet {
    fn default() -> Self {
        TaskSet::ALL
    }
}

impl FromStr for TaskSet {
    type Err = String;

    /// Comma-separated task names, e.g. `dialogue,graph`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = TaskSet {
            dialogue: false,
            graph: false,
            ner: false,
        };
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            match part.parse()? {
                Task::Dialogue => set.dialogue = true,
                Task::Graph => set.graph = true,
                Task::Ner => set.ner = true,
            }
        }
        if set.is_empty() {
            return Err("no tasks selected".into());
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentConfig {
    /// Neighbors per graph target.
    pub k: usize,
    pub tasks: TaskSet,
    /// Single token placed between turns in a context.
    pub turn_separator: String,
    pub max_src_tokens: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            k: DEFAULT_K,
            tasks: TaskSet::ALL,
            turn_separator: DEFAULT_TURN_SEPARATOR.into(),
            max_src_tokens: DEFAULT_MAX_SRC_TOKENS,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let bad = |m: &str| Err(AugmentError::Config(m.into()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.tasks.is_empty() {
            return bad("at least one task is required");
        }
        if self.turn_separator.is_empty() || self.turn_separator.contains(char::is_whitespace) {
            return bad("turn separator must be a single non-empty token");
        }
        if self.max_src_tokens < 2 {
            return bad("max_src_tokens must leave room for a marker and one token");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub dialogue_id: String,
    pub turn_index: usize,
    /// Entity surface for graph instances.
    pub entity: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub task: Task,
    pub src: String,
    pub tgt: String,
    pub meta: InstanceMeta,
}

fn turn_tokens(dialogue: &Dialogue) -> Vec<Vec<Token>> {
    dialogue.turns.iter().map(|t| tokenize(&t.text)).collect()
}

/// The turns before `upto`, separated by `sep`, keeping the last `budget`
/// tokens. Returns the kept tokens and the index of the first kept position
/// in the untruncated sequence.
fn context<'a>(
    turns: &'a [Vec<Token>],
    upto: usize,
    sep: &'a str,
    budget: usize,
) -> (Vec<&'a str>, usize) {
    let mut seq: Vec<&str> = Vec::new();
    for (t, toks) in turns[..upto].iter().enumerate() {
        if t > 0 {
            seq.push(sep);
        }
        seq.extend(toks.iter().map(|t| t.surface.as_str()));
    }
    let cut = seq.len().saturating_sub(budget);
    (seq.split_off(cut), cut)
}

fn meta(dialogue: &Dialogue, turn_index: usize, entity: Option<String>) -> InstanceMeta {
    InstanceMeta {
        dialogue_id: dialogue.id.clone(),
        turn_index,
        entity,
    }
}

fn dialogue_instances(
    dialogue: &Dialogue,
    turns: &[Vec<Token>],
    cfg: &AugmentConfig,
) -> Vec<TrainingInstance> {
    (1..turns.len())
        .filter_map(|i| {
            let (src, _) = context(turns, i, &cfg.turn_separator, cfg.max_src_tokens);
            let tgt: Vec<&str> = turns[i].iter().map(|t| t.surface.as_str()).collect();
            (!src.is_empty() && !tgt.is_empty()).then(|| TrainingInstance {
                task: Task::Dialogue,
                src: src.join(" "),
                tgt: tgt.join(" "),
                meta: meta(dialogue, i, None),
            })
        })
        .collect()
}

/// One instance per turn after the first: the history predicts the turn.
pub fn make_dialogue_instances(dialogue: &Dialogue, cfg: &AugmentConfig) -> Vec<TrainingInstance> {
    dialogue_instances(dialogue, &turn_tokens(dialogue), cfg)
}

struct Mention {
    start: usize,
    node: String,
    surface: String,
}

fn graph_instances(
    dialogue: &Dialogue,
    turns: &[Vec<Token>],
    graph: &CoGraph,
    gazetteer: &Gazetteer,
    cfg: &AugmentConfig,
) -> Vec<TrainingInstance> {
    // Mentions with their position in the full separator-joined history.
    let mut mentions = Vec::new();
    let mut offset = 0;
    for toks in turns {
        for span in detect_proper_nouns(toks, SentencePosition::SentenceStart, gazetteer) {
            let words = &toks[span.range()];
            mentions.push(Mention {
                start: offset + span.start,
                node: words
                    .iter()
                    .map(|t| t.norm.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
                surface: words
                    .iter()
                    .map(|t| t.surface.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
            });
        }
        offset += toks.len() + 1;
    }

    let mut out = Vec::new();
    let mut turn_start = 0;
    for i in 1..turns.len() {
        turn_start += turns[i - 1].len() + 1;
        let (ctx, cut) = context(turns, i, &cfg.turn_separator, cfg.max_src_tokens - 1);
        if ctx.is_empty() {
            continue;
        }
        let src = format!("{GRAPH_MARKER} {}", ctx.join(" "));
        for m in mentions
            .iter()
            .filter(|m| m.start >= cut && m.start < turn_start)
        {
            let Ok(seq) = graph.one_hop_sequence(&m.node, cfg.k) else {
                continue;
            };
            if seq.is_empty() {
                continue;
            }
            out.push(TrainingInstance {
                task: Task::Graph,
                src: src.clone(),
                tgt: seq.join(" "),
                meta: meta(dialogue, i, Some(m.surface.clone())),
            });
        }
    }
    out
}

/// Graph-task instances for every context that mentions a proper noun known
/// to the graph, one per entity occurrence in order of appearance.
/// Entities missing from the graph, or isolated in it, produce nothing.
pub fn make_graph_instances(
    dialogue: &Dialogue,
    graph: &CoGraph,
    gazetteer: &Gazetteer,
    cfg: &AugmentConfig,
) -> Vec<TrainingInstance> {
    graph_instances(dialogue, &turn_tokens(dialogue), graph, gazetteer, cfg)
}

/// NER-task instances from per-turn tags. `tagged[t]` must hold exactly the
/// tokens of turn `t`.
pub fn make_ner_instances(
    dialogue: &Dialogue,
    tagged: &[TaggedSentence],
    cfg: &AugmentConfig,
) -> Result<Vec<TrainingInstance>, AugmentError> {
    let turns = turn_tokens(dialogue);
    if tagged.len() != turns.len() {
        return Err(AugmentError::Alignment {
            dialogue: dialogue.id.clone(),
            turn: tagged.len().min(turns.len()),
        });
    }
    let mut out = Vec::new();
    for (t, (sentence, toks)) in tagged.iter().zip(&turns).enumerate() {
        if sentence.tokens() != toks.as_slice() {
            return Err(AugmentError::Alignment {
                dialogue: dialogue.id.clone(),
                turn: t,
            });
        }
        if !sentence.has_entities() {
            continue;
        }
        let keep = sentence.len().min(cfg.max_src_tokens - 1);
        let pairs = sentence.tokens()[..keep]
            .iter()
            .zip(&sentence.tags()[..keep]);
        let mut src = String::from(NER_MARKER);
        let mut tgt = Vec::with_capacity(keep);
        for (tok, tag) in pairs {
            src.push(' ');
            src.push_str(&tok.surface);
            tgt.push(tag.placeholder().unwrap_or(&tok.surface));
        }
        out.push(TrainingInstance {
            task: Task::Ner,
            src,
            tgt: tgt.join(" "),
            meta: meta(dialogue, t, None),
        });
    }
    Ok(out)
}

/// Corpus-level generator tying a graph and a tagger to a config.
#[derive(Debug)]
pub struct Augmenter<'g> {
    cfg: AugmentConfig,
    graph: Option<&'g CoGraph>,
    tagger: TaggerConfig,
    gazetteer: Gazetteer,
}

impl<'g> Augmenter<'g> {
    /// `graph` is required when the graph task is enabled. `gazetteer` drives
    /// proper-noun detection for graph targets; `tagger` drives NER targets.
    pub fn new(
        cfg: AugmentConfig,
        graph: Option<&'g CoGraph>,
        tagger: TaggerConfig,
        gazetteer: Gazetteer,
    ) -> Result<Self, AugmentError> {
        cfg.validate()?;
        if cfg.tasks.graph && graph.is_none() {
            return Err(AugmentError::Config("the graph task needs a graph".into()));
        }
        Ok(Augmenter {
            cfg,
            graph,
            tagger,
            gazetteer,
        })
    }

    pub fn config(&self) -> &AugmentConfig {
        &self.cfg
    }

    /// Instances for one dialogue, ordered by turn, then task, then entity
    /// appearance. `first_sentence` is the global index of the dialogue's
    /// first turn, used to address external tag files.
    pub fn dialogue(
        &self,
        dialogue: &Dialogue,
        first_sentence: usize,
    ) -> Result<Vec<TrainingInstance>, AugmentError> {
        let turns = turn_tokens(dialogue);
        let mut out = Vec::new();
        if self.cfg.tasks.dialogue {
            out.extend(dialogue_instances(dialogue, &turns, &self.cfg));
        }
        if let (true, Some(graph)) = (self.cfg.tasks.graph, self.graph) {
            out.extend(graph_instances(
                dialogue,
                &turns,
                graph,
                &self.gazetteer,
                &self.cfg,
            ));
        }
        if self.cfg.tasks.ner {
            let tagged = turns
                .iter()
                .enumerate()
                .map(|(t, toks)| {
                    ner_tag(toks, &self.tagger, first_sentence + t).map_err(|source| {
                        AugmentError::Tagging {
                            dialogue: dialogue.id.clone(),
                            turn: t,
                            source,
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.extend(make_ner_instances(dialogue, &tagged, &self.cfg)?);
        }
        // Stable: keeps entity order within (turn, task).
        out.sort_by_key(|inst| (inst.meta.turn_index, inst.task));
        Ok(out)
    }

    /// Instances for the whole corpus in emission order. Dialogues are
    /// processed in parallel; the result does not depend on scheduling.
    pub fn corpus(&self, corpus: &Corpus) -> Result<Vec<TrainingInstance>, AugmentError> {
        let mut starts = Vec::with_capacity(corpus.len());
        let mut total = 0;
        for d in corpus.dialogues() {
            starts.push(total);
            total += d.turns.len();
        }
        if let (true, TaggerConfig::External(ext)) = (self.cfg.tasks.ner, &self.tagger) {
            if ext.len() != total {
                return Err(AugmentError::TagCount {
                    tagged: ext.len(),
                    turns: total,
                });
            }
        }
        let per_dialogue = corpus
            .dialogues()
            .par_iter()
            .zip(starts)
            .map(|(d, start)| self.dialogue(d, start))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(per_dialogue.into_iter().flatten().collect())
    }
}

/// Writes one compact JSON object per line, LF-terminated.
pub fn write_jsonl(instances: &[TrainingInstance], mut w: impl Write) -> std::io::Result<()> {
    for inst in instances {
        serde_json::to_writer(&mut w, inst)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn emit_jsonl(
    instances: &[TrainingInstance],
    path: impl AsRef<Path>,
) -> Result<(), AugmentError> {
    let path = path.as_ref();
    let io_err = |source| AugmentError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    write_jsonl(instances, BufWriter::new(file)).map_err(io_err)
}
