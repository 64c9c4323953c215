//! Proper-noun detection and pluggable named-entity tagging.
//!
//! Two taggers are available. The heuristic tagger marks capitalized runs as
//! entities and types them from per-type gazetteer files, falling back to
//! `MISC`. The external tagger replays CoNLL-style tags produced elsewhere.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::keywords::is_stopword;
use super::tokenize::{tokenize, Token};
use super::TextError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NerTag {
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "ORG")]
    Org,
    #[serde(rename = "MISC")]
    Misc,
    #[serde(rename = "O")]
    O,
}

impl NerTag {
    pub const ENTITY_TYPES: [NerTag; 4] = [NerTag::Per, NerTag::Loc, NerTag::Org, NerTag::Misc];

    pub fn as_str(self) -> &'static str {
        match self {
            NerTag::Per => "PER",
            NerTag::Loc => "LOC",
            NerTag::Org => "ORG",
            NerTag::Misc => "MISC",
            NerTag::O => "O",
        }
    }

    pub fn is_entity(self) -> bool {
        self != NerTag::O
    }

    /// Bracketed token substituted for an entity in `[NER]` targets.
    /// `None` for `O`.
    pub fn placeholder(self) -> Option<&'static str> {
        match self {
            NerTag::Per => Some("[PER]"),
            NerTag::Loc => Some("[LOC]"),
            NerTag::Org => Some("[ORG]"),
            NerTag::Misc => Some("[MISC]"),
            NerTag::O => None,
        }
    }
}

impl fmt::Display for NerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NerTag {
    type Err = String;

    /// Accepts bare types and BIO/BIOES prefixed forms (`B-PER`, `I-LOC`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bare = match s.split_once('-') {
            Some(("B" | "I" | "E" | "S" | "L" | "U", rest)) => rest,
            _ => s,
        };
        match bare {
            "PER" => Ok(NerTag::Per),
            "LOC" => Ok(NerTag::Loc),
            "ORG" => Ok(NerTag::Org),
            "MISC" => Ok(NerTag::Misc),
            "O" => Ok(NerTag::O),
            other => Err(format!("unknown tag `{other}`")),
        }
    }
}

/// Inclusive token range `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentencePosition {
    /// Token 0 opens a sentence.
    SentenceStart,
    /// The tokens are a fragment from inside a sentence.
    Mid,
}

/// Lowercased entity phrases keyed to their type.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    phrases: HashMap<String, NerTag>,
    first_words: HashSet<String>,
    max_len: usize,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a phrase. A phrase already present keeps its first type.
    pub fn insert(&mut self, phrase: &str, tag: NerTag) {
        assert!(tag.is_entity(), "gazetteer entries need an entity type");
        let words: Vec<String> = tokenize(phrase).into_iter().map(|t| t.norm).collect();
        if words.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(words.len());
        self.first_words.insert(words[0].clone());
        self.phrases.entry(words.join(" ")).or_insert(tag);
    }

    /// Loads `per.txt`, `loc.txt`, `org.txt` and `misc.txt` from `dir`, one
    /// entry per line. Missing files count as empty. Earlier files win when
    /// an entry is listed under several types.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, TextError> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(TextError::Io {
                path: dir.display().to_string(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
            });
        }
        let mut gaz = Gazetteer::new();
        for (file, tag) in [
            ("per.txt", NerTag::Per),
            ("loc.txt", NerTag::Loc),
            ("org.txt", NerTag::Org),
            ("misc.txt", NerTag::Misc),
        ] {
            let path = dir.join(file);
            let text = match fs::read_to_string(&path) {
                Ok(text) => text,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
                Err(source) => {
                    return Err(TextError::Io {
                        path: path.display().to_string(),
                        source,
                    })
                }
            };
            for line in text.lines() {
                gaz.insert(line.trim(), tag);
            }
        }
        Ok(gaz)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn lookup(&self, words: &[&str]) -> Option<NerTag> {
        self.phrases.get(&words.join(" ")).copied()
    }

    fn starts_phrase(&self, norm: &str) -> bool {
        self.first_words.contains(norm)
    }
}

fn is_capitalized(surface: &str) -> bool {
    surface.chars().next().is_some_and(char::is_uppercase)
}

fn is_all_caps(surface: &str) -> bool {
    surface.chars().filter(|c| c.is_alphabetic()).count() >= 2
        && !surface.chars().any(char::is_lowercase)
}

fn ends_sentence(surface: &str) -> bool {
    matches!(surface, "." | "!" | "?")
}

/// Finds maximal runs of capitalized tokens.
///
/// Sentence-initial tokens are capitalized by convention, so one opens a run
/// only if the gazetteer knows it, it is all-caps, or the next token is itself
/// a capitalized name. Capitalized stopwords ("I", "The") never qualify unless
/// listed. Tokens after `.`, `!` or `?` are treated as sentence-initial.
pub fn detect_proper_nouns(
    sentence: &[Token],
    position: SentencePosition,
    gazetteer: &Gazetteer,
) -> Vec<Span> {
    let initial = |i: usize| {
        if i == 0 {
            position == SentencePosition::SentenceStart
        } else {
            ends_sentence(&sentence[i - 1].surface)
        }
    };
    let capital_name = |t: &Token| {
        is_capitalized(&t.surface) && (!is_stopword(&t.norm) || gazetteer.starts_phrase(&t.norm))
    };
    let continues = |i: usize| i < sentence.len() && !initial(i) && capital_name(&sentence[i]);

    let mut spans = Vec::new();
    let mut i = 0;
    while i < sentence.len() {
        let tok = &sentence[i];
        let opens = if !is_capitalized(&tok.surface) {
            false
        } else if initial(i) {
            gazetteer.starts_phrase(&tok.norm)
                || is_all_caps(&tok.surface)
                || (!is_stopword(&tok.norm) && continues(i + 1))
        } else {
            capital_name(tok)
        };
        if !opens {
            i += 1;
            continue;
        }
        let start = i;
        i += 1;
        while continues(i) {
            i += 1;
        }
        spans.push(Span::new(start, i - 1));
    }
    spans
}

/// Tokens paired with one tag each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    tokens: Vec<Token>,
    tags: Vec<NerTag>,
}

impl TaggedSentence {
    pub fn new(tokens: Vec<Token>, tags: Vec<NerTag>) -> Result<Self, TextError> {
        if tokens.len() != tags.len() {
            return Err(TextError::Alignment {
                sentence: 0,
                reason: format!("{} tokens but {} tags", tokens.len(), tags.len()),
            });
        }
        Ok(TaggedSentence { tokens, tags })
    }

    pub fn untagged(tokens: Vec<Token>) -> Self {
        let tags = vec![NerTag::O; tokens.len()];
        TaggedSentence { tokens, tags }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn tags(&self) -> &[NerTag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn has_entities(&self) -> bool {
        self.tags.iter().any(|t| t.is_entity())
    }

    /// Maximal runs of the same entity type.
    pub fn entity_spans(&self) -> Vec<(Span, NerTag)> {
        let mut out: Vec<(Span, NerTag)> = Vec::new();
        for (i, &tag) in self.tags.iter().enumerate() {
            if !tag.is_entity() {
                continue;
            }
            match out.last_mut() {
                Some((span, prev)) if *prev == tag && span.end + 1 == i => span.end = i,
                _ => out.push((Span::new(i, i), tag)),
            }
        }
        out
    }
}

/// Tags parsed from a CoNLL-style file: `token<TAB>tag` per line, blank line
/// between sentences.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExternalTags {
    sentences: Vec<Vec<(String, NerTag)>>,
}

impl ExternalTags {
    pub fn from_reader(reader: impl Read) -> Result<Self, TextError> {
        let mut sentences = Vec::new();
        let mut current = Vec::new();
        for (n, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|source| TextError::Io {
                path: "<tags>".into(),
                source,
            })?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                if !current.is_empty() {
                    sentences.push(std::mem::take(&mut current));
                }
                continue;
            }
            let (token, tag) = line.split_once('\t').ok_or_else(|| TextError::TagParse {
                line: n + 1,
                reason: "expected `token<TAB>tag`".into(),
            })?;
            let tag = tag.trim().parse().map_err(|reason| TextError::TagParse {
                line: n + 1,
                reason,
            })?;
            current.push((token.to_owned(), tag));
        }
        if !current.is_empty() {
            sentences.push(current);
        }
        Ok(ExternalTags { sentences })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, TextError> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|source| TextError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(file)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    fn align(&self, sentence: usize, tokens: &[Token]) -> Result<Vec<NerTag>, TextError> {
        let misaligned = |reason: String| TextError::Alignment { sentence, reason };
        let rows = self
            .sentences
            .get(sentence)
            .ok_or_else(|| misaligned(format!("tag file has only {} sentences", self.len())))?;
        if rows.len() != tokens.len() {
            return Err(misaligned(format!(
                "{} tokens but {} tags",
                tokens.len(),
                rows.len()
            )));
        }
        rows.iter()
            .zip(tokens)
            .map(|((surface, tag), tok)| {
                if *surface == tok.surface {
                    Ok(*tag)
                } else {
                    Err(misaligned(format!(
                        "token {} is `{}` but tag file has `{surface}`",
                        tok.index, tok.surface
                    )))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum TaggerConfig {
    Heuristic(Gazetteer),
    External(ExternalTags),
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig::Heuristic(Gazetteer::new())
    }
}

fn heuristic_tags(tokens: &[Token], gazetteer: &Gazetteer) -> Vec<NerTag> {
    let mut tags = vec![NerTag::O; tokens.len()];
    for span in detect_proper_nouns(tokens, SentencePosition::SentenceStart, gazetteer) {
        // Greedy longest gazetteer match inside the span; leftovers are MISC.
        let mut p = span.start;
        while p <= span.end {
            let longest = (span.end - p + 1).min(gazetteer.max_len);
            let hit = (1..=longest).rev().find_map(|len| {
                let words: Vec<&str> = tokens[p..p + len].iter().map(|t| t.norm.as_str()).collect();
                gazetteer.lookup(&words).map(|tag| (len, tag))
            });
            let (len, tag) = hit.unwrap_or((1, NerTag::Misc));
            tags[p..p + len].fill(tag);
            p += len;
        }
    }
    tags
}

/// Tags one sentence. `sentence` is the sentence's index in the external tag
/// file and is ignored by the heuristic tagger.
pub fn ner_tag(
    tokens: &[Token],
    tagger: &TaggerConfig,
    sentence: usize,
) -> Result<TaggedSentence, TextError> {
    let tags = match tagger {
        TaggerConfig::Heuristic(gaz) => heuristic_tags(tokens, gaz),
        TaggerConfig::External(ext) => ext.align(sentence, tokens)?,
    };
    Ok(TaggedSentence {
        tokens: tokens.to_vec(),
        tags,
    })
}
