//! Dialogue corpora and the documents derived from them.
//!
//! The on-disk format is a single JSON object:
//!
//! ```json
//! {"dialogues":[{"id":"d1","topic":"Facebook","turns":[
//!   {"speaker":"apprentice","text":"...","knowledge":["..."]}]}]}
//! ```
//!
//! Every utterance text and every knowledge passage becomes one [`Document`].
//! Documents are enumerated in dialogue order, then turn order, with the
//! utterance text ahead of its knowledge passages.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed corpus JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("schema violation in dialogue {dialogue}{}: {reason}", turn.map(|t| format!(", turn {t}")).unwrap_or_default())]
    Schema {
        dialogue: String,
        turn: Option<usize>,
        reason: String,
    },
}

impl CorpusError {
    fn schema(dialogue: &str, turn: Option<usize>, reason: impl Into<String>) -> Self {
        CorpusError::Schema {
            dialogue: dialogue.to_owned(),
            turn,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Wizard,
    Apprentice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
    /// Retrieved knowledge passages attached to this turn.
    #[serde(default)]
    pub knowledge: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub topic: String,
    pub turns: Vec<Utterance>,
}

impl Dialogue {
    fn validate(&self) -> Result<(), CorpusError> {
        if self.turns.len() < 2 {
            return Err(CorpusError::schema(
                &self.id,
                None,
                format!("expected at least 2 turns, found {}", self.turns.len()),
            ));
        }
        for (t, turn) in self.turns.iter().enumerate() {
            if turn.text.trim().is_empty() {
                return Err(CorpusError::schema(&self.id, Some(t), "empty text"));
            }
            if let Some(k) = turn.knowledge.iter().position(|p| p.trim().is_empty()) {
                return Err(CorpusError::schema(
                    &self.id,
                    Some(t),
                    format!("empty knowledge passage at index {k}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DocumentOrigin {
    UtteranceText,
    KnowledgePassage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub origin: DocumentOrigin,
}

/// Which turns contribute their knowledge passages as documents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum KnowledgeScope {
    #[default]
    All,
    WizardOnly,
}

/// A validated, immutable set of dialogues.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Corpus {
    dialogues: Vec<Dialogue>,
}

#[derive(Deserialize)]
struct RawCorpus {
    dialogues: Vec<RawDialogue>,
}

#[derive(Deserialize)]
struct RawDialogue {
    id: Option<String>,
    topic: Option<String>,
    turns: Option<Vec<RawTurn>>,
}

#[derive(Deserialize)]
struct RawTurn {
    speaker: Option<Speaker>,
    text: Option<String>,
    #[serde(default)]
    knowledge: Vec<String>,
}

impl RawDialogue {
    fn into_dialogue(self, position: usize) -> Result<Dialogue, CorpusError> {
        let id = self.id.ok_or_else(|| {
            CorpusError::schema(&format!("#{position}"), None, "missing field `id`")
        })?;
        let topic = self
            .topic
            .ok_or_else(|| CorpusError::schema(&id, None, "missing field `topic`"))?;
        let raw_turns = self
            .turns
            .ok_or_else(|| CorpusError::schema(&id, None, "missing field `turns`"))?;
        let mut turns = Vec::with_capacity(raw_turns.len());
        for (t, turn) in raw_turns.into_iter().enumerate() {
            let speaker = turn
                .speaker
                .ok_or_else(|| CorpusError::schema(&id, Some(t), "missing field `speaker`"))?;
            let text = turn
                .text
                .ok_or_else(|| CorpusError::schema(&id, Some(t), "missing field `text`"))?;
            turns.push(Utterance {
                speaker,
                text,
                knowledge: turn.knowledge,
            });
        }
        Ok(Dialogue { id, topic, turns })
    }
}

/// Reads and validates a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Corpus::from_json_slice(&bytes)
}

impl Corpus {
    pub fn from_dialogues(dialogues: Vec<Dialogue>) -> Result<Self, CorpusError> {
        let mut ids = HashSet::with_capacity(dialogues.len());
        for d in &dialogues {
            d.validate()?;
            if !ids.insert(d.id.as_str()) {
                return Err(CorpusError::schema(&d.id, None, "duplicate dialogue id"));
            }
        }
        Ok(Corpus { dialogues })
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, CorpusError> {
        let raw: RawCorpus = serde_json::from_slice(bytes)?;
        let dialogues = raw
            .dialogues
            .into_iter()
            .enumerate()
            .map(|(i, d)| d.into_dialogue(i))
            .collect::<Result<Vec<_>, _>>()?;
        Corpus::from_dialogues(dialogues)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("corpus serialization is infallible")
    }

    pub fn dialogues(&self) -> &[Dialogue] {
        &self.dialogues
    }

    pub fn len(&self) -> usize {
        self.dialogues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }

    pub fn topics(&self) -> BTreeSet<&str> {
        self.dialogues.iter().map(|d| d.topic.as_str()).collect()
    }

    /// Documents for graph building, with knowledge from every turn.
    pub fn documents(&self) -> Vec<Document> {
        self.documents_with(KnowledgeScope::All)
    }

    pub fn documents_with(&self, scope: KnowledgeScope) -> Vec<Document> {
        let mut docs = Vec::new();
        for d in &self.dialogues {
            for (t, turn) in d.turns.iter().enumerate() {
                docs.push(Document {
                    doc_id: format!("{}:{t}", d.id),
                    text: turn.text.clone(),
                    origin: DocumentOrigin::UtteranceText,
                });
                if scope == KnowledgeScope::WizardOnly && turn.speaker != Speaker::Wizard {
                    continue;
                }
                for (k, passage) in turn.knowledge.iter().enumerate() {
                    docs.push(Document {
                        doc_id: format!("{}:{t}:k{k}", d.id),
                        text: passage.clone(),
                        origin: DocumentOrigin::KnowledgePassage,
                    });
                }
            }
        }
        docs
    }

    /// Splits into (seen, unseen) by whether a dialogue's topic is in
    /// `train_topics`. Dialogue order is preserved on both sides.
    pub fn split_seen_unseen<S: AsRef<str>>(&self, train_topics: &[S]) -> (Corpus, Corpus) {
        let train: HashSet<&str> = train_topics.iter().map(AsRef::as_ref).collect();
        let (seen, unseen) = self
            .dialogues
            .iter()
            .cloned()
            .partition(|d| train.contains(d.topic.as_str()));
        (Corpus { dialogues: seen }, Corpus { dialogues: unseen })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn turn(speaker: Speaker, text: &str, knowledge: &[&str]) -> Utterance {
        Utterance {
            speaker,
            text: text.into(),
            knowledge: knowledge.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn dialogue(id: &str, topic: &str) -> Dialogue {
        Dialogue {
            id: id.into(),
            topic: topic.into(),
            turns: vec![
                turn(Speaker::Apprentice, "hi there", &[]),
                turn(Speaker::Wizard, "hello", &["a passage"]),
            ],
        }
    }

    #[test]
    fn one_dialogue_yields_three_documents() {
        let c = Corpus::from_dialogues(vec![dialogue("d1", "t")]).unwrap();
        let docs = c.documents();
        assert_eq!(docs.len(), 3);
        assert_eq!(docs[0].doc_id, "d1:0");
        assert_eq!(docs[1].origin, DocumentOrigin::UtteranceText);
        assert_eq!(docs[2].origin, DocumentOrigin::KnowledgePassage);
        assert_eq!(docs[2].text, "a passage");
    }

    #[test]
    fn empty_dialogue_list_is_valid() {
        let c = Corpus::from_json_slice(br#"{"dialogues":[]}"#).unwrap();
        assert!(c.is_empty());
        assert!(c.documents().is_empty());
    }

    #[test]
    fn empty_text_names_the_turn() {
        let json = br#"{"dialogues":[{"id":"d7","topic":"x","turns":[
            {"speaker":"wizard","text":"ok","knowledge":[]},
            {"speaker":"apprentice","text":"  ","knowledge":[]}]}]}"#;
        match Corpus::from_json_slice(json).unwrap_err() {
            CorpusError::Schema { dialogue, turn, .. } => {
                assert_eq!(dialogue, "d7");
                assert_eq!(turn, Some(1));
            }
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn missing_field_and_bad_json() {
        let json = br#"{"dialogues":[{"id":"d2","topic":"x","turns":[{"speaker":"wizard"}]}]}"#;
        let err = Corpus::from_json_slice(json).unwrap_err();
        assert!(err.to_string().contains("d2"), "{err}");
        assert!(err.to_string().contains("text"), "{err}");
        assert!(matches!(
            Corpus::from_json_slice(b"{\"dialogues\": [").unwrap_err(),
            CorpusError::Parse(_)
        ));
    }

    #[test]
    fn rejects_short_dialogues_and_duplicate_ids() {
        let mut d = dialogue("d1", "t");
        d.turns.pop();
        assert!(Corpus::from_dialogues(vec![d]).is_err());
        let err = Corpus::from_dialogues(vec![dialogue("a", "t"), dialogue("a", "u")]).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn wizard_only_scope_drops_apprentice_knowledge() {
        let mut d = dialogue("d1", "t");
        d.turns[0].knowledge.push("apprentice passage".into());
        let c = Corpus::from_dialogues(vec![d]).unwrap();
        assert_eq!(c.documents().len(), 4);
        let docs = c.documents_with(KnowledgeScope::WizardOnly);
        assert_eq!(docs.len(), 3);
        assert!(docs.iter().all(|d| d.text != "apprentice passage"));
    }

    #[test]
    fn split_partitions_by_topic() {
        let c = Corpus::from_dialogues(vec![
            dialogue("1", "A"),
            dialogue("2", "B"),
            dialogue("3", "A"),
        ])
        .unwrap();
        let (seen, unseen) = c.split_seen_unseen(&["A"]);
        assert_eq!(
            seen.dialogues()
                .iter()
                .map(|d| d.id.as_str())
                .collect::<Vec<_>>(),
            ["1", "3"]
        );
        assert_eq!(unseen.dialogues()[0].id, "2");

        let (all, none) = c.split_seen_unseen(&["A", "B"]);
        assert_eq!(all, c);
        assert!(none.is_empty());

        let (none, all) = c.split_seen_unseen::<&str>(&[]);
        assert!(none.is_empty());
        assert_eq!(all, c);
    }

    #[test]
    fn json_round_trip() {
        let c = Corpus::from_dialogues(vec![dialogue("1", "A")]).unwrap();
        let again = Corpus::from_json_slice(c.to_json_string().as_bytes()).unwrap();
        assert_eq!(c, again);
    }
}
