//! Synthetic corpora for the CLI and acceptance suites.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use kgaug_core::{Corpus, Dialogue, Speaker, Utterance};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Topic {
    pub entity: &'static str,
    pub kind: &'static str,
    pub related: &'static [&'static str],
}

pub const TOPICS: &[Topic] = &[
    Topic {
        entity: "Facebook",
        kind: "org",
        related: &["social", "media", "picture", "friends", "network"],
    },
    Topic {
        entity: "Google",
        kind: "org",
        related: &["retrieve", "email", "advertise", "search", "maps"],
    },
    Topic {
        entity: "Paris",
        kind: "loc",
        related: &["tower", "museum", "river", "city", "wine"],
    },
    Topic {
        entity: "Obama",
        kind: "per",
        related: &["president", "election", "senate", "speech", "policy"],
    },
    Topic {
        entity: "Beatles",
        kind: "org",
        related: &["band", "music", "album", "guitar", "concert"],
    },
];

/// Entities that never appear in knowledge passages and are not listed in
/// the gazetteer; they reach the NER task as MISC.
pub const UNSEEN: &[&str] = &["Zorblax", "Quintara"];

const FILLER: &[&str] = &[
    "really",
    "think",
    "love",
    "heard",
    "great",
    "interesting",
    "know",
    "about",
];

fn utterance(rng: &mut ChaCha8Rng, topic: &Topic) -> String {
    let mut words: Vec<String> = Vec::new();
    let opener = ["I", "Do you", "Have you", "My friend"]
        .choose(rng)
        .unwrap();
    words.push(opener.to_string());
    for _ in 0..rng.gen_range(2..6) {
        words.push(FILLER.choose(rng).unwrap().to_string());
        words.push(topic.related.choose(rng).unwrap().to_string());
    }
    let at = rng.gen_range(1..=words.len());
    words.insert(at, topic.entity.to_string());
    if rng.gen_bool(0.25) {
        let at = rng.gen_range(1..=words.len());
        words.insert(at, UNSEEN.choose(rng).unwrap().to_string());
    }
    let mut text = words.join(" ");
    text.push(*['.', '?', '!'].choose(rng).unwrap());
    text
}

fn passage(rng: &mut ChaCha8Rng, topic: &Topic) -> String {
    let mut rel: Vec<&str> = topic.related.to_vec();
    rel.shuffle(rng);
    format!(
        "{} is known for {} and {}, plus {}.",
        topic.entity, rel[0], rel[1], rel[2]
    )
}

/// A deterministic corpus of `n` dialogues over [`TOPICS`].
pub fn synthetic_corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dialogues = (0..n)
        .map(|i| {
            let topic = &TOPICS[i % TOPICS.len()];
            let turns = (0..rng.gen_range(3..7))
                .map(|t| {
                    let wizard = t % 2 == 1;
                    Utterance {
                        speaker: if wizard {
                            Speaker::Wizard
                        } else {
                            Speaker::Apprentice
                        },
                        text: utterance(&mut rng, topic),
                        knowledge: if wizard {
                            vec![passage(&mut rng, topic)]
                        } else {
                            vec![]
                        },
                    }
                })
                .collect();
            Dialogue {
                id: format!("syn-{i:03}"),
                topic: topic.entity.to_string(),
                turns,
            }
        })
        .collect();
    Corpus::from_dialogues(dialogues).unwrap()
}

/// Corpus whose knowledge passages force the neighbor counts of "facebook":
/// social 9, media 8, picture 6, then company and friends at 1.
pub fn facebook_corpus() -> Corpus {
    let mut passages: Vec<&str> = Vec::new();
    passages.extend(std::iter::repeat("Facebook social media picture").take(6));
    passages.extend(std::iter::repeat("Facebook social media").take(2));
    passages.push("Facebook social");
    passages.push("Facebook company friends");
    let dialogues = passages
        .iter()
        .enumerate()
        .map(|(i, p)| Dialogue {
            id: format!("fb-{i}"),
            topic: "Facebook".into(),
            turns: vec![
                Utterance {
                    speaker: Speaker::Apprentice,
                    text: "Tell me more".into(),
                    knowledge: vec![],
                },
                Utterance {
                    speaker: Speaker::Wizard,
                    text: "Sure thing".into(),
                    knowledge: vec![p.to_string()],
                },
            ],
        })
        .collect();
    Corpus::from_dialogues(dialogues).unwrap()
}

pub fn write_corpus(dir: &Path, name: &str, corpus: &Corpus) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, corpus.to_json_string()).unwrap();
    path
}

/// Writes per.txt / loc.txt / org.txt for [`TOPICS`] and returns the dir.
pub fn write_gazetteer(dir: &Path) -> PathBuf {
    let gaz = dir.join("gazetteer");
    fs::create_dir_all(&gaz).unwrap();
    for kind in ["per", "loc", "org"] {
        let entries: Vec<&str> = TOPICS
            .iter()
            .filter(|t| t.kind == kind)
            .map(|t| t.entity)
            .collect();
        fs::write(gaz.join(format!("{kind}.txt")), entries.join("\n") + "\n").unwrap();
    }
    gaz
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn kgaug(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("kgaug").chain(args.iter().copied());
    let code = kgaug_cli::run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
