//! Synthetic inputs for the benchmarks.

use kgaug_core::{Corpus, Dialogue, Document, DocumentOrigin, Speaker, Utterance};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Alphabetic words "kwa", "kwb", ..., so they survive keyword extraction.
pub fn word(mut i: usize) -> String {
    let mut w = String::from("kw");
    loop {
        w.push((b'a' + (i % 26) as u8) as char);
        i /= 26;
        if i == 0 {
            return w;
        }
    }
}

fn vocab(size: usize) -> Vec<String> {
    (0..size).map(word).collect()
}

/// `n` documents of 5..30 words drawn with a skewed distribution from a
/// vocabulary of `vocab_size` words.
pub fn documents(n: usize, vocab_size: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = vocab(vocab_size);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(5..30);
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    let r: f64 = rng.gen();
                    vocab[((r * r) * vocab_size as f64) as usize].as_str()
                })
                .collect();
            Document {
                doc_id: format!("d{i}"),
                text: words.join(" "),
                origin: DocumentOrigin::UtteranceText,
            }
        })
        .collect()
}

/// `n` dialogues of 4 turns mentioning a few capitalized names.
pub fn corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = vocab(500);
    let names = ["Facebook", "Google", "Paris", "Obama", "Beatles"];
    let dialogues = (0..n)
        .map(|i| {
            let turns = (0..4)
                .map(|t| {
                    let mut words: Vec<&str> = vocab
                        .choose_multiple(&mut rng, 12)
                        .map(String::as_str)
                        .collect();
                    words.insert(
                        rng.gen_range(1..words.len()),
                        names.choose(&mut rng).unwrap(),
                    );
                    Utterance {
                        speaker: if t % 2 == 0 {
                            Speaker::Apprentice
                        } else {
                            Speaker::Wizard
                        },
                        text: words.join(" "),
                        knowledge: Vec::new(),
                    }
                })
                .collect();
            Dialogue {
                id: format!("b{i}"),
                topic: names[i % names.len()].into(),
                turns,
            }
        })
        .collect();
    Corpus::from_dialogues(dialogues).expect("valid synthetic corpus")
}

/// A random sentence of `len` words over a small vocabulary.
pub fn sentence(rng: &mut impl Rng, len: usize) -> String {
    const WORDS: &[&str] = &[
        "the", "cat", "sat", "on", "a", "mat", "dog", "ran", "far", "away",
    ];
    (0..len)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}
