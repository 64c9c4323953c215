//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p kgaug-cli --test acceptance`.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{facebook_corpus, kgaug, p, synthetic_corpus, write_corpus, write_gazetteer};
use kgaug_core::augment::{GRAPH_MARKER, NER_MARKER};
use kgaug_core::cograph::{CoGraph, GraphBuilder};
use kgaug_core::metrics::{perplexity, rouge_n, unigram_f1, LogProbRecord};
use kgaug_core::textproc::{ner_tag, tokenize};
use kgaug_core::{AugmentConfig, Augmenter, Gazetteer, TaggerConfig, Task, TrainingInstance};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    }};
}

fn e_exact() -> BigRational {
    let mut term = BigRational::one();
    let mut sum = BigRational::zero();
    for k in 1..=60 {
        sum += &term;
        term /= BigRational::from_integer(BigInt::from(k));
    }
    sum
}

/// Random corpora: up to 50 documents, each with up to 20 keywords drawn
/// from a 40-word vocabulary.
fn random_corpora(count: usize, seed: u64) -> Vec<Vec<BTreeSet<String>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..40).map(|i| format!("kw{i:02}")).collect();
    (0..count)
        .map(|_| {
            (0..rng.gen_range(0..=50))
                .map(|_| {
                    let n = rng.gen_range(0..=20);
                    vocab.choose_multiple(&mut rng, n).cloned().collect()
                })
                .collect()
        })
        .collect()
}

fn build(docs: &[BTreeSet<String>]) -> CoGraph {
    let mut b = GraphBuilder::new();
    for d in docs {
        b.add_keywords(d.iter().map(String::as_str));
    }
    b.finalize()
}

fn graph_oracle() -> Check {
    let start = Instant::now();
    for (i, docs) in random_corpora(200, 1).iter().enumerate() {
        let g = build(docs);
        let words: BTreeSet<&str> = docs.iter().flatten().map(String::as_str).collect();
        ensure!(
            g.node_count() == words.len(),
            "corpus {i}: node count {}",
            g.node_count()
        );
        let mut edges = 0;
        for a in &words {
            for b in &words {
                if a >= b {
                    continue;
                }
                let brute = docs
                    .iter()
                    .filter(|d| d.contains(*a) && d.contains(*b))
                    .count() as u64;
                ensure!(
                    g.count(a, b) == brute,
                    "corpus {i}: count({a},{b}) = {} vs {brute}",
                    g.count(a, b)
                );
                edges += usize::from(brute > 0);
            }
        }
        ensure!(g.edge_count() == edges, "corpus {i}: edge count");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(())
}

fn softmax_contract() -> Check {
    for docs in random_corpora(200, 1) {
        let g = build(&docs);
        for v in g.nodes() {
            let w = g.edge_weights(v).unwrap();
            if w.is_empty() {
                continue;
            }
            let sum: f64 = w.iter().map(|x| x.weight).sum();
            ensure!((sum - 1.0).abs() <= 1e-9, "{v}: weights sum to {sum}");
            let mut by_weight: Vec<_> = w.iter().collect();
            by_weight.sort_by(|a, b| {
                b.weight
                    .total_cmp(&a.weight)
                    .then_with(|| a.neighbor.cmp(&b.neighbor))
            });
            let mut by_count: Vec<_> = w.iter().collect();
            by_count.sort_by(|a, b| {
                b.count
                    .cmp(&a.count)
                    .then_with(|| a.neighbor.cmp(&b.neighbor))
            });
            for k in 1..=w.len() {
                let top: Vec<&str> = by_weight[..k].iter().map(|x| x.neighbor.as_str()).collect();
                let expect: Vec<&str> = by_count[..k].iter().map(|x| x.neighbor.as_str()).collect();
                ensure!(
                    top == expect,
                    "{v}: top-{k} by weight {top:?} vs by count {expect:?}"
                );
                ensure!(
                    g.one_hop_sequence(v, k).unwrap() == expect,
                    "{v}: one_hop_sequence k={k}"
                );
            }
        }
    }

    let json = r#"{"version":1,"doc_count":1000000,"nodes":["a","b","c","d"],
        "edges":[[0,1,1000000],[0,2,999999],[0,3,1],[1,2,500000]]}"#;
    let g = CoGraph::from_json_slice(json.as_bytes()).map_err(|e| e.to_string())?;
    for v in g.nodes() {
        let w = g.edge_weights(v).unwrap();
        ensure!(
            w.iter().all(|x| x.weight.is_finite()),
            "{v}: non-finite weight"
        );
        let sum: f64 = w.iter().map(|x| x.weight).sum();
        ensure!(
            (sum - 1.0).abs() <= 1e-9,
            "{v}: large-count weights sum to {sum}"
        );
    }
    Ok(())
}

fn worked_weight_case() -> Check {
    let mut b = GraphBuilder::new();
    b.add_keywords(["v", "b"]);
    b.add_keywords(["v", "b"]);
    b.add_keywords(["v", "c"]);
    let w = b.finalize().edge_weights("v").unwrap();
    // softmax(2, 1) = (1, e^-1) / (1 + e^-1), exactly.
    let damp = e_exact().recip();
    let total = BigRational::one() + &damp;
    let oracle = [
        (BigRational::one() / &total).to_f64().unwrap(),
        (damp / total).to_f64().unwrap(),
    ];
    ensure!(
        w.len() == 2 && w[0].neighbor == "b",
        "unexpected neighbors {w:?}"
    );
    for (got, (exact, printed)) in w.iter().zip(oracle.iter().zip([0.7311, 0.2689])) {
        ensure!(
            (got.weight - exact).abs() < 1e-4,
            "{} vs oracle {exact}",
            got.weight
        );
        ensure!(
            (exact - printed).abs() < 1e-4,
            "oracle {exact} vs {printed}"
        );
    }
    Ok(())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = write_corpus(dir.path(), "c.json", &synthetic_corpus(20, 11));
    let gaz = write_gazetteer(dir.path());
    let mut outputs = Vec::new();
    for run in 0..2 {
        let graph = dir.path().join(format!("g{run}.json"));
        let jsonl = dir.path().join(format!("o{run}.jsonl"));
        let out = kgaug(&["build-graph", "--input", p(&input), "--output", p(&graph)]);
        ensure!(out.code == 0, "build-graph: {}", out.stderr);
        let out = kgaug(&[
            "augment",
            "--input",
            p(&input),
            "--graph",
            p(&graph),
            "--output",
            p(&jsonl),
            "--gazetteer-dir",
            p(&gaz),
        ]);
        ensure!(out.code == 0, "augment: {}", out.stderr);
        outputs.push((fs::read(&graph).unwrap(), fs::read(&jsonl).unwrap()));
    }
    ensure!(outputs[0].0 == outputs[1].0, "graph files differ");
    ensure!(outputs[0].1 == outputs[1].1, "augment outputs differ");
    Ok(())
}

fn round_trip() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (i, docs) in random_corpora(100, 2).iter().enumerate() {
        let g = build(docs);
        let path = dir.path().join("g.json");
        g.save(&path).map_err(|e| e.to_string())?;
        let back = CoGraph::load(&path).map_err(|e| e.to_string())?;
        ensure!(back == g, "graph {i} changed on round trip");
        ensure!(
            back.to_json_bytes() == g.to_json_bytes(),
            "graph {i} bytes changed"
        );
    }
    Ok(())
}

fn augmentation_contracts() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = synthetic_corpus(20, 5);
    let gaz = Gazetteer::from_dir(write_gazetteer(dir.path())).map_err(|e| e.to_string())?;
    let graph = kgaug_core::cograph::build_graph(&corpus.documents(), 1);
    let tagger = TaggerConfig::Heuristic(gaz.clone());
    let cfg = AugmentConfig::default();
    let k = cfg.k;
    let aug = Augmenter::new(cfg, Some(&graph), tagger.clone(), gaz).map_err(|e| e.to_string())?;
    let instances = aug.corpus(&corpus).map_err(|e| e.to_string())?;

    for inst in &instances {
        let src: Vec<&str> = inst.src.split(' ').collect();
        let tgt: Vec<&str> = inst.tgt.split(' ').collect();
        ensure!(src.len() <= 512, "src has {} tokens", src.len());
        let markers = src
            .iter()
            .filter(|t| **t == GRAPH_MARKER || **t == NER_MARKER)
            .count();
        match inst.task {
            Task::Dialogue => ensure!(markers == 0, "marker in dialogue src"),
            Task::Graph => {
                ensure!(
                    markers == 1 && src[0] == GRAPH_MARKER,
                    "graph marker: {}",
                    inst.src
                );
                ensure!(tgt.len() <= k, "graph tgt longer than k");
                for t in &tgt {
                    ensure!(graph.contains(t), "graph tgt token {t} is not a node");
                }
            }
            Task::Ner => {
                ensure!(
                    markers == 1 && src[0] == NER_MARKER,
                    "ner marker: {}",
                    inst.src
                );
                ensure!(tgt.len() == src.len() - 1, "ner length mismatch");
                let dialogue = corpus
                    .dialogues()
                    .iter()
                    .find(|d| d.id == inst.meta.dialogue_id)
                    .unwrap();
                let toks = tokenize(&dialogue.turns[inst.meta.turn_index].text);
                let tagged = ner_tag(&toks, &tagger, 0).map_err(|e| e.to_string())?;
                for (i, t) in tgt.iter().enumerate() {
                    let expect = tagged.tags()[i].placeholder().unwrap_or(src[i + 1]);
                    ensure!(*t == expect, "ner position {i}: {t} vs {expect}");
                }
            }
        }
    }
    for task in [Task::Dialogue, Task::Graph, Task::Ner] {
        ensure!(
            instances.iter().any(|i| i.task == task),
            "no {task} instances"
        );
    }
    Ok(())
}

fn metrics() -> Check {
    let rec = |lp: Vec<f64>| LogProbRecord {
        id: "x".into(),
        logprobs: lp,
    };
    let ppl = |lp: Vec<f64>| perplexity(&rec(lp)).map_err(|e| e.to_string());
    let e2 = (e_exact() * e_exact()).to_f64().unwrap();
    for (got, want) in [
        (ppl(vec![0.0; 4])?, 1.0),
        (ppl(vec![-(100f64.ln()); 5])?, 100.0),
        (ppl(vec![-1.0, -2.0, -3.0])?, e2),
    ] {
        ensure!((got - want).abs() < 1e-6, "ppl {got} vs {want}");
    }

    let f1 = unigram_f1("a b c", "a b d");
    ensure!((f1 - 2.0 / 3.0).abs() < 1e-9, "f1 {f1}");
    ensure!(unigram_f1("the cat", "the cat") == 1.0, "identical f1");
    ensure!(unigram_f1("a b", "c d") == 0.0, "disjoint f1");

    let rouge = |h: &str, r: &str, n| rouge_n(h, &[r], n).map_err(|e| e.to_string());
    for (got, want) in [
        (rouge("the cat sat", "the cat sat", 2)?, 1.0),
        (rouge("the cat sat", "the cat", 1)?, 1.0),
        (rouge("x y", "a b c", 2)?, 0.0),
    ] {
        ensure!((got - want).abs() < 1e-9, "rouge {got} vs {want}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vocab = ["a", "b", "c", "d", "e", "f"];
    for _ in 0..100 {
        let words = |rng: &mut ChaCha8Rng, lo, hi| -> Vec<&str> {
            (0..rng.gen_range(lo..hi))
                .map(|_| *vocab.choose(rng).unwrap())
                .collect()
        };
        let reference = words(&mut rng, 3, 12).join(" ");
        let mut hyp = words(&mut rng, 0, 8);
        let n = rng.gen_range(1..=3);
        let mut prev = rouge(&hyp.join(" "), &reference, n)?;
        for w in words(&mut rng, 1, 8) {
            hyp.push(w);
            let next = rouge(&hyp.join(" "), &reference, n)?;
            ensure!(
                next >= prev,
                "rouge-{n} dropped from {prev} to {next} on {hyp:?}"
            );
            prev = next;
        }
    }
    Ok(())
}

fn facebook_query() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = write_corpus(dir.path(), "c.json", &facebook_corpus());
    let graph = dir.path().join("g.json");
    let out = kgaug(&["build-graph", "--input", p(&input), "--output", p(&graph)]);
    ensure!(out.code == 0, "build-graph: {}", out.stderr);
    let out = kgaug(&[
        "query",
        "--graph",
        p(&graph),
        "--node",
        "facebook",
        "--k",
        "3",
    ]);
    ensure!(out.code == 0, "query: {}", out.stderr);
    let got: Vec<&str> = out
        .stdout
        .lines()
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    ensure!(got == ["social", "media", "picture"], "got {got:?}");
    Ok(())
}

fn end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = write_corpus(dir.path(), "c.json", &synthetic_corpus(20, 17));
    let gaz = write_gazetteer(dir.path());
    let graph = dir.path().join("g.json");
    let jsonl = dir.path().join("o.jsonl");
    let start = Instant::now();
    let out = kgaug(&["build-graph", "--input", p(&input), "--output", p(&graph)]);
    ensure!(out.code == 0, "build-graph: {}", out.stderr);
    let out = kgaug(&[
        "augment",
        "--input",
        p(&input),
        "--graph",
        p(&graph),
        "--tasks",
        "dialogue,graph,ner",
        "--output",
        p(&jsonl),
        "--gazetteer-dir",
        p(&gaz),
    ]);
    ensure!(out.code == 0, "augment: {}", out.stderr);
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");

    let mut per_task: HashMap<Task, usize> = HashMap::new();
    for line in fs::read_to_string(&jsonl).unwrap().lines() {
        let inst: TrainingInstance = serde_json::from_str(line).map_err(|e| e.to_string())?;
        *per_task.entry(inst.task).or_default() += 1;
    }
    for task in [Task::Dialogue, Task::Graph, Task::Ner] {
        ensure!(
            per_task.get(&task).copied().unwrap_or(0) >= 1,
            "no {task} instances"
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: &[Criterion] = &[
        (
            "graph oracle equivalence (200 corpora, < 10 s)",
            graph_oracle,
        ),
        (
            "softmax contract (sum, order, large counts)",
            softmax_contract,
        ),
        ("worked weight case {2,1}", worked_weight_case),
        ("determinism of build-graph and augment", determinism),
        ("save/load round trip (100 graphs)", round_trip),
        (
            "augmentation contracts (20 dialogues)",
            augmentation_contracts,
        ),
        ("metrics: ppl, f1, rouge, rouge monotonicity", metrics),
        ("query facebook --k 3", facebook_query),
        ("end-to-end pipeline (< 5 s, all tasks)", end_to_end),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let result = match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(payload) => Err(payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        match result {
            Ok(()) => println!("PASS  {name}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
