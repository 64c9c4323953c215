//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors
//! (unreadable or invalid inputs, unknown query nodes).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kgaug_core::augment::{emit_jsonl, DEFAULT_K, DEFAULT_MAX_SRC_TOKENS, DEFAULT_TURN_SEPARATOR};
use kgaug_core::cograph::build_graph;
use kgaug_core::corpus::load_corpus;
use kgaug_core::metrics::{
    corpus_f1, corpus_perplexity, corpus_rouge, read_logprobs, MatchOptions,
};
use kgaug_core::textproc::ExternalTags;
use kgaug_core::{
    AugmentConfig, Augmenter, CoGraph, Gazetteer, KnowledgeScope, TaggerConfig, Task, TaskSet,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "kgaug",
    version,
    about = "Co-occurrence graphs and auxiliary training data for dialogue corpora"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a keyword co-occurrence graph from a corpus.
    BuildGraph(BuildGraphArgs),
    /// Print the strongest neighbors of a node as TSV.
    Query(QueryArgs),
    /// Emit dialogue, graph and NER training instances as JSONL.
    Augment(AugmentArgs),
    /// Print node, edge and degree statistics of a graph as JSON.
    Stats(StatsArgs),
    /// Score outputs with perplexity, unigram F1 or ROUGE-N.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KnowledgeArg {
    All,
    WizardOnly,
}

#[derive(Debug, clap::Args)]
struct BuildGraphArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Drop edges seen in fewer documents than this.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_count: u64,
    /// Which turns contribute knowledge passages.
    #[arg(long, value_enum, default_value = "all")]
    knowledge: KnowledgeArg,
}

#[derive(Debug, clap::Args)]
struct QueryArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    node: String,
    #[arg(long, default_value_t = DEFAULT_K as u64, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
}

#[derive(Debug, clap::Args)]
struct AugmentArgs {
    #[arg(long)]
    input: PathBuf,
    /// Graph file; required by the graph task.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Comma-separated subset of dialogue,graph,ner.
    #[arg(long, default_value = "dialogue,graph,ner", value_parser = parse_tasks)]
    tasks: TaskSet,
    #[arg(long, default_value_t = DEFAULT_K as u64, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long)]
    output: PathBuf,
    /// CoNLL tag file with one sentence per corpus turn, in corpus order.
    #[arg(long)]
    tags: Option<PathBuf>,
    /// Directory holding per.txt, loc.txt, org.txt (and optionally misc.txt).
    #[arg(long)]
    gazetteer_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_SRC_TOKENS as u64, value_parser = clap::value_parser!(u64).range(2..))]
    max_src_tokens: u64,
    #[arg(long, default_value = DEFAULT_TURN_SEPARATOR)]
    turn_separator: String,
}

#[derive(Debug, clap::Args)]
struct StatsArgs {
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Ppl,
    F1,
    Rouge,
}

#[derive(Debug, clap::Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    metric: MetricArg,
    /// N-gram order for ROUGE.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Hypotheses, one per line.
    #[arg(long, conflicts_with = "logprobs")]
    hyp: Option<PathBuf>,
    /// References, one item per line; multiple references separated by tabs.
    #[arg(long = "ref", conflicts_with = "logprobs")]
    reference: Option<PathBuf>,
    /// JSONL of {"id", "logprobs"} records.
    #[arg(long)]
    logprobs: Option<PathBuf>,
    /// Compare tokens case-sensitively.
    #[arg(long)]
    no_lowercase: bool,
    /// Ignore punctuation tokens.
    #[arg(long)]
    strip_punct: bool,
}

fn parse_tasks(s: &str) -> Result<TaskSet, String> {
    s.parse()
}

/// Invalid flag combination detected after parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Runs the CLI on `args` (including the program name), writing normal
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                EXIT_OK
            } else {
                let _ = write!(err, "{e}");
                EXIT_USAGE
            };
        }
    };

    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
        {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(e.into()),
        },
        None => dispatch(cli.command),
    };
    match result.and_then(|text| {
        out.write_all(text.as_bytes())
            .context("failed to write output")
    }) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.is::<UsageError>() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

/// Runs one subcommand and returns what it prints on stdout.
fn dispatch(command: Command) -> anyhow::Result<String> {
    match command {
        Command::BuildGraph(a) => build_graph_cmd(a),
        Command::Query(a) => query_cmd(a),
        Command::Augment(a) => augment_cmd(a),
        Command::Stats(a) => stats_cmd(a),
        Command::Eval(a) => eval_cmd(a),
    }
}

fn load_graph(path: &Path) -> anyhow::Result<CoGraph> {
    CoGraph::load(path).with_context(|| format!("cannot load graph {}", path.display()))
}

fn build_graph_cmd(a: BuildGraphArgs) -> anyhow::Result<String> {
    let corpus = load_corpus(&a.input)?;
    let scope = match a.knowledge {
        KnowledgeArg::All => KnowledgeScope::All,
        KnowledgeArg::WizardOnly => KnowledgeScope::WizardOnly,
    };
    let graph = build_graph(&corpus.documents_with(scope), a.min_count);
    graph.save(&a.output)?;
    Ok(format!(
        "nodes={} edges={} docs={}\n",
        graph.node_count(),
        graph.edge_count(),
        graph.doc_count()
    ))
}

fn query_cmd(a: QueryArgs) -> anyhow::Result<String> {
    let graph = load_graph(&a.graph)?;
    let node = a.node.to_lowercase();
    let weights = graph.edge_weights(&node)?;
    let mut text = String::new();
    for w in weights.iter().take(a.k as usize) {
        text.push_str(&format!("{}\t{}\t{:.6}\n", w.neighbor, w.count, w.weight));
    }
    Ok(text)
}

fn augment_cmd(a: AugmentArgs) -> anyhow::Result<String> {
    if a.tasks.graph && a.graph.is_none() {
        return Err(usage("the graph task requires --graph"));
    }
    if a.turn_separator.is_empty() || a.turn_separator.contains(char::is_whitespace) {
        return Err(usage("--turn-separator must be a single token"));
    }
    let corpus = load_corpus(&a.input)?;
    let graph = match &a.graph {
        Some(p) if a.tasks.graph => Some(load_graph(p)?),
        _ => None,
    };
    let gazetteer = match &a.gazetteer_dir {
        Some(dir) => Gazetteer::from_dir(dir)?,
        None => Gazetteer::new(),
    };
    let tagger = match &a.tags {
        Some(path) => TaggerConfig::External(ExternalTags::from_path(path)?),
        None => TaggerConfig::Heuristic(gazetteer.clone()),
    };
    let cfg = AugmentConfig {
        k: a.k as usize,
        tasks: a.tasks,
        turn_separator: a.turn_separator,
        max_src_tokens: a.max_src_tokens as usize,
    };
    let augmenter =
        Augmenter::new(cfg, graph.as_ref(), tagger, gazetteer).map_err(|e| usage(e.to_string()))?;
    let instances = augmenter.corpus(&corpus)?;
    emit_jsonl(&instances, &a.output)?;

    let count = |t| instances.iter().filter(|i| i.task == t).count();
    Ok(format!(
        "dialogue={} graph={} ner={}\n",
        count(Task::Dialogue),
        count(Task::Graph),
        count(Task::Ner)
    ))
}

#[derive(Serialize)]
struct GraphStats {
    nodes: usize,
    edges: usize,
    docs: u64,
    max_degree: usize,
    mean_degree: f64,
    degree_histogram: std::collections::BTreeMap<usize, usize>,
}

fn stats_cmd(a: StatsArgs) -> anyhow::Result<String> {
    let graph = load_graph(&a.graph)?;
    let hist = graph.degree_histogram();
    let nodes = graph.node_count();
    let stats = GraphStats {
        nodes,
        edges: graph.edge_count(),
        docs: graph.doc_count(),
        max_degree: hist.keys().next_back().copied().unwrap_or(0),
        mean_degree: if nodes == 0 {
            0.0
        } else {
            2.0 * graph.edge_count() as f64 / nodes as f64
        },
        degree_histogram: hist,
    };
    let json = serde_json::to_string_pretty(&stats).context("failed to render stats")?;
    Ok(json + "\n")
}

fn read_lines(path: &Path) -> anyhow::Result<Vec<String>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn eval_cmd(a: EvalArgs) -> anyhow::Result<String> {
    let opts = MatchOptions {
        lowercase: !a.no_lowercase,
        strip_punctuation: a.strip_punct,
    };
    let report = match a.metric {
        MetricArg::Ppl => {
            let Some(path) = &a.logprobs else {
                return Err(usage("--metric ppl requires --logprobs"));
            };
            let file =
                fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
            let records = read_logprobs(file)
                .with_context(|| format!("invalid log-prob file {}", path.display()))?;
            corpus_perplexity(&records)?
        }
        MetricArg::F1 | MetricArg::Rouge => {
            let (Some(hyp), Some(reference)) = (&a.hyp, &a.reference) else {
                return Err(usage(format!(
                    "--metric {} requires --hyp and --ref",
                    if a.metric == MetricArg::F1 {
                        "f1"
                    } else {
                        "rouge"
                    }
                )));
            };
            let hyps = read_lines(hyp)?;
            let refs = read_lines(reference)?;
            if hyps.len() != refs.len() {
                bail!("{} hypotheses but {} references", hyps.len(), refs.len());
            }
            if a.metric == MetricArg::F1 {
                // Only the first of several tab-separated references is scored.
                let pairs: Vec<(&str, &str)> = hyps
                    .iter()
                    .zip(&refs)
                    .map(|(h, r)| (h.as_str(), r.split('\t').next().unwrap_or_default()))
                    .collect();
                corpus_f1(&pairs, opts)?
            } else {
                let items: Vec<(&str, Vec<&str>)> = hyps
                    .iter()
                    .zip(&refs)
                    .map(|(h, r)| (h.as_str(), r.split('\t').collect()))
                    .collect();
                corpus_rouge(&items, a.n as usize, opts)?
            }
        }
    };
    if !report.corpus_value.is_finite() {
        bail!("{} is not finite", report.metric);
    }
    let json = serde_json::to_string_pretty(&report).context("failed to render report")?;
    Ok(json + "\n")
}
