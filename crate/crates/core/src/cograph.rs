//! Keyword co-occurrence graph.
//!
//! Every keyword is a node. Two nodes share an edge when they appear in the
//! same document, and the edge count is the number of such documents (set
//! semantics: a pair counts at most once per document). Edge weights for a
//! node `v` are the softmax of the counts over all of `v`'s neighbors.
//!
//! A [`GraphBuilder`] accumulates counts and can be split across workers and
//! merged. [`GraphBuilder::finalize`] produces an immutable [`CoGraph`] with
//! nodes sorted lexicographically and adjacency stored in CSR form.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::textproc::{extract_keywords, KeywordSet};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node unknown: {0}")]
    NodeUnknown(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt graph file: {0}")]
    Corrupt(String),
}

type NodeId = u32;

/// Mutable co-occurrence counts.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    ids: HashMap<String, NodeId>,
    names: Vec<String>,
    // Keyed by (low id, high id).
    pairs: HashMap<(NodeId, NodeId), u64>,
    doc_count: u64,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, word: &str) -> NodeId {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = NodeId::try_from(self.names.len()).expect("more than u32::MAX nodes");
        self.ids.insert(word.to_owned(), id);
        self.names.push(word.to_owned());
        id
    }

    /// Registers every keyword as a node and bumps the count of each
    /// unordered pair by one.
    pub fn add_document(&mut self, kw: &KeywordSet) {
        self.add_keywords(kw.keywords.iter().map(String::as_str));
    }

    /// Like [`add_document`](Self::add_document) for an arbitrary word list.
    /// Duplicate words count once.
    pub fn add_keywords<'a>(&mut self, words: impl IntoIterator<Item = &'a str>) {
        let mut ids: Vec<NodeId> = words.into_iter().map(|w| self.intern(w)).collect();
        ids.sort_unstable();
        ids.dedup();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                *self.pairs.entry((a, b)).or_insert(0) += 1;
            }
        }
        self.doc_count += 1;
    }

    /// Folds another builder's counts into this one. Merging is commutative
    /// and associative with respect to the finalized graph.
    pub fn merge(&mut self, other: GraphBuilder) {
        let remap: Vec<NodeId> = other.names.iter().map(|n| self.intern(n)).collect();
        for ((a, b), c) in other.pairs {
            let (x, y) = (remap[a as usize], remap[b as usize]);
            let key = if x < y { (x, y) } else { (y, x) };
            *self.pairs.entry(key).or_insert(0) += c;
        }
        self.doc_count += other.doc_count;
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    pub fn finalize(self) -> CoGraph {
        self.finalize_with_min_count(1)
    }

    /// Freezes the graph, dropping edges seen in fewer than `min_count`
    /// documents. Nodes are kept even if pruning isolates them.
    pub fn finalize_with_min_count(self, min_count: u64) -> CoGraph {
        let mut order: Vec<NodeId> = (0..self.names.len() as NodeId).collect();
        order.sort_unstable_by(|&a, &b| self.names[a as usize].cmp(&self.names[b as usize]));
        let mut rank = vec![0 as NodeId; order.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old as usize] = new as NodeId;
        }

        let mut edges: Vec<(NodeId, NodeId, u64)> = self
            .pairs
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .map(|((a, b), c)| {
                let (x, y) = (rank[a as usize], rank[b as usize]);
                if x < y {
                    (x, y, c)
                } else {
                    (y, x, c)
                }
            })
            .collect();
        edges.sort_unstable();

        let mut names = self.names;
        let nodes: Vec<String> = order
            .iter()
            .map(|&o| std::mem::take(&mut names[o as usize]))
            .collect();
        CoGraph::from_sorted_parts(nodes, &edges, self.doc_count)
    }
}

/// Builds a graph from documents, splitting keyword extraction and counting
/// across the current rayon pool.
pub fn build_graph(documents: &[Document], min_count: u64) -> CoGraph {
    const CHUNK: usize = 256;
    documents
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut b = GraphBuilder::new();
            for doc in chunk {
                b.add_document(&extract_keywords(doc));
            }
            b
        })
        .reduce(GraphBuilder::new, |mut a, b| {
            a.merge(b);
            a
        })
        .finalize_with_min_count(min_count)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborWeight {
    pub neighbor: String,
    pub count: u64,
    pub weight: f64,
}

/// Immutable co-occurrence graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoGraph {
    nodes: Vec<String>,
    index: HashMap<String, NodeId>,
    // CSR adjacency: neighbors of node i are adj[offsets[i]..offsets[i + 1]],
    // sorted by neighbor id.
    offsets: Vec<usize>,
    adj: Vec<(NodeId, u64)>,
    doc_count: u64,
}

impl CoGraph {
    /// `edges` must be sorted, with `i < j` and ids in range.
    fn from_sorted_parts(
        nodes: Vec<String>,
        edges: &[(NodeId, NodeId, u64)],
        doc_count: u64,
    ) -> Self {
        let n = nodes.len();
        let mut degree = vec![0usize; n];
        for &(i, j, _) in edges {
            degree[i as usize] += 1;
            degree[j as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut adj = vec![(0, 0); offsets[n]];
        // Sorted (i, j) input means each row receives its entries in
        // ascending neighbor order: lower neighbors come from the `j` side
        // first, then higher ones from the `i` side.
        for &(i, j, c) in edges {
            adj[fill[j as usize]] = (i, c);
            fill[j as usize] += 1;
        }
        for &(i, j, c) in edges {
            adj[fill[i as usize]] = (j, c);
            fill[i as usize] += 1;
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as NodeId))
            .collect();
        CoGraph {
            nodes,
            index,
            offsets,
            adj,
            doc_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    /// Nodes in lexicographic order.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn contains(&self, node: &str) -> bool {
        self.index.contains_key(node)
    }

    fn id(&self, node: &str) -> Result<NodeId, GraphError> {
        self.index
            .get(node)
            .copied()
            .ok_or_else(|| GraphError::NodeUnknown(node.to_owned()))
    }

    fn row(&self, id: NodeId) -> &[(NodeId, u64)] {
        &self.adj[self.offsets[id as usize]..self.offsets[id as usize + 1]]
    }

    pub fn degree(&self, node: &str) -> Result<usize, GraphError> {
        Ok(self.row(self.id(node)?).len())
    }

    /// Number of documents containing both nodes; 0 if either is unknown or
    /// they never co-occur.
    pub fn count(&self, a: &str, b: &str) -> u64 {
        let (Ok(a), Ok(b)) = (self.id(a), self.id(b)) else {
            return 0;
        };
        let row = self.row(a);
        row.binary_search_by_key(&b, |&(n, _)| n)
            .map(|i| row[i].1)
            .unwrap_or(0)
    }

    /// Neighbors of `v` in lexicographic order.
    pub fn neighbors(&self, v: &str) -> Result<Vec<&str>, GraphError> {
        let id = self.id(v)?;
        Ok(self
            .row(id)
            .iter()
            .map(|&(n, _)| self.nodes[n as usize].as_str())
            .collect())
    }

    /// Softmax weights over the full neighborhood of `v`, strongest first.
    ///
    /// Ordering is by count, then neighbor name. Softmax is monotone in the
    /// count, so this is also weight order; ranking on the integer keeps the
    /// order exact when weights far below the maximum underflow to zero.
    pub fn edge_weights(&self, v: &str) -> Result<Vec<NeighborWeight>, GraphError> {
        let row = self.row(self.id(v)?);
        let Some(max) = row.iter().map(|&(_, c)| c).max() else {
            return Ok(Vec::new());
        };
        let exps: Vec<f64> = row
            .iter()
            .map(|&(_, c)| (-((max - c) as f64)).exp())
            .collect();
        let total: f64 = exps.iter().sum();
        let mut out: Vec<NeighborWeight> = row
            .iter()
            .zip(exps)
            .map(|(&(n, c), e)| NeighborWeight {
                neighbor: self.nodes[n as usize].clone(),
                count: c,
                weight: e / total,
            })
            .collect();
        out.sort_by(rank_order);
        Ok(out)
    }

    /// The top `k` neighbors of `v` in weight order.
    pub fn one_hop_sequence(&self, v: &str, k: usize) -> Result<Vec<&str>, GraphError> {
        if k == 0 {
            return Err(GraphError::ZeroK);
        }
        let id = self.id(v)?;
        let mut row: Vec<(NodeId, u64)> = self.row(id).to_vec();
        // Node ids follow lexicographic order, so id is the tie-break.
        let by_rank = |a: &(NodeId, u64), b: &(NodeId, u64)| b.1.cmp(&a.1).then(a.0.cmp(&b.0));
        if k < row.len() {
            row.select_nth_unstable_by(k - 1, by_rank);
            row.truncate(k);
        }
        row.sort_unstable_by(by_rank);
        Ok(row
            .iter()
            .map(|&(n, _)| self.nodes[n as usize].as_str())
            .collect())
    }

    /// All edges as `(i, j, count)` with `i < j`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.nodes.len()).flat_map(move |i| {
            self.row(i as NodeId)
                .iter()
                .filter(move |&&(j, _)| (j as usize) > i)
                .map(move |&(j, c)| (i, j as usize, c))
        })
    }

    pub fn degree_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for w in self.offsets.windows(2) {
            *hist.entry(w[1] - w[0]).or_insert(0) += 1;
        }
        hist
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let file = GraphFileRef {
            version: FORMAT_VERSION,
            doc_count: self.doc_count,
            nodes: &self.nodes,
            edges: self
                .edges()
                .map(|(i, j, c)| [i as u64, j as u64, c])
                .collect(),
        };
        let mut out = serde_json::to_vec(&file).expect("graph serialization is infallible");
        out.push(b'\n');
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let path = path.as_ref();
        let io_err = |source| GraphError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = fs::File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        w.write_all(&self.to_json_bytes()).map_err(io_err)?;
        w.flush().map_err(io_err)
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, GraphError> {
        let file: GraphFile =
            serde_json::from_slice(bytes).map_err(|e| GraphError::Corrupt(e.to_string()))?;
        if file.version != FORMAT_VERSION {
            return Err(GraphError::Corrupt(format!(
                "unsupported version {}",
                file.version
            )));
        }
        if let Some(w) = file.nodes.windows(2).find(|w| w[0] >= w[1]) {
            return Err(GraphError::Corrupt(format!(
                "nodes not strictly sorted at `{}`",
                w[1]
            )));
        }
        let n = file.nodes.len() as u64;
        let mut edges = Vec::with_capacity(file.edges.len());
        let mut prev: Option<(u64, u64)> = None;
        for [i, j, c] in file.edges {
            if i >= j || j >= n {
                return Err(GraphError::Corrupt(format!("bad edge [{i},{j},{c}]")));
            }
            if c == 0 || c > file.doc_count {
                return Err(GraphError::Corrupt(format!(
                    "bad count on edge [{i},{j},{c}]"
                )));
            }
            if prev.is_some_and(|p| p >= (i, j)) {
                return Err(GraphError::Corrupt(format!(
                    "edges not sorted at [{i},{j}]"
                )));
            }
            prev = Some((i, j));
            edges.push((i as NodeId, j as NodeId, c));
        }
        Ok(CoGraph::from_sorted_parts(
            file.nodes,
            &edges,
            file.doc_count,
        ))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_slice(&bytes)
    }
}

fn rank_order(a: &NeighborWeight, b: &NeighborWeight) -> Ordering {
    b.count
        .cmp(&a.count)
        .then_with(|| b.weight.total_cmp(&a.weight))
        .then_with(|| a.neighbor.cmp(&b.neighbor))
}

#[derive(Serialize)]
struct GraphFileRef<'a> {
    version: u32,
    doc_count: u64,
    nodes: &'a [String],
    edges: Vec<[u64; 3]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    version: u32,
    doc_count: u64,
    nodes: Vec<String>,
    edges: Vec<[u64; 3]>,
}
