//! The hidden population: an undirected 0/1 relationship graph.

use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Index of a population unit, in `[0, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// Population graph with reciprocated ties, so out-degree equals degree.
///
/// Immutable once built; neighbor lists are sorted and free of duplicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PopulationGraph {
    adj: Vec<Vec<NodeId>>,
}

impl PopulationGraph {
    /// Builds a graph on `n` nodes from undirected edges. Duplicate edges are
    /// merged; self-loops and out-of-range ids are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (i, j) in edges {
            for id in [i, j] {
                if id as usize >= n {
                    return Err(Error::Range { id: id.into(), n });
                }
            }
            if i == j {
                return Err(Error::validation(format!("self-loop on node {i}")));
            }
            adj[i as usize].push(NodeId(j));
            adj[j as usize].push(NodeId(i));
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(PopulationGraph { adj })
    }

    /// Graph with `n` nodes and no ties.
    pub fn empty(n: usize) -> Self {
        PopulationGraph { adj: vec![Vec::new(); n] }
    }

    /// Population size N.
    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Out-degree w_i+.
    #[inline]
    pub fn out_degree(&self, i: NodeId) -> u32 {
        self.adj[i.index()].len() as u32
    }

    #[inline]
    pub fn neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.adj[i.index()]
    }

    /// The 0/1 indicator w_ij.
    pub fn has_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.adj[i.index()].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, list)| {
            let i = NodeId(i as u32);
            list.iter().filter(move |&&j| j > i).map(move |&j| (i, j))
        })
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.adj.len() as u32).map(NodeId)
    }

    /// Population mean out-degree, Σ w_i+ / N.
    pub fn mean_out_degree(&self) -> f64 {
        if self.adj.is_empty() {
            return 0.0;
        }
        let total: usize = self.adj.iter().map(Vec::len).sum();
        total as f64 / self.adj.len() as f64
    }

    /// Checks symmetry and the zero diagonal by direct lookup.
    pub fn check_invariants(&self) -> Result<()> {
        for i in self.nodes() {
            for &j in self.neighbors(i) {
                if i == j {
                    return Err(Error::validation(format!("self-loop on node {i}")));
                }
                if !self.has_edge(j, i) {
                    return Err(Error::validation(format!("tie {i}->{j} is not reciprocated")));
                }
            }
        }
        Ok(())
    }

    /// Writes the edge-list text format read by [`load_edge_list`].
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "nodes={}", self.n())?;
        for (i, j) in self.edges() {
            writeln!(out, "{i},{j}")?;
        }
        Ok(())
    }
}

/// Reads a `nodes=<N>` header followed by `i,j` lines.
///
/// Blank lines and lines starting with `#` are skipped. Isolated nodes need no
/// lines of their own.
pub fn load_edge_list<R: BufRead>(source: R) -> Result<PopulationGraph> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(count) = n else {
            let value =
                line.strip_prefix("nodes=").ok_or_else(|| Error::parse(line_no, "expected header `nodes=<N>`"))?;
            n = Some(value.trim().parse().map_err(|_| Error::parse(line_no, format!("bad node count `{value}`")))?);
            continue;
        };
        let (a, b) =
            line.split_once(',').ok_or_else(|| Error::parse(line_no, format!("expected `i,j`, got `{line}`")))?;
        let parse_id = |s: &str| -> Result<u64> {
            s.trim().parse::<u64>().map_err(|_| Error::parse(line_no, format!("bad node id `{}`", s.trim())))
        };
        let (i, j) = (parse_id(a)?, parse_id(b)?);
        for id in [i, j] {
            if id >= count as u64 {
                return Err(Error::Range { id, n: count });
            }
        }
        if i == j {
            return Err(Error::validation(format!("line {line_no}: self-loop on node {i}")));
        }
        edges.push((i as u32, j as u32));
    }
    let n = n.ok_or_else(|| Error::parse(0, "missing `nodes=<N>` header"))?;
    PopulationGraph::from_edges(n, edges)
}

/// Homogeneous random graph: every unordered pair is tied independently with
/// probability `mean_degree / (n - 1)`.
pub fn generate_synthetic(n: usize, mean_degree: f64, seed: u64) -> Result<PopulationGraph> {
    if n < 2 {
        return Err(Error::validation(format!("population size {n} < 2")));
    }
    if !(0.0..=(n - 1) as f64).contains(&mean_degree) {
        return Err(Error::validation(format!("mean degree {mean_degree} outside [0, {}]", n - 1)));
    }
    let p = mean_degree / (n - 1) as f64;
    let mut rng = stream_rng(seed, &[0x6e65_7470_6f70]);
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in (i + 1)..n as u32 {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    PopulationGraph::from_edges(n, edges)
}
