//! Device coupling graphs and their all-pairs hop distances.

use std::collections::VecDeque;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("edge ({0}, {1}) references a qubit outside 0..{2}")]
    EndpointOutOfRange(usize, usize, usize),
    #[error("self-loop on qubit {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("coupling graph is disconnected: qubit {0} is unreachable from qubit 0")]
    Disconnected(usize),
    #[error("a device needs at least 2 qubits, got {0}")]
    TooSmall(usize),
    #[error("topology file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("invalid topology `{0}` (expected grid:RxC or file:PATH)")]
    BadSpec(String),
    #[error("cannot read topology file {path}: {message}")]
    Io { path: String, message: String },
}

/// Undirected, connected device graph with a dense hop-distance matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingGraph {
    num_physical: usize,
    /// Sorted, each stored as `(min, max)`.
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    dist: Vec<u32>,
}

impl CouplingGraph {
    /// `rows x cols` square lattice with row-major node numbering.
    pub fn grid(rows: usize, cols: usize) -> Result<Self, TopologyError> {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let p = r * cols + c;
                if c + 1 < cols {
                    edges.push((p, p + 1));
                }
                if r + 1 < rows {
                    edges.push((p, p + cols));
                }
            }
        }
        Self::from_edge_list(rows * cols, &edges)
    }

    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        if n < 2 {
            return Err(TopologyError::TooSmall(n));
        }
        let mut neighbors = vec![Vec::new(); n];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(p, q) in edges {
            if p >= n || q >= n {
                return Err(TopologyError::EndpointOutOfRange(p, q, n));
            }
            if p == q {
                return Err(TopologyError::SelfLoop(p));
            }
            normalized.push((p.min(q), p.max(q)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(TopologyError::DuplicateEdge(w[0].0, w[0].1));
        }
        for &(p, q) in &normalized {
            neighbors[p].push(q);
            neighbors[q].push(p);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }

        let mut dist = vec![u32::MAX; n * n];
        let mut queue = VecDeque::new();
        for source in 0..n {
            let row = &mut dist[source * n..(source + 1) * n];
            row[source] = 0;
            queue.push_back(source);
            while let Some(p) = queue.pop_front() {
                for &q in &neighbors[p] {
                    if row[q] == u32::MAX {
                        row[q] = row[p] + 1;
                        queue.push_back(q);
                    }
                }
            }
            if let Some(q) = row.iter().position(|&d| d == u32::MAX) {
                return Err(TopologyError::Disconnected(q));
            }
        }
        Ok(CouplingGraph { num_physical: n, edges: normalized, neighbors, dist })
    }

    /// Reads the `n <count>` header followed by one `p q` edge per line.
    /// Blank lines and `#` comments are ignored.
    pub fn parse_edge_file(text: &str) -> Result<Self, TopologyError> {
        let mut n = None;
        let mut edges = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |message: &str| TopologyError::Format { line: k + 1, message: message.to_string() };
            if n.is_none() {
                if fields.len() != 2 || fields[0] != "n" {
                    return Err(bad("expected header `n <count>`"));
                }
                n = Some(fields[1].parse::<usize>().map_err(|_| bad("bad qubit count"))?);
                continue;
            }
            if fields.len() != 2 {
                return Err(bad("expected `p q`"));
            }
            let p = fields[0].parse().map_err(|_| bad("bad endpoint"))?;
            let q = fields[1].parse().map_err(|_| bad("bad endpoint"))?;
            edges.push((p, q));
        }
        let n = n.ok_or(TopologyError::Format { line: 1, message: "missing header `n <count>`".into() })?;
        Self::from_edge_list(n, &edges)
    }

    pub fn to_edge_file(&self) -> String {
        let mut out = format!("n {}\n", self.num_physical);
        for (p, q) in &self.edges {
            out.push_str(&format!("{p} {q}\n"));
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self, TopologyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TopologyError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse_edge_file(&text)
    }

    pub fn num_physical(&self) -> usize {
        self.num_physical
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, p: usize) -> &[usize] {
        &self.neighbors[p]
    }

    #[inline]
    pub fn dist(&self, p: usize, q: usize) -> u32 {
        self.dist[p * self.num_physical + q]
    }

    pub fn is_edge(&self, p: usize, q: usize) -> bool {
        p != q && self.dist(p, q) == 1
    }

    /// Position of `{p, q}` in [`CouplingGraph::edges`].
    pub fn edge_index(&self, p: usize, q: usize) -> Option<usize> {
        self.edges.binary_search(&(p.min(q), p.max(q))).ok()
    }

    pub fn diameter(&self) -> u32 {
        self.dist.iter().copied().max().unwrap_or(0)
    }

    /// A shortest path from `p` to `q`, inclusive; ties go to the lowest-numbered neighbour.
    pub fn shortest_path(&self, p: usize, q: usize) -> Vec<usize> {
        let mut path = vec![p];
        let mut here = p;
        while here != q {
            here = *self.neighbors[here]
                .iter()
                .find(|&&r| self.dist(r, q) + 1 == self.dist(here, q))
                .expect("connected graph always has a descending neighbour");
            path.push(here);
        }
        path
    }

    pub fn allowed_transitions(&self) -> AllowedTransitions<'_> {
        AllowedTransitions { graph: self }
    }
}

/// Moves a qubit may make in one routing time step: stay put or cross one edge.
#[derive(Debug, Clone, Copy)]
pub struct AllowedTransitions<'a> {
    graph: &'a CouplingGraph,
}

impl AllowedTransitions<'_> {
    pub fn allows(&self, p: usize, q: usize) -> bool {
        p == q || self.graph.is_edge(p, q)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.graph.num_physical;
        (0..n).flat_map(move |p| (0..n).filter(move |&q| self.allows(p, q)).map(move |q| (p, q)))
    }
}

/// Topology selector as given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologySpec {
    Grid { rows: usize, cols: usize },
    File(String),
}

impl TopologySpec {
    pub fn build(&self) -> Result<CouplingGraph, TopologyError> {
        match self {
            TopologySpec::Grid { rows, cols } => CouplingGraph::grid(*rows, *cols),
            TopologySpec::File(path) => CouplingGraph::load(Path::new(path)),
        }
    }
}

impl FromStr for TopologySpec {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TopologyError::BadSpec(s.to_string());
        if let Some(dims) = s.strip_prefix("grid:") {
            let (r, c) = dims.split_once(['x', 'X']).ok_or_else(bad)?;
            let rows = r.parse().map_err(|_| bad())?;
            let cols = c.parse().map_err(|_| bad())?;
            if rows == 0 || cols == 0 {
                return Err(bad());
            }
            Ok(TopologySpec::Grid { rows, cols })
        } else if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(bad());
            }
            Ok(TopologySpec::File(path.to_string()))
        } else {
            Err(bad())
        }
    }
}
