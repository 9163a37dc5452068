//! Undirected simple graphs stored as dense symmetric adjacency.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An undirected, unweighted simple graph on nodes `0..n`.
///
/// The adjacency is kept row-major in an `n * n` boolean buffer. Every
/// constructor and mutator keeps it symmetric with an empty diagonal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    adj: Vec<bool>,
}

/// Undirected edge written with the smaller endpoint first.
pub type Edge = (usize, usize);

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            adj: vec![false; n * n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.set(i, j, true);
            }
        }
        g
    }

    /// Builds a graph from undirected pairs. Repeated pairs, in either
    /// orientation, collapse into a single edge.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        self.set(i, j, true);
        Ok(())
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        self.set(i, j, false);
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        for node in [i, j] {
            if node >= self.n {
                return Err(Error::NodeOutOfRange { node, n: self.n });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, present: bool) {
        self.adj[i * self.n + j] = present;
        self.adj[j * self.n + i] = present;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.adj[i * self.n..(i + 1) * self.n]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i)
            .iter()
            .enumerate()
            .filter_map(|(j, &e)| e.then_some(j))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&e| e).count()
    }

    /// All edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count() / 2
    }

    /// True when every pair of distinct nodes is adjacent.
    pub fn is_complete(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.has_edge(i, j)))
    }

    /// True when every edge of `self` is also an edge of `other`.
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n == other.n && self.adj.iter().zip(&other.adj).all(|(&a, &b)| !a || b)
    }

    /// Renders the edge-list text format: a `n m` header followed by one
    /// `i j` line per undirected edge.
    pub fn to_edge_list_string(&self) -> String {
        let edges = self.edges();
        let mut s = String::with_capacity(16 + edges.len() * 10);
        let _ = writeln!(s, "{} {}", self.n, edges.len());
        for (i, j) in edges {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        Self::read_edge_list(text.as_bytes())
    }

    /// Parses the edge-list format. Blank lines and lines starting with `#`
    /// are ignored; the header must state the exact number of edge lines.
    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (a, b) = parse_pair(trimmed, lineno)?;
            match header {
                None => header = Some((a, b)),
                Some(_) => edges.push((a, b)),
            }
        }
        let (n, m) = header.ok_or(Error::Parse {
            line: 0,
            msg: "missing `n m` header".into(),
        })?;
        if edges.len() != m {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::from_edge_list(n, &edges)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_edge_list(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_edge_list_string().as_bytes())?;
        Ok(())
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        let tok = it.next().ok_or_else(|| Error::Parse {
            line: lineno,
            msg: "expected two integers".into(),
        })?;
        tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("not a non-negative integer: {tok:?}"),
        })
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(Error::Parse {
            line: lineno,
            msg: "trailing tokens".into(),
        });
    }
    Ok((a, b))
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges())
            .finish()
    }
}

/// Number of unordered node pairs whose adjacency differs between the two
/// graphs. For an edge-deleted subgraph this is the number of deletions.
pub fn edge_difference(g1: &Graph, g2: &Graph) -> Result<usize> {
    if g1.n != g2.n {
        return Err(Error::SizeMismatch(g1.n, g2.n));
    }
    let diff = g1.adj.iter().zip(&g2.adj).filter(|(a, b)| a != b).count();
    Ok(diff / 2)
}
