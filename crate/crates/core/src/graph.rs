//! Dense simple undirected graphs.

use std::fmt::Write as _;

use ndarray::Array2;

use crate::error::{invalid, Error, Result};

/// Undirected simple graph backed by a dense symmetric 0/1 adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<u8>,
    m: usize,
}

impl Graph {
    /// Graph on `n` nodes with no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            adj: vec![0; n * n],
            m: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                g.add_edge(i, j);
            }
        }
        g
    }

    /// Builds a graph from an edge list. Rejects loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(invalid(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(invalid(format!("loop at node {i}")));
            }
            if g.has_edge(i, j) {
                return Err(invalid(format!("duplicate edge ({i}, {j})")));
            }
            g.add_edge(i, j);
        }
        Ok(g)
    }

    /// Builds a graph from a dense 0/1 matrix, checking symmetry and the
    /// zero diagonal.
    pub fn from_adjacency(n: usize, adj: Vec<u8>) -> Result<Self> {
        if adj.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: adj.len(),
            });
        }
        let mut m = 0;
        for i in 0..n {
            if adj[i * n + i] != 0 {
                return Err(invalid(format!("loop at node {i}")));
            }
            for j in i + 1..n {
                let (a, b) = (adj[i * n + j], adj[j * n + i]);
                if a > 1 || a != b {
                    return Err(invalid(format!("entry ({i}, {j}) is not symmetric 0/1")));
                }
                m += a as usize;
            }
        }
        Ok(Graph { n, adj, m })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges.
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j] != 0
    }

    #[inline]
    pub(crate) fn entry(&self, i: usize, j: usize) -> u8 {
        self.adj[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.adj[i * self.n..(i + 1) * self.n]
    }

    /// Adds `{i, j}`; returns false if it was already present. Panics on loops.
    pub fn add_edge(&mut self, i: usize, j: usize) -> bool {
        assert_ne!(i, j, "loops are not allowed");
        if self.has_edge(i, j) {
            return false;
        }
        self.adj[i * self.n + j] = 1;
        self.adj[j * self.n + i] = 1;
        self.m += 1;
        true
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> bool {
        if !self.has_edge(i, j) {
            return false;
        }
        self.adj[i * self.n + j] = 0;
        self.adj[j * self.n + i] = 0;
        self.m -= 1;
        true
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|&a| a as usize).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(j, _)| j)
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m);
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Squared Frobenius norm of the adjacency matrix, `2m`.
    pub fn frobenius_sq(&self) -> u64 {
        2 * self.m as u64
    }

    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m as f64 / (self.n * (self.n - 1) / 2) as f64
    }

    pub fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n, self.n), |(i, j)| self.entry(i, j) as f64)
    }

    /// Disjoint union placing `other` after the nodes of `self`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let mut g = Graph::empty(self.n + other.n);
        for (i, j) in self.edges() {
            g.add_edge(i, j);
        }
        for (i, j) in other.edges() {
            g.add_edge(self.n + i, self.n + j);
        }
        g
    }

    /// Copy of `self` padded with `extra` isolated nodes.
    pub fn with_extra_nodes(&self, extra: usize) -> Graph {
        self.disjoint_union(&Graph::empty(extra))
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// `"n m"` header followed by one `"i j"` line per edge, `i < j`,
    /// lexicographically sorted, LF line endings.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(16 + 12 * self.m);
        writeln!(s, "{} {}", self.n, self.m).unwrap();
        for (i, j) in self.edges() {
            writeln!(s, "{i} {j}").unwrap();
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing \"n m\" header".into(),
        })?;
        let (n, m) = parse_pair(header, 1)?;
        let mut edges = Vec::with_capacity(m);
        for (idx, line) in lines {
            edges.push(parse_pair(line, idx + 1)?);
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header announces {m} edges, found {}", edges.len()),
            });
        }
        Graph::from_edges(n, &edges)
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let bad = || Error::Parse {
        line: lineno,
        msg: format!("expected two non-negative integers, got {line:?}"),
    };
    let mut it = line.split_whitespace();
    let a = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let b = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    if it.next().is_some() {
        return Err(bad());
    }
    Ok((a, b))
}
