//! Unweighted graphs with dense-index nodes.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Display;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A finite, unweighted, possibly directed graph on nodes `0..n`.
///
/// Undirected edges are stored once as `(min, max)`; the adjacency matrix is
/// symmetric. Directed edges are stored as given.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    directed: bool,
    node_ids: Vec<String>,
}

impl Graph {
    /// Builds a graph from labelled edges. Node ids are mapped to dense
    /// indices in order of first appearance and duplicate edges collapse.
    pub fn from_edges<S: Display>(edge_list: &[(S, S)], directed: bool) -> Result<Self> {
        if edge_list.is_empty() {
            return Err(Error::EmptyEdgeList);
        }
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut node_ids = Vec::new();
        let mut intern = |id: String| -> usize {
            *index.entry(id.clone()).or_insert_with(|| {
                node_ids.push(id);
                node_ids.len() - 1
            })
        };
        let mut pairs = Vec::with_capacity(edge_list.len());
        for (a, b) in edge_list {
            let (a, b) = (a.to_string(), b.to_string());
            if !directed && a == b {
                return Err(Error::SelfLoop(a));
            }
            let i = intern(a);
            let j = intern(b);
            pairs.push((i, j));
        }
        let n = node_ids.len();
        let mut g = Self::from_index_edges(n, pairs, directed)?;
        g.node_ids = node_ids;
        Ok(g)
    }

    /// Builds a graph on `0..n` from index pairs. Isolated nodes are allowed.
    pub fn from_index_edges<I>(n: usize, edges: I, directed: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) references a node outside 0..{n}"
                )));
            }
            if !directed && i == j {
                return Err(Error::SelfLoop(i.to_string()));
            }
            set.insert(if directed { (i, j) } else { (i.min(j), i.max(j)) });
        }
        Ok(Self {
            n,
            edges: set,
            directed,
            node_ids: (0..n).map(|i| i.to_string()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if self.directed {
            self.edges.contains(&(i, j))
        } else {
            self.edges.contains(&(i.min(j), i.max(j)))
        }
    }

    /// External ids of the nodes, indexed by dense node index.
    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    /// Replaces the external node ids. Length must equal `n`.
    pub fn with_node_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n.to_string(),
                got: ids.len().to_string(),
            });
        }
        self.node_ids = ids;
        Ok(self)
    }

    /// Dense 0/1 adjacency matrix, `A[i][j] = 1` iff `(i, j)` is an edge.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            if !self.directed {
                a[(j, i)] = 1.0;
            }
        }
        a
    }

    /// Out-degree for directed graphs, degree otherwise.
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(i, j) in &self.edges {
            d[i] += 1;
            if !self.directed {
                d[j] += 1;
            }
        }
        d
    }

    /// Out-degree plus in-degree for directed graphs, degree otherwise.
    pub fn total_degrees(&self) -> Vec<usize> {
        if !self.directed {
            return self.out_degrees();
        }
        let mut d = vec![0; self.n];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    fn neighbor_lists(&self, reverse: bool) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            if self.directed {
                if reverse {
                    adj[j].push(i);
                } else {
                    adj[i].push(j);
                }
            } else {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        adj
    }

    fn reaches_all(adj: &[Vec<usize>]) -> bool {
        if adj.is_empty() {
            return true;
        }
        let mut seen = vec![false; adj.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == adj.len()
    }

    /// Connectivity of the underlying undirected graph.
    pub fn is_connected(&self) -> bool {
        let mut adj = self.neighbor_lists(false);
        if self.directed {
            for (i, nb) in self.neighbor_lists(true).into_iter().enumerate() {
                adj[i].extend(nb);
            }
        }
        Self::reaches_all(&adj)
    }

    /// Every node reaches every other along directed edges. For undirected
    /// graphs this is plain connectivity.
    pub fn is_strongly_connected(&self) -> bool {
        if !self.directed {
            return self.is_connected();
        }
        Self::reaches_all(&self.neighbor_lists(false)) && Self::reaches_all(&self.neighbor_lists(true))
    }

    /// Relabels node `i` as `perm[i]`. `perm` must be a bijection on `0..n`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n.to_string(),
                got: perm.len().to_string(),
            });
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::InvalidParameter("permutation is not a bijection".into()));
            }
            seen[p] = true;
        }
        let edges = self.edges.iter().map(|&(i, j)| (perm[i], perm[j]));
        let mut g = Self::from_index_edges(self.n, edges, self.directed)?;
        let mut ids = vec![String::new(); self.n];
        for (i, &p) in perm.iter().enumerate() {
            ids[p] = self.node_ids[i].clone();
        }
        g.node_ids = ids;
        Ok(g)
    }

    /// Subgraph induced by `nodes`, reindexed in the given order.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Self> {
        let mut pos = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            if v >= self.n {
                return Err(Error::InvalidParameter(format!("node {v} out of range")));
            }
            pos[v] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(i, j)| pos[i] != usize::MAX && pos[j] != usize::MAX)
            .map(|&(i, j)| (pos[i], pos[j]));
        let mut g = Self::from_index_edges(nodes.len(), edges, self.directed)?;
        g.node_ids = nodes.iter().map(|&v| self.node_ids[v].clone()).collect();
        Ok(g)
    }
}
