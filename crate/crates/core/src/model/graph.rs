use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MrfError, Result};

/// Simple undirected graph on vertices `0..n` with sorted adjacency sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    n: usize,
    adjacency: Vec<BTreeSet<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = MrfError;

    fn try_from(repr: GraphRepr) -> Result<Self> {
        Graph::from_edges(repr.n, &repr.edges)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr { n: g.n, edges: g.edges() }
    }
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { n, adjacency: vec![BTreeSet::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Like [`Graph::from_edges`] but rejects any vertex whose degree would exceed `d`.
    pub fn from_edges_bounded(n: usize, edges: &[(usize, usize)], d: usize) -> Result<Self> {
        let g = Graph::from_edges(n, edges)?;
        if let Some(vertex) = (0..n).find(|&v| g.degree(v) > d) {
            return Err(MrfError::DegreeBoundExceeded { vertex, bound: d });
        }
        Ok(g)
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Graph::from_edges(n, &edges).expect("path edges are valid")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least 3 vertices");
        let edges: Vec<_> = (0..n).map(|v| (v, (v + 1) % n)).collect();
        Graph::from_edges(n, &edges).expect("cycle edges are valid")
    }

    /// The `dim`-dimensional hypercube; vertices adjacent iff their labels differ in one bit.
    pub fn hypercube(dim: u32) -> Self {
        let n = 1usize << dim;
        let mut edges = Vec::new();
        for v in 0..n {
            for b in 0..dim {
                let u = v ^ (1 << b);
                if v < u {
                    edges.push((v, u));
                }
            }
        }
        Graph::from_edges(n, &edges).expect("hypercube edges are valid")
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v).expect("complete graph edges are valid");
            }
        }
        g
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(MrfError::SelfLoop(u));
        }
        if !self.adjacency[u].insert(v) {
            return Err(MrfError::DuplicateEdge(u.min(v), u.max(v)));
        }
        self.adjacency[v].insert(u);
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        if u >= self.n || v >= self.n {
            return false;
        }
        let removed = self.adjacency[u].remove(&v);
        self.adjacency[v].remove(&u);
        removed
    }

    /// Appends a fresh isolated vertex and returns its index.
    pub fn add_vertex(&mut self) -> usize {
        self.adjacency.push(BTreeSet::new());
        self.n += 1;
        self.n - 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adjacency[u].contains(&v)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            out.extend(nbrs.range(u + 1..).map(|&v| (u, v)));
        }
        out
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices.iter().enumerate().all(|(i, &u)| vertices[i + 1..].iter().all(|&v| self.has_edge(u, v)))
    }

    /// Subgraph induced on `keep`, relabelled to `0..keep.len()` in the given order.
    pub fn induced(&self, keep: &[usize]) -> Graph {
        let mut g = Graph::empty(keep.len());
        for (i, &u) in keep.iter().enumerate() {
            for (j, &v) in keep.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    g.add_edge(i, j).expect("induced edges are valid");
                }
            }
        }
        g
    }

    /// Shortest-path distances from `source` (`usize::MAX` when unreachable).
    pub fn distances_from(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn same_component(&self, u: usize, v: usize) -> bool {
        self.distances_from(u)[v] != usize::MAX
    }

    pub fn has_triangle(&self) -> bool {
        self.edges().into_iter().any(|(u, v)| self.adjacency[u].intersection(&self.adjacency[v]).next().is_some())
    }

    pub fn to_petgraph(&self) -> petgraph::graph::UnGraph<(), ()> {
        let mut g = petgraph::graph::UnGraph::<(), ()>::with_capacity(self.n, self.edge_count());
        for _ in 0..self.n {
            g.add_node(());
        }
        for (u, v) in self.edges() {
            g.add_edge(petgraph::graph::NodeIndex::new(u), petgraph::graph::NodeIndex::new(v), ());
        }
        g
    }

    pub fn is_isomorphic_to(&self, other: &Graph) -> bool {
        self.n == other.n
            && self.edge_count() == other.edge_count()
            && petgraph::algo::is_isomorphic(&self.to_petgraph(), &other.to_petgraph())
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n {
            Err(MrfError::VertexOutOfRange { vertex: v, n: self.n })
        } else {
            Ok(())
        }
    }
}

/// Random graph with maximum degree at most `d`.
///
/// All `n(n-1)/2` candidate edges are shuffled with a seeded ChaCha stream and
/// accepted greedily while both endpoints are below degree `d`.
pub fn random_bounded_graph(n: usize, d: usize, seed: u64) -> Graph {
    let mut candidates: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    let mut g = Graph::empty(n);
    for (u, v) in candidates {
        if g.degree(u) < d && g.degree(v) < d {
            g.add_edge(u, v).expect("candidate edges are distinct");
        }
    }
    g
}
