//! Filtered graphs over a distance matrix: minimum spanning tree and
//! planar maximally filtered graph (PMFG), plus the decomposition of a
//! maximal planar graph into its bubble tree.
//!
//! Both filters scan the complete edge list in ascending distance order,
//! ties broken by vertex pair. The MST keeps edges joining distinct
//! components; the PMFG keeps every edge that preserves planarity and
//! stops at `3(N - 2)` edges. The MST is always a subgraph of the PMFG.

mod bubble;
mod planarity;

pub use bubble::{bubble_tree, Bubble, BubbleTree, BubbleTreeEdge};
pub use planarity::{is_planar, planar_embedding, verify_rotation};

use serde::Serialize;
use thiserror::Error;

use crate::correlation::DistanceMatrix;

/// Errors raised by graph construction.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least {needed} vertices, got {got}")]
    TooFewVertices { needed: usize, got: usize },
    #[error("edge set is not planar")]
    NotPlanar,
}

/// Weighted undirected edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// All `N(N-1)/2` edges of a distance matrix in ascending weight order,
/// ties broken by `(i, j)`.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeList {
    edges: Vec<Edge>,
}

impl EdgeList {
    pub fn from_distances(d: &DistanceMatrix) -> EdgeList {
        let n = d.n();
        let mut edges = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push(Edge {
                    i,
                    j,
                    weight: d.values[[i, j]],
                });
            }
        }
        edges.sort_by(|a, b| {
            a.weight
                .total_cmp(&b.weight)
                .then(a.i.cmp(&b.i))
                .then(a.j.cmp(&b.j))
        });
        EdgeList { edges }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Edge> {
        self.edges.iter()
    }

    pub fn as_slice(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False when both vertices already share a component.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        true
    }
}

/// Minimum spanning tree; `edges` are in acceptance (ascending weight)
/// order.
#[derive(Debug, Clone, Serialize)]
pub struct SpanningTree {
    pub n: usize,
    pub edges: Vec<Edge>,
}

impl SpanningTree {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

/// Kruskal's algorithm over the sorted edge list. The distance graph is
/// complete, so the result always spans all vertices.
pub fn mst(d: &DistanceMatrix) -> SpanningTree {
    let n = d.n();
    let mut uf = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for e in EdgeList::from_distances(d).iter() {
        if uf.union(e.i, e.j) {
            edges.push(*e);
            if edges.len() + 1 == n {
                break;
            }
        }
    }
    assert!(n == 0 || edges.len() + 1 == n, "complete graph must connect");
    SpanningTree { n, edges }
}

/// Maximal planar graph with a combinatorial embedding. `edges` are in
/// acceptance order with `i < j`; `embedding[v]` lists the neighbors of
/// `v` in clockwise order.
#[derive(Debug, Clone, Serialize)]
pub struct PlanarGraph {
    pub n: usize,
    pub edges: Vec<Edge>,
    pub embedding: Vec<Vec<usize>>,
}

impl PlanarGraph {
    /// Wraps an explicit edge set, verifying planarity. Weights are set
    /// to zero; intended for graphs given by topology alone.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<PlanarGraph, GraphError> {
        let norm: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        let embedding = planarity::planar_embedding(n, &norm).ok_or(GraphError::NotPlanar)?;
        let edges = norm.iter().map(|&(i, j)| Edge { i, j, weight: 0.0 }).collect();
        Ok(PlanarGraph { n, edges, embedding })
    }

    /// Edge endpoints without weights.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.i, e.j)).collect()
    }

    /// Neighbor lists in ascending vertex order.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// All 3-cliques as sorted triples, in lexicographic order.
    pub fn three_cliques(&self) -> Vec<[usize; 3]> {
        let adj = self.adjacency();
        let mut out = Vec::new();
        for e in &self.edges {
            let (a, b) = (&adj[e.i], &adj[e.j]);
            let (mut x, mut y) = (0, 0);
            while x < a.len() && y < b.len() {
                match a[x].cmp(&b[y]) {
                    std::cmp::Ordering::Less => x += 1,
                    std::cmp::Ordering::Greater => y += 1,
                    std::cmp::Ordering::Equal => {
                        if a[x] > e.j {
                            out.push([e.i, e.j, a[x]]);
                        }
                        x += 1;
                        y += 1;
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Planar maximally filtered graph: greedy edge insertion in ascending
/// distance order, keeping each edge whose addition stays planar, until
/// the maximal planar count `3(N - 2)` is reached.
pub fn pmfg(d: &DistanceMatrix) -> Result<PlanarGraph, GraphError> {
    let n = d.n();
    if n < 3 {
        return Err(GraphError::TooFewVertices { needed: 3, got: n });
    }
    let target = 3 * (n - 2);
    let mut accepted: Vec<Edge> = Vec::with_capacity(target);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(target);
    for e in EdgeList::from_distances(d).iter() {
        if accepted.len() == target {
            break;
        }
        pairs.push((e.i, e.j));
        if planarity::is_planar(n, &pairs) {
            accepted.push(*e);
        } else {
            pairs.pop();
        }
    }
    assert_eq!(accepted.len(), target, "complete input must fill the PMFG");
    let embedding = planarity::planar_embedding(n, &pairs).expect("accepted edge set is planar");
    debug_assert!(planarity::verify_rotation(n, &pairs, &embedding).is_ok());
    Ok(PlanarGraph { n, edges: accepted, embedding })
}
