//! Bubble decomposition of a connected maximal planar graph.
//!
//! A 3-clique is separating when deleting its vertices disconnects the
//! graph. Splitting recursively at separating 3-cliques (keeping the
//! clique on both sides) terminates in the bubbles: induced subgraphs
//! with no separating 3-clique of their own. The result is independent
//! of the splitting order. Every separating 3-clique lies in exactly two
//! bubbles, which become adjacent in the bubble tree; every face 3-clique
//! lies in exactly one.

use serde::Serialize;

use super::PlanarGraph;

/// Maximal-planar piece without separating 3-cliques; `vertices` sorted.
#[derive(Debug, Clone, Serialize)]
pub struct Bubble {
    pub vertices: Vec<usize>,
}

/// Bubble-tree edge between bubbles `a < b`, labeled by the separating
/// 3-clique they share.
#[derive(Debug, Clone, Serialize)]
pub struct BubbleTreeEdge {
    pub a: usize,
    pub b: usize,
    pub clique: [usize; 3],
}

/// Bubbles in lexicographic vertex order plus the tree structure over
/// them. `vertex_bubbles[v]` lists the bubbles containing vertex `v`.
#[derive(Debug, Clone, Serialize)]
pub struct BubbleTree {
    pub bubbles: Vec<Bubble>,
    pub edges: Vec<BubbleTreeEdge>,
    pub vertex_bubbles: Vec<Vec<usize>>,
}

impl BubbleTree {
    pub fn n_bubbles(&self) -> usize {
        self.bubbles.len()
    }
}

/// Decomposes a connected maximal planar graph (a PMFG) into its bubble
/// tree.
pub fn bubble_tree(g: &PlanarGraph) -> BubbleTree {
    let n = g.n;
    assert!(n >= 3, "bubble decomposition needs a maximal planar graph");
    let adj = g.adjacency();
    let cliques = g.three_cliques();

    let mut bubbles: Vec<Vec<usize>> = Vec::new();
    let mut work: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut mask = vec![false; n];
    while let Some(piece) = work.pop() {
        match split_piece(&piece, &cliques, &adj, &mut mask) {
            Some(parts) => work.extend(parts),
            None => bubbles.push(piece),
        }
    }
    bubbles.sort();

    let mut vertex_bubbles = vec![Vec::new(); n];
    for (bi, b) in bubbles.iter().enumerate() {
        for &v in b {
            vertex_bubbles[v].push(bi);
        }
    }

    let mut edges = Vec::new();
    for t in &cliques {
        let mut holders = vertex_bubbles[t[0]].clone();
        holders.retain(|b| {
            vertex_bubbles[t[1]].binary_search(b).is_ok()
                && vertex_bubbles[t[2]].binary_search(b).is_ok()
        });
        match holders.len() {
            1 => {}
            2 => edges.push(BubbleTreeEdge {
                a: holders[0],
                b: holders[1],
                clique: *t,
            }),
            k => panic!("3-clique {t:?} lies in {k} bubbles"),
        }
    }
    assert_eq!(edges.len() + 1, bubbles.len(), "bubble graph must be a tree");

    BubbleTree {
        bubbles: bubbles.into_iter().map(|vertices| Bubble { vertices }).collect(),
        edges,
        vertex_bubbles,
    }
}

/// Splits `piece` at its first separating 3-clique, returning the
/// sub-pieces (each component plus the clique), or `None` when `piece`
/// is a bubble. `mask` is shared scratch, false outside this call.
fn split_piece(
    piece: &[usize],
    cliques: &[[usize; 3]],
    adj: &[Vec<usize>],
    mask: &mut [bool],
) -> Option<Vec<Vec<usize>>> {
    // Removing three vertices from at most four leaves nothing to separate.
    if piece.len() <= 4 {
        return None;
    }
    for &v in piece {
        mask[v] = true;
    }
    let result = (|| {
        for t in cliques {
            if !(mask[t[0]] && mask[t[1]] && mask[t[2]]) {
                continue;
            }
            for &v in t {
                mask[v] = false;
            }
            let components = piece_components(piece, t, adj, mask);
            for &v in t {
                mask[v] = true;
            }
            if components.len() > 1 {
                let parts = components
                    .into_iter()
                    .map(|mut comp| {
                        comp.extend_from_slice(t);
                        comp.sort_unstable();
                        comp
                    })
                    .collect();
                return Some(parts);
            }
        }
        None
    })();
    for &v in piece {
        mask[v] = false;
    }
    result
}

/// Connected components of the piece with the clique vertices removed.
fn piece_components(
    piece: &[usize],
    t: &[usize; 3],
    adj: &[Vec<usize>],
    mask: &[bool],
) -> Vec<Vec<usize>> {
    let mut visited = vec![false; adj.len()];
    for &v in t {
        visited[v] = true;
    }
    let mut comps = Vec::new();
    for &start in piece {
        if !mask[start] || visited[start] {
            continue;
        }
        let mut comp = vec![start];
        let mut queue = vec![start];
        visited[start] = true;
        while let Some(v) = queue.pop() {
            for &w in &adj[v] {
                if mask[w] && !visited[w] {
                    visited[w] = true;
                    comp.push(w);
                    queue.push(w);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtergraph::planarity::random_triangulation;
    use crate::filtergraph::pmfg;
    use ndarray::Array2;

    fn graph(n: usize, pairs: &[(usize, usize)]) -> PlanarGraph {
        PlanarGraph::from_pairs(n, pairs).unwrap()
    }

    fn check_membership_tables(bt: &BubbleTree, n: usize) {
        for v in 0..n {
            assert!(!bt.vertex_bubbles[v].is_empty(), "vertex {v} uncovered");
            for &b in &bt.vertex_bubbles[v] {
                assert!(bt.bubbles[b].vertices.binary_search(&v).is_ok());
            }
        }
        for (bi, b) in bt.bubbles.iter().enumerate() {
            for &v in &b.vertices {
                assert!(bt.vertex_bubbles[v].contains(&bi));
            }
        }
    }

    #[test]
    fn k4_is_a_single_bubble() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let bt = bubble_tree(&g);
        assert_eq!(bt.n_bubbles(), 1);
        assert_eq!(bt.bubbles[0].vertices, vec![0, 1, 2, 3]);
        assert!(bt.edges.is_empty());
    }

    #[test]
    fn octahedron_is_a_single_bubble() {
        let g = graph(
            6,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (5, 1),
                (5, 2),
                (5, 3),
                (5, 4),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 1),
            ],
        );
        let bt = bubble_tree(&g);
        assert_eq!(bt.n_bubbles(), 1);
        assert!(bt.edges.is_empty());
    }

    #[test]
    fn bipyramid_splits_at_its_equator() {
        // Two apexes 0 and 1 over the triangle {2,3,4}, no 0-1 edge.
        let g = graph(
            5,
            &[
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 2),
                (1, 3),
                (1, 4),
                (2, 3),
                (2, 4),
                (3, 4),
            ],
        );
        let bt = bubble_tree(&g);
        assert_eq!(bt.n_bubbles(), 2);
        assert_eq!(bt.bubbles[0].vertices, vec![0, 2, 3, 4]);
        assert_eq!(bt.bubbles[1].vertices, vec![1, 2, 3, 4]);
        assert_eq!(bt.edges.len(), 1);
        assert_eq!((bt.edges[0].a, bt.edges[0].b), (0, 1));
        assert_eq!(bt.edges[0].clique, [2, 3, 4]);
        check_membership_tables(&bt, 5);
    }

    #[test]
    fn stacked_tetrahedra_form_a_path() {
        // K4 on {0,1,2,3}; vertex 4 on face {1,2,3}; vertex 5 on {2,3,4}.
        let g = graph(
            6,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (1, 2),
                (1, 3),
                (2, 3),
                (1, 4),
                (2, 4),
                (3, 4),
                (2, 5),
                (3, 5),
                (4, 5),
            ],
        );
        let bt = bubble_tree(&g);
        let vertex_sets: Vec<Vec<usize>> = bt.bubbles.iter().map(|b| b.vertices.clone()).collect();
        assert_eq!(
            vertex_sets,
            vec![vec![0, 1, 2, 3], vec![1, 2, 3, 4], vec![2, 3, 4, 5]]
        );
        assert_eq!(bt.edges.len(), 2);
        assert_eq!((bt.edges[0].a, bt.edges[0].b, bt.edges[0].clique), (0, 1, [1, 2, 3]));
        assert_eq!((bt.edges[1].a, bt.edges[1].b, bt.edges[1].clique), (1, 2, [2, 3, 4]));
        assert_eq!(bt.vertex_bubbles[3], vec![0, 1, 2]);
        check_membership_tables(&bt, 6);
    }

    #[test]
    fn stacked_triangulations_decompose_into_tetrahedra() {
        for seed in 0..10 {
            let n = 5 + (seed as usize) * 4;
            let g = graph(n, &random_triangulation(n, seed + 500));
            let bt = bubble_tree(&g);
            assert_eq!(bt.n_bubbles(), n - 3);
            assert_eq!(bt.edges.len(), n - 4);
            for b in &bt.bubbles {
                assert_eq!(b.vertices.len(), 4);
            }
            check_membership_tables(&bt, n);
        }
    }

    #[test]
    fn pmfg_bubbles_induce_maximal_planar_subgraphs() {
        let n = 40;
        let mut state = 12345u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.1 + 1.8 * ((state >> 11) as f64 / (1u64 << 53) as f64)
        };
        let mut values = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let v = next();
                values[[i, j]] = v;
                values[[j, i]] = v;
            }
        }
        let d = crate::correlation::DistanceMatrix::from_values(values).unwrap();
        let g = pmfg(&d).unwrap();
        let bt = bubble_tree(&g);
        assert_eq!(bt.edges.len() + 1, bt.n_bubbles());
        check_membership_tables(&bt, n);
        for b in &bt.bubbles {
            assert!(b.vertices.len() >= 4);
            let inside = |v: usize| b.vertices.binary_search(&v).is_ok();
            let induced = g.edges.iter().filter(|e| inside(e.i) && inside(e.j)).count();
            assert_eq!(induced, 3 * b.vertices.len() - 6);
        }
    }
}
