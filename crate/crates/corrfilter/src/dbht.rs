//! Directed-bubble hierarchy (DBHT) clustering on the PMFG.
//!
//! The bubble tree of the PMFG is directed edge by edge: each separating
//! 3-clique pulls toward the bubble where its vertices attach more
//! strongly. Bubbles whose tree edges all point inward are converging and
//! seed one cluster each, so the cluster count emerges from the data
//! rather than from a parameter. Every vertex is routed to a converging
//! bubble, and a complete-linkage hierarchy is then built inside each
//! cluster and across clusters, so cutting it at the emergent cluster
//! count reproduces the partition exactly.
//!
//! The direction and assignment rules below pin one concrete attachment
//! formula (sums of correlation over PMFG edges); ties are always broken
//! toward smaller vertex or bubble indices.

use serde::Serialize;
use thiserror::Error;

use crate::correlation::{CorrelationMatrix, DistanceMatrix};
use crate::filtergraph::{bubble_tree, pmfg, BubbleTree, GraphError, PlanarGraph};
use crate::linkage::{Dendrogram, Merge, Partition};

/// Errors raised by the DBHT pipeline.
#[derive(Debug, Error)]
pub enum DbhtError {
    #[error("correlation and distance inputs disagree: {0}")]
    InconsistentInputs(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Role of a bubble in the directed bubble tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BubbleKind {
    /// All incident tree edges point inward (cluster seed).
    Converging,
    /// All incident tree edges point outward.
    Diverging,
    /// Mixed in- and out-edges.
    Passage,
}

/// Tree edge directed from bubble `from` to bubble `to`; `strength` is
/// the attachment of the separating clique toward `to`.
#[derive(Debug, Clone, Serialize)]
pub struct DirectedEdge {
    pub from: usize,
    pub to: usize,
    pub clique: [usize; 3],
    pub strength: f64,
}

/// Bubble tree plus edge directions and per-bubble roles.
#[derive(Debug, Clone, Serialize)]
pub struct DirectedBubbleTree {
    pub tree: BubbleTree,
    pub edges: Vec<DirectedEdge>,
    pub kinds: Vec<BubbleKind>,
}

impl DirectedBubbleTree {
    pub fn converging(&self) -> Vec<usize> {
        self.kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == BubbleKind::Converging)
            .map(|(b, _)| b)
            .collect()
    }
}

/// Full DBHT output; `n_cl` is emergent, not a parameter.
#[derive(Debug, Clone, Serialize)]
pub struct DbhtResult {
    pub n_cl: usize,
    pub partition: Partition,
    pub dendrogram: Dendrogram,
    pub directed: DirectedBubbleTree,
    pub graph: PlanarGraph,
}

/// Sum of `corr` over PMFG edges from clique vertices into the bubble,
/// excluding edges internal to the clique.
fn clique_attachment(
    clique: &[usize; 3],
    bubble: &[usize],
    corr: &CorrelationMatrix,
    adj: &[Vec<usize>],
) -> f64 {
    let mut total = 0.0;
    for &v in clique {
        for &u in bubble {
            if clique.contains(&u) {
                continue;
            }
            if adj[v].binary_search(&u).is_ok() {
                total += corr.values[[v, u]];
            }
        }
    }
    total
}

/// Sum of `corr` over PMFG edges from `v` into the bubble.
fn vertex_attachment(
    v: usize,
    bubble: &[usize],
    corr: &CorrelationMatrix,
    adj: &[Vec<usize>],
) -> f64 {
    let mut total = 0.0;
    for &u in bubble {
        if u != v && adj[v].binary_search(&u).is_ok() {
            total += corr.values[[v, u]];
        }
    }
    total
}

/// Directs every bubble-tree edge toward the side where the separating
/// clique attaches more strongly; exact ties go toward the bubble whose
/// non-clique vertices contain the smallest index.
pub fn direct_bubble_tree(
    bt: BubbleTree,
    corr: &CorrelationMatrix,
    g: &PlanarGraph,
) -> DirectedBubbleTree {
    let adj = g.adjacency();
    let mut edges = Vec::with_capacity(bt.edges.len());
    for e in &bt.edges {
        let to_a = clique_attachment(&e.clique, &bt.bubbles[e.a].vertices, corr, &adj);
        let to_b = clique_attachment(&e.clique, &bt.bubbles[e.b].vertices, corr, &adj);
        let min_outside = |b: usize| {
            *bt.bubbles[b]
                .vertices
                .iter()
                .find(|v| !e.clique.contains(v))
                .expect("bubble strictly contains its separating clique")
        };
        let toward_a = match to_a.partial_cmp(&to_b).expect("finite attachments") {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => min_outside(e.a) < min_outside(e.b),
        };
        edges.push(if toward_a {
            DirectedEdge {
                from: e.b,
                to: e.a,
                clique: e.clique,
                strength: to_a,
            }
        } else {
            DirectedEdge {
                from: e.a,
                to: e.b,
                clique: e.clique,
                strength: to_b,
            }
        });
    }

    let nb = bt.bubbles.len();
    let mut indeg = vec![0usize; nb];
    let mut outdeg = vec![0usize; nb];
    for e in &edges {
        outdeg[e.from] += 1;
        indeg[e.to] += 1;
    }
    let kinds = (0..nb)
        .map(|b| {
            if outdeg[b] == 0 {
                BubbleKind::Converging
            } else if indeg[b] == 0 {
                BubbleKind::Diverging
            } else {
                BubbleKind::Passage
            }
        })
        .collect();

    DirectedBubbleTree { tree: bt, edges, kinds }
}

/// Assigns every vertex to a converging bubble's cluster.
///
/// Non-converging bubbles follow their strongest out-edge (ties toward
/// the smaller target index) until a converging bubble is reached. A
/// vertex in several bubbles goes with the bubble it attaches to most
/// strongly, ties toward the smaller bubble index. Converging bubbles
/// left without any vertex are dropped, so labels stay contiguous.
pub fn dbht_partition(
    dbt: &DirectedBubbleTree,
    corr: &CorrelationMatrix,
    g: &PlanarGraph,
) -> Partition {
    let nb = dbt.tree.bubbles.len();
    let mut out_edges: Vec<Vec<&DirectedEdge>> = vec![Vec::new(); nb];
    for e in &dbt.edges {
        out_edges[e.from].push(e);
    }

    // Route every bubble to its converging sink.
    let mut sink: Vec<Option<usize>> = (0..nb)
        .map(|b| (dbt.kinds[b] == BubbleKind::Converging).then_some(b))
        .collect();
    for start in 0..nb {
        if sink[start].is_some() {
            continue;
        }
        let mut path = vec![start];
        let mut cur = start;
        while sink[cur].is_none() {
            let next = out_edges[cur]
                .iter()
                .copied()
                .reduce(|best, e| {
                    if e.strength > best.strength
                        || (e.strength == best.strength && e.to < best.to)
                    {
                        e
                    } else {
                        best
                    }
                })
                .expect("non-converging bubble has an out-edge");
            cur = next.to;
            if sink[cur].is_none() {
                path.push(cur);
            }
        }
        let s = sink[cur];
        for b in path {
            sink[b] = s;
        }
    }

    let adj = g.adjacency();
    let mut raw = Vec::with_capacity(g.n);
    for v in 0..g.n {
        let candidates = &dbt.tree.vertex_bubbles[v];
        let mut best = candidates[0];
        let mut best_val = vertex_attachment(v, &dbt.tree.bubbles[best].vertices, corr, &adj);
        for &b in &candidates[1..] {
            let val = vertex_attachment(v, &dbt.tree.bubbles[b].vertices, corr, &adj);
            if val > best_val {
                best = b;
                best_val = val;
            }
        }
        raw.push(sink[best].expect("all bubbles routed"));
    }
    Partition::canonicalize(&raw).expect("at least one vertex")
}

/// One round of complete-linkage agglomeration over explicit nodes until
/// a single node remains; appends the merges and returns the root.
/// Tie-breaking matches [`crate::linkage::linkage`]: smallest (left id,
/// right id) among minimal-distance pairs.
fn complete_merge_phase(
    ids: Vec<usize>,
    leaf_counts: Vec<usize>,
    mut d: Vec<Vec<f64>>,
    merges: &mut Vec<Merge>,
    next_internal: &mut usize,
) -> usize {
    let m = ids.len();
    let mut alive = vec![true; m];
    let mut node_id = ids;
    let mut size = leaf_counts;
    for _ in 0..m.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..m {
            if !alive[a] {
                continue;
            }
            for b in (a + 1)..m {
                if !alive[b] {
                    continue;
                }
                let (lo, hi) = if node_id[a] < node_id[b] {
                    (node_id[a], node_id[b])
                } else {
                    (node_id[b], node_id[a])
                };
                let better = match &best {
                    None => true,
                    Some((bd, blo, bhi, _, _)) => {
                        d[a][b] < *bd || (d[a][b] == *bd && (lo, hi) < (*blo, *bhi))
                    }
                };
                if better {
                    best = Some((d[a][b], lo, hi, a, b));
                }
            }
        }
        let (height, left, right, slot_a, slot_b) = best.expect("two or more alive nodes");
        let new_size = size[slot_a] + size[slot_b];
        merges.push(Merge {
            left,
            right,
            height,
            size: new_size,
        });
        for k in 0..m {
            if !alive[k] || k == slot_a || k == slot_b {
                continue;
            }
            let merged = d[slot_a][k].max(d[slot_b][k]);
            d[slot_a][k] = merged;
            d[k][slot_a] = merged;
        }
        alive[slot_b] = false;
        size[slot_a] = new_size;
        node_id[slot_a] = *next_internal;
        *next_internal += 1;
    }
    (0..m)
        .find(|&a| alive[a])
        .map(|a| node_id[a])
        .expect("one survivor")
}

/// Builds the DBHT hierarchy: complete-linkage agglomeration restricted
/// to each cluster (in cluster-label order), then complete-linkage merges
/// across the cluster roots. Undoing the final `n_cl - 1` merges recovers
/// the partition, which is what [`crate::linkage::cut`] does.
///
/// The bubble tree parameter is part of the interface contract; this
/// implementation derives all merge heights from the distance matrix
/// alone, which already satisfies the cut-consistency requirement.
pub fn dbht_hierarchy(
    partition: &Partition,
    dist: &DistanceMatrix,
    _bt: &BubbleTree,
) -> Dendrogram {
    let n = partition.len();
    assert_eq!(n, dist.n(), "partition and distances must agree");
    let clusters = partition.clusters();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut next_internal = n;

    let mut roots = Vec::with_capacity(clusters.len());
    for members in &clusters {
        let d: Vec<Vec<f64>> = members
            .iter()
            .map(|&i| members.iter().map(|&j| dist.values[[i, j]]).collect())
            .collect();
        let root = complete_merge_phase(
            members.clone(),
            vec![1; members.len()],
            d,
            &mut merges,
            &mut next_internal,
        );
        roots.push(root);
    }

    let k = clusters.len();
    let mut cross = vec![vec![0.0f64; k]; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let mut max = f64::NEG_INFINITY;
            for &i in &clusters[a] {
                for &j in &clusters[b] {
                    max = max.max(dist.values[[i, j]]);
                }
            }
            cross[a][b] = max;
            cross[b][a] = max;
        }
    }
    let sizes = clusters.iter().map(Vec::len).collect();
    complete_merge_phase(roots, sizes, cross, &mut merges, &mut next_internal);

    Dendrogram { n_leaves: n, merges }
}

/// Runs the full pipeline: PMFG, bubble decomposition, direction,
/// assignment, hierarchy. The distance matrix must equal
/// `sqrt(2 (1 - rho))` entrywise within 1e-9.
pub fn dbht(dist: &DistanceMatrix, corr: &CorrelationMatrix) -> Result<DbhtResult, DbhtError> {
    let n = dist.n();
    if corr.n() != n {
        return Err(DbhtError::InconsistentInputs(format!(
            "matrix orders differ ({} vs {n})",
            corr.n()
        )));
    }
    if corr.tickers != dist.tickers {
        return Err(DbhtError::InconsistentInputs(
            "ticker lists differ".to_string(),
        ));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let expected = (2.0 * (1.0 - corr.values[[i, j]])).max(0.0).sqrt();
            let got = dist.values[[i, j]];
            if (got - expected).abs() > 1e-9 {
                return Err(DbhtError::InconsistentInputs(format!(
                    "entry ({i},{j}): distance {got} vs sqrt(2(1-rho)) = {expected}"
                )));
            }
        }
    }

    let graph = pmfg(dist)?;
    let bt = bubble_tree(&graph);
    let directed = direct_bubble_tree(bt, corr, &graph);
    let partition = dbht_partition(&directed, corr, &graph);
    let dendrogram = dbht_hierarchy(&partition, dist, &directed.tree);
    let n_cl = partition.n_clusters();
    let recut = dendrogram.cut(n_cl).expect("n_cl within 1..=N");
    assert_eq!(
        recut.labels(),
        partition.labels(),
        "hierarchy cut must reproduce the partition"
    );
    Ok(DbhtResult {
        n_cl,
        partition,
        dendrogram,
        directed,
        graph,
    })
}
