//! Agglomerative hierarchical clustering with single, average and complete
//! linkage, plus dendrogram cutting.
//!
//! The agglomeration repeatedly merges the pair of clusters at minimal
//! inter-cluster distance, where the distance between clusters is the
//! minimum (single), unweighted mean (average) or maximum (complete) over
//! cross pairs. Exact ties are broken by the smallest `(left id, right id)`
//! pair, which makes dendrograms deterministic even on degenerate inputs.
//!
//! Dendrogram nodes are numbered like the leaves first: leaf `i` keeps id
//! `i` for `i < N`, and the `k`-th merge creates internal node `N + k`, so
//! the root (when all leaves connect) is `2N - 2`.

use serde::Serialize;
use thiserror::Error;

use crate::correlation::DistanceMatrix;

/// Errors raised by linkage construction, cutting and partition handling.
#[derive(Debug, Error)]
pub enum LinkageError {
    #[error("input has no points")]
    EmptyInput,
    #[error("cannot cut {n_leaves} leaves into {requested} clusters")]
    InvalidClusterCount { requested: usize, n_leaves: usize },
    #[error("labels must cover 0..k without gaps (offending label {label})")]
    NonContiguousLabels { label: usize },
}

/// Inter-cluster distance rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LinkageRule {
    /// Minimum cross-pair distance.
    Single,
    /// Unweighted mean over all cross pairs.
    Average,
    /// Maximum cross-pair distance.
    Complete,
}

/// One agglomeration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    /// Smaller id of the two merged nodes.
    pub left: usize,
    /// Larger id of the two merged nodes.
    pub right: usize,
    /// Inter-cluster distance at which the merge happened.
    pub height: f64,
    /// Number of leaves under the new node.
    pub size: usize,
}

/// Full merge history of an agglomeration over `n_leaves` points.
#[derive(Debug, Clone, Serialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    /// `n_leaves - 1` merges in execution order.
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Partition obtained by undoing the last `n_cl - 1` merges.
    pub fn cut(&self, n_cl: usize) -> Result<Partition, LinkageError> {
        cut(self, n_cl)
    }
}

/// Hard assignment of `len()` points to `n_clusters` non-empty clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl Partition {
    /// Wraps labels that already use every id in `0..k`.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self, LinkageError> {
        if labels.is_empty() {
            return Err(LinkageError::EmptyInput);
        }
        let k = labels.iter().max().unwrap() + 1;
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(gap) = seen.iter().position(|&s| !s) {
            return Err(LinkageError::NonContiguousLabels { label: gap });
        }
        Ok(Self {
            labels,
            n_clusters: k,
        })
    }

    /// Relabels arbitrary cluster ids into canonical form: cluster ids are
    /// assigned in order of each cluster's smallest member index.
    pub fn canonicalize(raw: &[usize]) -> Result<Self, LinkageError> {
        if raw.is_empty() {
            return Err(LinkageError::EmptyInput);
        }
        let mut mapping: std::collections::HashMap<usize, usize> =
            std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let next = mapping.len();
            let id = *mapping.entry(r).or_insert(next);
            labels.push(id);
        }
        let n_clusters = mapping.len();
        Ok(Self {
            labels,
            n_clusters,
        })
    }

    /// Cluster label per point.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Number of clusters.
    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// True when there are no points (never constructible).
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Cluster sizes indexed by label.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Members of each cluster, indexed by label.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// True when both partitions group points identically, regardless of
    /// how the labels are numbered.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        if self.len() != other.len() || self.n_clusters != other.n_clusters {
            return false;
        }
        let a = Partition::canonicalize(&self.labels).expect("non-empty");
        let b = Partition::canonicalize(&other.labels).expect("non-empty");
        a.labels == b.labels
    }
}

/// Builds the dendrogram for `dist` under the given linkage rule.
pub fn linkage(dist: &DistanceMatrix, rule: LinkageRule) -> Result<Dendrogram, LinkageError> {
    let n = dist.n();
    if n == 0 {
        return Err(LinkageError::EmptyInput);
    }
    // Working copies indexed by slot; a merged cluster reuses the left
    // slot, the right slot dies.
    let mut d: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| dist.values[[i, j]]).collect())
        .collect();
    let mut alive: Vec<bool> = vec![true; n];
    let mut node_id: Vec<usize> = (0..n).collect();
    let mut size: Vec<usize> = vec![1; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        // Global minimum with deterministic tie-breaking on node ids.
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..n {
            if !alive[a] {
                continue;
            }
            for b in (a + 1)..n {
                if !alive[b] {
                    continue;
                }
                let (lo, hi) = if node_id[a] < node_id[b] {
                    (node_id[a], node_id[b])
                } else {
                    (node_id[b], node_id[a])
                };
                let candidate = (d[a][b], lo, hi, a, b);
                let better = match &best {
                    None => true,
                    Some((bd, blo, bhi, _, _)) => {
                        candidate.0 < *bd
                            || (candidate.0 == *bd && (lo, hi) < (*blo, *bhi))
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
        let (height, left, right, slot_a, slot_b) = best.expect("at least two alive clusters");
        let new_size = size[slot_a] + size[slot_b];
        merges.push(Merge {
            left,
            right,
            height,
            size: new_size,
        });

        // Lance-Williams update of distances from the merged cluster.
        for k in 0..n {
            if !alive[k] || k == slot_a || k == slot_b {
                continue;
            }
            let da = d[slot_a][k];
            let db = d[slot_b][k];
            let merged = match rule {
                LinkageRule::Single => da.min(db),
                LinkageRule::Complete => da.max(db),
                LinkageRule::Average => {
                    (size[slot_a] as f64 * da + size[slot_b] as f64 * db) / new_size as f64
                }
            };
            d[slot_a][k] = merged;
            d[k][slot_a] = merged;
        }
        alive[slot_b] = false;
        size[slot_a] = new_size;
        node_id[slot_a] = n + step;
    }

    Ok(Dendrogram {
        n_leaves: n,
        merges,
    })
}

/// Partition obtained from `dendro` by undoing the last `n_cl - 1` merges.
///
/// Cluster labels are assigned in order of each cluster's smallest leaf
/// index.
pub fn cut(dendro: &Dendrogram, n_cl: usize) -> Result<Partition, LinkageError> {
    let n = dendro.n_leaves;
    if n_cl < 1 || n_cl > n {
        return Err(LinkageError::InvalidClusterCount {
            requested: n_cl,
            n_leaves: n,
        });
    }
    // Apply the first n - n_cl merges through a union-find over node ids.
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (k, merge) in dendro.merges.iter().take(n - n_cl).enumerate() {
        let node = n + k;
        let a = find(&mut parent, merge.left);
        let b = find(&mut parent, merge.right);
        parent[a] = node;
        parent[b] = node;
    }
    let mut raw = Vec::with_capacity(n);
    for leaf in 0..n {
        raw.push(find(&mut parent, leaf));
    }
    Partition::canonicalize(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    pub(crate) fn dist_from(values: &[&[f64]]) -> DistanceMatrix {
        let n = values.len();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] = values[i][j];
            }
        }
        DistanceMatrix::from_values(m).unwrap()
    }

    fn three_point() -> DistanceMatrix {
        dist_from(&[
            &[0.0, 0.1, 0.5],
            &[0.1, 0.0, 0.9],
            &[0.5, 0.9, 0.0],
        ])
    }

    #[test]
    fn two_points_single_merge() {
        let dist = dist_from(&[&[0.0, 0.7], &[0.7, 0.0]]);
        for rule in [LinkageRule::Single, LinkageRule::Average, LinkageRule::Complete] {
            let dendro = linkage(&dist, rule).unwrap();
            assert_eq!(dendro.merges.len(), 1);
            assert_eq!((dendro.merges[0].left, dendro.merges[0].right), (0, 1));
            assert_abs_diff_eq!(dendro.merges[0].height, 0.7);
            assert_eq!(dendro.merges[0].size, 2);
        }
    }

    #[test]
    fn three_point_heights_per_rule() {
        // d12 = 0.1, d13 = 0.5, d23 = 0.9; the second merge height is the
        // signature of the rule.
        let cases = [
            (LinkageRule::Single, 0.5),
            (LinkageRule::Average, 0.7),
            (LinkageRule::Complete, 0.9),
        ];
        for (rule, expected) in cases {
            let dendro = linkage(&three_point(), rule).unwrap();
            assert_eq!(dendro.merges.len(), 2);
            assert_eq!((dendro.merges[0].left, dendro.merges[0].right), (0, 1));
            assert_abs_diff_eq!(dendro.merges[0].height, 0.1);
            assert_eq!((dendro.merges[1].left, dendro.merges[1].right), (2, 3));
            assert_abs_diff_eq!(dendro.merges[1].height, expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn equal_distances_merge_in_id_order() {
        let d = 0.4;
        let dist = dist_from(&[
            &[0.0, d, d, d],
            &[d, 0.0, d, d],
            &[d, d, 0.0, d],
            &[d, d, d, 0.0],
        ]);
        for rule in [LinkageRule::Single, LinkageRule::Average, LinkageRule::Complete] {
            let dendro = linkage(&dist, rule).unwrap();
            let pairs: Vec<(usize, usize)> =
                dendro.merges.iter().map(|m| (m.left, m.right)).collect();
            // (0,1) first, then leaves 2,3 (ids 2 < 4), then the two trees.
            assert_eq!(pairs, vec![(0, 1), (2, 3), (4, 5)]);
            for m in &dendro.merges {
                assert_abs_diff_eq!(m.height, d);
            }
        }
    }

    #[test]
    fn merge_heights_ordered_across_rules() {
        // While the merge sequences agree, single <= average <= complete
        // at every step.
        let dist = dist_from(&[
            &[0.0, 0.2, 0.9, 1.0],
            &[0.2, 0.0, 0.8, 1.1],
            &[0.9, 0.8, 0.0, 0.3],
            &[1.0, 1.1, 0.3, 0.0],
        ]);
        let s = linkage(&dist, LinkageRule::Single).unwrap();
        let a = linkage(&dist, LinkageRule::Average).unwrap();
        let c = linkage(&dist, LinkageRule::Complete).unwrap();
        for k in 0..s.merges.len() {
            if (s.merges[k].left, s.merges[k].right) == (a.merges[k].left, a.merges[k].right)
                && (s.merges[k].left, s.merges[k].right)
                    == (c.merges[k].left, c.merges[k].right)
            {
                assert!(s.merges[k].height <= a.merges[k].height + 1e-15);
                assert!(a.merges[k].height <= c.merges[k].height + 1e-15);
            }
        }
    }

    #[test]
    fn single_linkage_heights_nondecreasing() {
        let dist = dist_from(&[
            &[0.0, 0.31, 0.72, 0.45, 0.98],
            &[0.31, 0.0, 0.29, 0.87, 0.66],
            &[0.72, 0.29, 0.0, 0.51, 0.12],
            &[0.45, 0.87, 0.51, 0.0, 0.39],
            &[0.98, 0.66, 0.12, 0.39, 0.0],
        ]);
        let dendro = linkage(&dist, LinkageRule::Single).unwrap();
        for pair in dendro.merges.windows(2) {
            assert!(pair[0].height <= pair[1].height);
        }
    }

    #[test]
    fn cut_extremes() {
        let dendro = linkage(&three_point(), LinkageRule::Average).unwrap();
        let all = cut(&dendro, 1).unwrap();
        assert_eq!(all.n_clusters(), 1);
        assert_eq!(all.labels(), &[0, 0, 0]);
        let singletons = cut(&dendro, 3).unwrap();
        assert_eq!(singletons.n_clusters(), 3);
        assert_eq!(singletons.labels(), &[0, 1, 2]);
    }

    #[test]
    fn cut_two_of_three() {
        let dendro = linkage(&three_point(), LinkageRule::Complete).unwrap();
        let partition = cut(&dendro, 2).unwrap();
        assert_eq!(partition.labels(), &[0, 0, 1]);
    }

    #[test]
    fn invalid_cut_counts_rejected() {
        let dendro = linkage(&three_point(), LinkageRule::Single).unwrap();
        assert!(matches!(
            cut(&dendro, 0),
            Err(LinkageError::InvalidClusterCount { requested: 0, n_leaves: 3 })
        ));
        assert!(matches!(
            cut(&dendro, 4),
            Err(LinkageError::InvalidClusterCount { requested: 4, n_leaves: 3 })
        ));
    }

    #[test]
    fn cut_labels_follow_smallest_leaf() {
        // Cluster containing leaf 0 gets label 0 no matter the merge order.
        let dist = dist_from(&[
            &[0.0, 0.9, 0.9, 0.1],
            &[0.9, 0.0, 0.1, 0.9],
            &[0.9, 0.1, 0.0, 0.9],
            &[0.1, 0.9, 0.9, 0.0],
        ]);
        let dendro = linkage(&dist, LinkageRule::Single).unwrap();
        let partition = cut(&dendro, 2).unwrap();
        assert_eq!(partition.labels(), &[0, 1, 1, 0]);
    }

    #[test]
    fn partition_constructors() {
        let p = Partition::from_labels(vec![0, 1, 0, 2]).unwrap();
        assert_eq!(p.n_clusters(), 3);
        assert_eq!(p.cluster_sizes(), vec![2, 1, 1]);
        assert_eq!(p.clusters(), vec![vec![0, 2], vec![1], vec![3]]);

        let err = Partition::from_labels(vec![0, 2]).unwrap_err();
        assert!(matches!(err, LinkageError::NonContiguousLabels { label: 1 }));

        let canonical = Partition::canonicalize(&[7, 3, 7, 9]).unwrap();
        assert_eq!(canonical.labels(), &[0, 1, 0, 2]);
    }

    #[test]
    fn same_grouping_ignores_label_names() {
        let a = Partition::from_labels(vec![0, 0, 1, 1]).unwrap();
        let b = Partition::from_labels(vec![1, 1, 0, 0]).unwrap();
        let c = Partition::from_labels(vec![0, 1, 0, 1]).unwrap();
        assert!(a.same_grouping(&b));
        assert!(!a.same_grouping(&c));
    }

    #[test]
    fn rank_invariance_of_single_and_complete_cuts() {
        let base = dist_from(&[
            &[0.0, 0.31, 0.72, 0.45, 0.98, 0.55],
            &[0.31, 0.0, 0.29, 0.87, 0.66, 0.61],
            &[0.72, 0.29, 0.0, 0.51, 0.12, 0.43],
            &[0.45, 0.87, 0.51, 0.0, 0.39, 0.77],
            &[0.98, 0.66, 0.12, 0.39, 0.0, 0.25],
            &[0.55, 0.61, 0.43, 0.77, 0.25, 0.0],
        ]);
        let n = base.n();
        let mut squared = base.values.clone();
        for v in squared.iter_mut() {
            *v = v.powi(2) + (*v > 0.0) as u8 as f64 * 0.0;
        }
        let squared = DistanceMatrix::from_values(squared).unwrap();
        for rule in [LinkageRule::Single, LinkageRule::Complete] {
            for n_cl in 1..=n {
                let a = cut(&linkage(&base, rule).unwrap(), n_cl).unwrap();
                let b = cut(&linkage(&squared, rule).unwrap(), n_cl).unwrap();
                assert!(a.same_grouping(&b), "rule {rule:?} n_cl {n_cl}");
            }
        }
    }
}
