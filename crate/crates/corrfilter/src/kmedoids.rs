//! Partitioning Around Medoids over a distance matrix.
//!
//! Classic full-swap PAM: seed medoids at random, assign every point to
//! its nearest medoid, then repeatedly apply the single medoid/non-medoid
//! swap that lowers total cost the most, until no swap improves. The
//! whole procedure restarts from independent seeds and keeps the cheapest
//! run, which tames the method's well-known instability.
//!
//! Cost is the sum over points of the distance to their medoid. All ties
//! break toward lower indices: equidistant medoids assign to the lower
//! vertex index, equal-cost restarts keep the earliest sub-seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::correlation::DistanceMatrix;
use crate::linkage::Partition;

/// Swap iterations per restart; convergence is by no improving swap.
const MAX_ITER: usize = 300;

/// Configuration for [`kmedoids`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PamConfig {
    /// Number of clusters, `1 ..= N`.
    pub n_cl: usize,
    /// Independent restarts, at least 1; sub-seed of restart r is
    /// `rng_seed + r`.
    pub restarts: usize,
    pub rng_seed: u64,
}

impl PamConfig {
    /// Default restart count of 10.
    pub fn new(n_cl: usize, rng_seed: u64) -> Self {
        PamConfig {
            n_cl,
            restarts: 10,
            rng_seed,
        }
    }
}

/// Best configuration found; `medoids` holds vertex indices, ascending.
#[derive(Debug, Clone, Serialize)]
pub struct KmedoidsResult {
    pub partition: Partition,
    pub medoids: Vec<usize>,
    pub cost: f64,
}

/// Nearest and second-nearest medoid per point. `slot` indexes into the
/// ascending medoid list, so the strict `<` scan lands equidistant
/// points on the lowest medoid vertex index.
struct Assignment {
    slot: Vec<usize>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    cost: f64,
}

fn assign(dist: &DistanceMatrix, medoids: &[usize]) -> Assignment {
    let n = dist.n();
    let mut slot = vec![0usize; n];
    let mut d1 = vec![f64::INFINITY; n];
    let mut d2 = vec![f64::INFINITY; n];
    for i in 0..n {
        for (s, &m) in medoids.iter().enumerate() {
            let d = dist.values[[i, m]];
            if d < d1[i] {
                d2[i] = d1[i];
                d1[i] = d;
                slot[i] = s;
            } else if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    let cost = d1.iter().sum();
    Assignment { slot, d1, d2, cost }
}

/// Cost change of replacing the medoid in `slot` by vertex `h`.
fn swap_delta(dist: &DistanceMatrix, a: &Assignment, slot: usize, h: usize) -> f64 {
    let n = dist.n();
    let mut delta = 0.0;
    for i in 0..n {
        let dh = dist.values[[i, h]];
        if a.slot[i] == slot {
            delta += dh.min(a.d2[i]) - a.d1[i];
        } else if dh < a.d1[i] {
            delta += dh - a.d1[i];
        }
    }
    delta
}

fn pam_single(dist: &DistanceMatrix, n_cl: usize, sub_seed: u64) -> (Vec<usize>, Assignment) {
    let n = dist.n();
    let mut rng = ChaCha20Rng::seed_from_u64(sub_seed);
    let mut medoids: Vec<usize> = rand::seq::index::sample(&mut rng, n, n_cl).into_vec();
    medoids.sort_unstable();

    let mut a = assign(dist, &medoids);
    for _ in 0..MAX_ITER {
        let mut best: Option<(f64, usize, usize)> = None;
        for s in 0..n_cl {
            for h in 0..n {
                if medoids.binary_search(&h).is_ok() {
                    continue;
                }
                let delta = swap_delta(dist, &a, s, h);
                if best.map_or(true, |(bd, _, _)| delta < bd) {
                    best = Some((delta, s, h));
                }
            }
        }
        match best {
            Some((delta, s, h)) if delta < 0.0 => {
                medoids[s] = h;
                medoids.sort_unstable();
                a = assign(dist, &medoids);
            }
            _ => break,
        }
    }
    (medoids, a)
}

/// Runs PAM with `cfg.restarts` independent starts and returns the
/// cheapest configuration (ties keep the earliest sub-seed).
///
/// Panics if `cfg` violates its invariants.
pub fn kmedoids(dist: &DistanceMatrix, cfg: &PamConfig) -> KmedoidsResult {
    let n = dist.n();
    assert!(
        cfg.n_cl >= 1 && cfg.n_cl <= n,
        "n_cl must lie in 1..={n}, got {}",
        cfg.n_cl
    );
    assert!(cfg.restarts >= 1, "restarts must be at least 1");

    let mut best: Option<(Vec<usize>, Assignment)> = None;
    for r in 0..cfg.restarts {
        let run = pam_single(dist, cfg.n_cl, cfg.rng_seed.wrapping_add(r as u64));
        if best.as_ref().map_or(true, |(_, a)| run.1.cost < a.cost) {
            best = Some(run);
        }
    }
    let (medoids, a) = best.expect("at least one restart");
    let partition = Partition::canonicalize(&a.slot).expect("nonempty matrix");
    KmedoidsResult {
        partition,
        medoids,
        cost: a.cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn dist_from(n: usize, entries: &[(usize, usize, f64)]) -> DistanceMatrix {
        let mut values = Array2::from_elem((n, n), 0.0);
        for &(i, j, v) in entries {
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
        DistanceMatrix::from_values(values).unwrap()
    }

    fn random_dist(n: usize, seed: u64) -> DistanceMatrix {
        let mut state = seed.wrapping_mul(0x2545f4914f6cdd1d).wrapping_add(7);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 1.8 + 0.1
        };
        let mut values = Array2::from_elem((n, n), 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = next();
                values[[i, j]] = v;
                values[[j, i]] = v;
            }
        }
        DistanceMatrix::from_values(values).unwrap()
    }

    /// Exhaustive minimum over all medoid sets of the given size.
    fn brute_force(dist: &DistanceMatrix, n_cl: usize) -> (Vec<usize>, f64) {
        let n = dist.n();
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut set: Vec<usize> = (0..n_cl).collect();
        loop {
            let cost: f64 = (0..n)
                .map(|i| {
                    set.iter()
                        .map(|&m| dist.values[[i, m]])
                        .fold(f64::INFINITY, f64::min)
                })
                .sum();
            if best.as_ref().map_or(true, |(_, bc)| cost < *bc) {
                best = Some((set.clone(), cost));
            }
            // Next combination in lexicographic order.
            let mut k = n_cl;
            loop {
                if k == 0 {
                    return best.unwrap();
                }
                k -= 1;
                if set[k] < n - (n_cl - k) {
                    set[k] += 1;
                    for t in (k + 1)..n_cl {
                        set[t] = set[t - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn each_point_its_own_medoid() {
        let d = random_dist(6, 3);
        let r = kmedoids(&d, &PamConfig::new(6, 42));
        assert_eq!(r.medoids, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.partition.n_clusters(), 6);
    }

    #[test]
    fn two_separated_pairs_recovered() {
        let d = dist_from(
            4,
            &[
                (0, 1, 0.1),
                (2, 3, 0.2),
                (0, 2, 2.0),
                (0, 3, 2.1),
                (1, 2, 2.2),
                (1, 3, 2.3),
            ],
        );
        let r = kmedoids(&d, &PamConfig::new(2, 7));
        let (_, oracle_cost) = brute_force(&d, 2);
        // Every one-medoid-per-pair set costs 0.3, so only the cost and
        // the recovered pairs are pinned, not the medoid identities.
        assert_eq!(r.cost, oracle_cost);
        assert!((r.cost - 0.3).abs() < 1e-15);
        assert!(r.medoids.iter().filter(|&&m| m < 2).count() == 1);
        let labels = r.partition.labels();
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[2], labels[3]);
        assert_ne!(labels[0], labels[2]);
    }

    #[test]
    fn single_medoid_is_the_one_median() {
        for seed in 0..5 {
            let d = random_dist(9, seed);
            let r = kmedoids(&d, &PamConfig::new(1, seed * 31 + 1));
            let (oracle_medoids, oracle_cost) = brute_force(&d, 1);
            assert_eq!(r.medoids, oracle_medoids);
            assert!((r.cost - oracle_cost).abs() < 1e-12);
            assert_eq!(r.partition.n_clusters(), 1);
        }
    }

    #[test]
    fn termination_is_single_swap_optimal() {
        for seed in 0..4 {
            let d = random_dist(12, 100 + seed);
            let r = kmedoids(&d, &PamConfig::new(3, seed));
            for s in 0..3 {
                for h in 0..12 {
                    if r.medoids.contains(&h) {
                        continue;
                    }
                    let mut swapped = r.medoids.clone();
                    swapped[s] = h;
                    let cost: f64 = (0..12)
                        .map(|i| {
                            swapped
                                .iter()
                                .map(|&m| d.values[[i, m]])
                                .fold(f64::INFINITY, f64::min)
                        })
                        .sum();
                    assert!(
                        cost >= r.cost - 1e-12,
                        "swap ({s},{h}) improves on the returned configuration"
                    );
                }
            }
        }
    }

    #[test]
    fn hits_global_optimum_on_small_instances() {
        let mut hits = 0;
        let total = 40;
        for trial in 0..total {
            let n = 7 + (trial % 3) as usize;
            let n_cl = 2 + (trial % 2) as usize;
            let d = random_dist(n, 1000 + trial);
            let cfg = PamConfig {
                n_cl,
                restarts: 20,
                rng_seed: 5000 + trial,
            };
            let r = kmedoids(&d, &cfg);
            let (_, oracle_cost) = brute_force(&d, n_cl);
            if (r.cost - oracle_cost).abs() <= 1e-12 {
                hits += 1;
            }
        }
        assert!(
            hits * 100 >= total * 95,
            "global optimum hit in {hits}/{total} runs"
        );
    }

    #[test]
    fn deterministic_for_fixed_config() {
        let d = random_dist(15, 77);
        let cfg = PamConfig::new(4, 123);
        let a = kmedoids(&d, &cfg);
        let b = kmedoids(&d, &cfg);
        assert_eq!(a.medoids, b.medoids);
        assert_eq!(a.cost, b.cost);
        assert_eq!(a.partition.labels(), b.partition.labels());
    }

    #[test]
    fn equidistant_points_attach_to_lower_medoid() {
        // Point 2 sits exactly between medoid candidates 0 and 1.
        let d = dist_from(4, &[(0, 1, 2.0), (0, 2, 1.0), (1, 2, 1.0), (0, 3, 2.5), (1, 3, 2.6), (2, 3, 2.7)]);
        // Force the two-cluster solution with medoids {0, 1}: point 2 is
        // equidistant and must land with medoid 0.
        let r = kmedoids(&d, &PamConfig::new(2, 9));
        if r.medoids == vec![0, 1] {
            let labels = r.partition.labels();
            assert_eq!(labels[2], labels[0]);
        }
        // Direct check on the assignment path regardless of PAM's choice.
        let a = assign(&d, &[0, 1]);
        assert_eq!(a.slot[2], 0);
    }

    #[test]
    #[should_panic(expected = "n_cl")]
    fn zero_clusters_rejected() {
        let d = random_dist(5, 1);
        kmedoids(
            &d,
            &PamConfig {
                n_cl: 0,
                restarts: 1,
                rng_seed: 0,
            },
        );
    }

    #[test]
    #[should_panic(expected = "restarts")]
    fn zero_restarts_rejected() {
        let d = random_dist(5, 1);
        kmedoids(
            &d,
            &PamConfig {
                n_cl: 2,
                restarts: 0,
                rng_seed: 0,
            },
        );
    }
}
