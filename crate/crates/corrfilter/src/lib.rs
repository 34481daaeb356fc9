//! Correlation-based filtered graphs and clustering for multivariate return
//! panels.
//!
//! The crate turns a panel of asset prices into progressively richer
//! structures:
//!
//! 1. [`ingest`]: price loading, log-returns, market-mode detrending and
//!    sector taxonomies.
//! 2. [`correlation`]: weighted Pearson correlation matrices and the
//!    associated metric distance `D = sqrt(2 (1 - rho))`.
//! 3. [`filtergraph`]: minimum spanning trees, planar maximally filtered
//!    graphs (PMFG) and their bubble decomposition.
//! 4. [`linkage`], [`dbht`], [`kmedoids`]: hierarchical (single, average,
//!    complete, DBHT) and partitional (k-medoids) clustering.
//! 5. [`metrics`]: cluster size disparity, adjusted Rand index and
//!    hypergeometric over-expression tests against a reference taxonomy.
//! 6. [`dynamics`]: rolling-window and bootstrap analyses.
//! 7. [`synth`]: synthetic factor-model panels for testing and calibration.
//!
//! All operations are deterministic: randomized algorithms take explicit
//! seeds, and parallel code paths produce bit-identical results to their
//! sequential counterparts.

pub mod correlation;
pub mod dbht;
pub mod dynamics;
pub mod filtergraph;
pub mod ingest;
pub mod kmedoids;
pub mod linkage;
pub mod metrics;
pub mod synth;

pub use correlation::{CorrelationMatrix, DistanceMatrix, WeightScheme};
pub use dbht::DbhtResult;
pub use filtergraph::{BubbleTree, EdgeList, PlanarGraph, SpanningTree};
pub use ingest::{PricePanel, ReturnsPanel, Taxonomy};
pub use linkage::{Dendrogram, LinkageRule, Partition};
