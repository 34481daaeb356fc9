//! Rolling-window orchestration and bootstrap robustness analysis.
//!
//! A window spec tiles the panel into overlapping index ranges; each
//! window runs the full pipeline (optional market-mode detrending,
//! weighted Pearson, distance, one or more clustering methods) and
//! yields one record. Parameterized methods sweep every cluster count
//! and report the sweep's best agreement with the sector taxonomy; the
//! directed-bubble method reports its emergent cluster count instead.
//!
//! Bootstrap replicas resample time columns with replacement and rerun
//! the unweighted pipeline; exponential smoothing is deliberately not
//! applied there, since resampling destroys the time ordering the
//! weights encode. Windows and replicas are independent jobs; results
//! are gathered in index order, so parallel runs are bit-identical to
//! sequential ones.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::correlation::{
    mean_offdiagonal, pearson, to_distance, CorrelationError, CorrelationMatrix, DistanceMatrix,
    WeightScheme,
};
use crate::dbht::{dbht, DbhtError};
use crate::ingest::{detrend_market_mode, IngestError, ReturnsPanel, Taxonomy};
use crate::kmedoids::{kmedoids, PamConfig};
use crate::linkage::{cut, linkage, LinkageError, LinkageRule, Partition};
use crate::metrics::{adjusted_rand, disparity, MetricsError};

/// Cluster-count sweeps stop here; exhaustive enumeration stays cheap
/// up to the target panel scale.
pub const SWEEP_CAP: usize = 342;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("window length {length} exceeds panel length {total}")]
    WindowTooLong { length: usize, total: usize },
    #[error("invalid window spec: {0}")]
    InvalidWindowSpec(String),
    #[error("bootstrap replicas stayed degenerate after {redraws} redraws")]
    DegenerateReplica { redraws: usize },
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Dbht(#[from] DbhtError),
    #[error(transparent)]
    Linkage(#[from] LinkageError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Rolling-window geometry and correlation smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowSpec {
    /// Window length in observations.
    pub length: usize,
    /// Start-to-start shift in observations.
    pub shift: usize,
    pub smoothing: WeightScheme,
}

impl WindowSpec {
    /// Exponentially smoothed windows with the standard decay of a third
    /// of the window length.
    pub fn new(length: usize, shift: usize) -> Self {
        WindowSpec {
            length,
            shift,
            smoothing: WeightScheme::Exponential {
                theta: length as f64 / 3.0,
            },
        }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        if self.shift < 1 || self.shift > self.length {
            return Err(DynamicsError::InvalidWindowSpec(format!(
                "shift {} must lie in 1..=length {}",
                self.shift, self.length
            )));
        }
        Ok(())
    }
}

/// Half-open index ranges `[s, s + L)` for `s = 0, shift, 2 shift, ...`
/// while the window still fits.
pub fn make_windows(
    t_total: usize,
    spec: &WindowSpec,
) -> Result<Vec<std::ops::Range<usize>>, DynamicsError> {
    spec.validate()?;
    if spec.length > t_total {
        return Err(DynamicsError::WindowTooLong {
            length: spec.length,
            total: t_total,
        });
    }
    let mut windows = Vec::new();
    let mut s = 0;
    while s + spec.length <= t_total {
        windows.push(s..s + spec.length);
        s += spec.shift;
    }
    Ok(windows)
}

/// Clustering methods the rolling driver can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    Dbht,
    SingleLinkage,
    AverageLinkage,
    CompleteLinkage,
    Kmedoids,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Dbht,
        Method::SingleLinkage,
        Method::AverageLinkage,
        Method::CompleteLinkage,
        Method::Kmedoids,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Dbht => "dbht",
            Method::SingleLinkage => "single",
            Method::AverageLinkage => "average",
            Method::CompleteLinkage => "complete",
            Method::Kmedoids => "kmedoids",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dbht" => Ok(Method::Dbht),
            "single" => Ok(Method::SingleLinkage),
            "average" => Ok(Method::AverageLinkage),
            "complete" => Ok(Method::CompleteLinkage),
            "kmedoids" => Ok(Method::Kmedoids),
            other => Err(format!(
                "unknown method '{other}' (expected dbht, single, average, complete or kmedoids)"
            )),
        }
    }
}

/// Whether each window clusters raw returns, detrended returns, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DetrendMode {
    Raw,
    Detrended,
    Both,
}

impl std::str::FromStr for DetrendMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(DetrendMode::Raw),
            "detrended" => Ok(DetrendMode::Detrended),
            "both" => Ok(DetrendMode::Both),
            other => Err(format!(
                "unknown detrend mode '{other}' (expected raw, detrended or both)"
            )),
        }
    }
}

/// One method's result on one window variant.
#[derive(Debug, Clone, Serialize)]
pub struct MethodRecord {
    pub method: Method,
    /// True when the window was market-mode detrended first.
    pub detrended: bool,
    /// Emergent cluster count for the directed-bubble method, the
    /// agreement-maximizing count for parameterized methods.
    pub n_cl: usize,
    /// Cluster count that maximized taxonomy agreement (equals `n_cl`).
    pub argmax_n_cl: usize,
    /// Adjusted Rand agreement with the sector taxonomy at `n_cl`.
    pub ari_vs_taxonomy: f64,
    /// Size disparity of the reported partition; absent for a single
    /// cluster.
    pub disparity: Option<f64>,
    /// Reported partition labels, one per ticker.
    pub labels: Vec<usize>,
}

/// Agreement between the raw and detrended partitions of one method.
#[derive(Debug, Clone, Serialize)]
pub struct CrossAri {
    pub method: Method,
    pub ari: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowRecord {
    pub window: usize,
    pub start: usize,
    pub end: usize,
    pub end_date: NaiveDate,
    /// Mean off-diagonal correlation of the raw window.
    pub mean_correlation: f64,
    /// Mean off-diagonal correlation after detrending, when it ran.
    pub mean_correlation_detrended: Option<f64>,
    pub methods: Vec<MethodRecord>,
    /// Raw-vs-detrended agreement per method, when both variants ran.
    pub cross_ari: Vec<CrossAri>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowSeries {
    pub spec: WindowSpec,
    pub detrend: DetrendMode,
    pub methods: Vec<Method>,
    pub records: Vec<WindowRecord>,
}

impl WindowSeries {
    /// One row per window: index, end date and mean correlations.
    pub fn write_window_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["window", "end_date", "mean_correlation", "mean_correlation_detrended"])?;
        for r in &self.records {
            w.write_record([
                r.window.to_string(),
                r.end_date.format("%Y-%m-%d").to_string(),
                format!("{:.12}", r.mean_correlation),
                r.mean_correlation_detrended
                    .map(|v| format!("{v:.12}"))
                    .unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per (window, method, variant).
    pub fn write_method_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "window",
            "method",
            "detrended",
            "n_cl",
            "argmax_n_cl",
            "ari_vs_taxonomy",
            "disparity",
        ])?;
        for r in &self.records {
            for m in &r.methods {
                w.write_record([
                    r.window.to_string(),
                    m.method.to_string(),
                    m.detrended.to_string(),
                    m.n_cl.to_string(),
                    m.argmax_n_cl.to_string(),
                    format!("{:.12}", m.ari_vs_taxonomy),
                    m.disparity.map(|v| format!("{v:.12}")).unwrap_or_default(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One row per (window, method) raw-vs-detrended agreement.
    pub fn write_cross_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["window", "method", "cross_ari"])?;
        for r in &self.records {
            for c in &r.cross_ari {
                w.write_record([
                    r.window.to_string(),
                    c.method.to_string(),
                    format!("{:.12}", c.ari),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn sweep_bound(n: usize) -> usize {
    n.min(SWEEP_CAP)
}

fn run_method(
    method: Method,
    corr: &CorrelationMatrix,
    dist: &DistanceMatrix,
    tax_part: &Partition,
    seed: u64,
) -> Result<(MethodRecord, Partition), DynamicsError> {
    let n = dist.n();
    let (best_part, best_ari, best_k) = match method {
        Method::Dbht => {
            let r = dbht(dist, corr)?;
            let ari = adjusted_rand(&r.partition, tax_part)?;
            (r.partition, ari, r.n_cl)
        }
        Method::SingleLinkage | Method::AverageLinkage | Method::CompleteLinkage => {
            let rule = match method {
                Method::SingleLinkage => LinkageRule::Single,
                Method::AverageLinkage => LinkageRule::Average,
                _ => LinkageRule::Complete,
            };
            let dendro = linkage(dist, rule)?;
            let mut best: Option<(Partition, f64, usize)> = None;
            for k in 2..=sweep_bound(n) {
                let part = cut(&dendro, k)?;
                let ari = adjusted_rand(&part, tax_part)?;
                if best.as_ref().map_or(true, |(_, ba, _)| ari > *ba) {
                    best = Some((part, ari, k));
                }
            }
            best.expect("sweep covers at least one cluster count")
        }
        Method::Kmedoids => {
            let mut best: Option<(Partition, f64, usize)> = None;
            for k in 2..=sweep_bound(n) {
                let r = kmedoids(dist, &PamConfig::new(k, seed));
                let ari = adjusted_rand(&r.partition, tax_part)?;
                if best.as_ref().map_or(true, |(_, ba, _)| ari > *ba) {
                    best = Some((r.partition, ari, k));
                }
            }
            best.expect("sweep covers at least one cluster count")
        }
    };

    let record = MethodRecord {
        method,
        detrended: false,
        n_cl: best_part.n_clusters(),
        argmax_n_cl: best_k,
        ari_vs_taxonomy: best_ari,
        disparity: disparity(&best_part).ok(),
        labels: best_part.labels().to_vec(),
    };
    Ok((record, best_part))
}

/// Runs the pipeline over every window.
///
/// Per window: slice the panel, optionally detrend, estimate the
/// smoothed correlation and distance, then run every requested method.
/// `rng_seed` feeds the k-medoids restarts; window `w` on the raw and
/// detrended variants uses sub-seeds `2 w` and `2 w + 1` past it.
pub fn rolling_analysis(
    panel: &ReturnsPanel,
    tax: &Taxonomy,
    spec: &WindowSpec,
    methods: &[Method],
    detrend: DetrendMode,
    rng_seed: u64,
) -> Result<WindowSeries, DynamicsError> {
    assert!(!methods.is_empty(), "at least one method");
    let windows = make_windows(panel.n_obs(), spec)?;
    let tax_part = tax.supersector_partition(&panel.tickers)?;

    let records: Result<Vec<WindowRecord>, DynamicsError> = windows
        .par_iter()
        .enumerate()
        .map(|(w, range)| {
            let sub = panel.window(range.start, range.end);
            let raw_corr = pearson(&sub, spec.smoothing)?;
            let mean_correlation = mean_offdiagonal(&raw_corr);

            let mut mean_correlation_detrended = None;
            let mut methods_out = Vec::new();
            let mut raw_parts: Vec<(Method, Partition)> = Vec::new();
            let mut det_parts: Vec<(Method, Partition)> = Vec::new();

            if detrend != DetrendMode::Detrended {
                let dist = to_distance(&raw_corr)?;
                for &m in methods {
                    let seed = rng_seed.wrapping_add(2 * w as u64);
                    let (rec, part) = run_method(m, &raw_corr, &dist, &tax_part, seed)?;
                    methods_out.push(rec);
                    raw_parts.push((m, part));
                }
            }
            if detrend != DetrendMode::Raw {
                let (residual, _) = detrend_market_mode(&sub)?;
                let det_corr = pearson(&residual, spec.smoothing)?;
                mean_correlation_detrended = Some(mean_offdiagonal(&det_corr));
                let dist = to_distance(&det_corr)?;
                for &m in methods {
                    let seed = rng_seed.wrapping_add(2 * w as u64 + 1);
                    let (mut rec, part) = run_method(m, &det_corr, &dist, &tax_part, seed)?;
                    rec.detrended = true;
                    methods_out.push(rec);
                    det_parts.push((m, part));
                }
            }

            let mut cross_ari = Vec::new();
            for (m, rp) in &raw_parts {
                if let Some((_, dp)) = det_parts.iter().find(|(dm, _)| dm == m) {
                    cross_ari.push(CrossAri {
                        method: *m,
                        ari: adjusted_rand(rp, dp)?,
                    });
                }
            }

            Ok(WindowRecord {
                window: w,
                start: range.start,
                end: range.end,
                end_date: sub.dates[sub.n_obs() - 1],
                mean_correlation,
                mean_correlation_detrended,
                methods: methods_out,
                cross_ari,
            })
        })
        .collect();

    Ok(WindowSeries {
        spec: *spec,
        detrend,
        methods: methods.to_vec(),
        records: records?,
    })
}

/// How bootstrap replicas are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BootstrapMode {
    /// Resample time columns with replacement (the correlation
    /// bootstrap; default).
    ResampleTime,
    /// Resample ticker rows with replacement; kept for comparison, it
    /// replaces the cross-sectional structure under study.
    ResampleRows,
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapResult {
    pub mean_n_cl: f64,
    /// Sample standard deviation of the replica cluster counts.
    pub std_n_cl: f64,
    pub replicas: Vec<usize>,
    /// Degenerate replicas that were redrawn.
    pub redraws: usize,
}

/// Per-replica redraw budget before giving up on a degenerate panel.
const MAX_REDRAWS: usize = 64;

fn replica_indices(rng: &mut ChaCha20Rng, count: usize, upper: usize) -> Vec<usize> {
    (0..count).map(|_| rng.gen_range(0..upper)).collect()
}

fn has_constant_row(returns: &ndarray::Array2<f64>) -> bool {
    returns.rows().into_iter().any(|row| {
        let first = row[0];
        row.iter().all(|&x| x == first)
    })
}

/// Resamples the window `n_boot` times, reruns the unweighted pipeline
/// per replica and collects the emergent cluster counts.
///
/// Replica `r` draws from its own stream derived from `rng_seed`, so the
/// replica list is deterministic and independent of scheduling. A
/// replica with any constant series is redrawn from the same stream.
pub fn bootstrap_nclusters(
    window: &ReturnsPanel,
    n_boot: usize,
    rng_seed: u64,
    mode: BootstrapMode,
) -> Result<BootstrapResult, DynamicsError> {
    assert!(n_boot >= 2, "need at least two replicas");
    let n = window.n_assets();
    let t_obs = window.n_obs();

    let outcomes: Result<Vec<(usize, usize)>, DynamicsError> = (0..n_boot)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha20Rng::seed_from_u64(
                rng_seed ^ (r as u64).wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1),
            );
            let mut redraws = 0usize;
            loop {
                let mut returns = ndarray::Array2::<f64>::zeros((n, t_obs));
                match mode {
                    BootstrapMode::ResampleTime => {
                        let cols = replica_indices(&mut rng, t_obs, t_obs);
                        for (t, &c) in cols.iter().enumerate() {
                            for i in 0..n {
                                returns[[i, t]] = window.returns[[i, c]];
                            }
                        }
                    }
                    BootstrapMode::ResampleRows => {
                        let rows = replica_indices(&mut rng, n, n);
                        for (i, &src) in rows.iter().enumerate() {
                            for t in 0..t_obs {
                                returns[[i, t]] = window.returns[[src, t]];
                            }
                        }
                    }
                }
                if has_constant_row(&returns) {
                    redraws += 1;
                    if redraws > MAX_REDRAWS {
                        return Err(DynamicsError::DegenerateReplica { redraws });
                    }
                    continue;
                }
                let replica = ReturnsPanel {
                    tickers: window.tickers.clone(),
                    dates: window.dates.clone(),
                    returns,
                };
                let corr = pearson(&replica, WeightScheme::Uniform)?;
                let dist = to_distance(&corr)?;
                let result = dbht(&dist, &corr)?;
                return Ok((result.n_cl, redraws));
            }
        })
        .collect();

    let outcomes = outcomes?;
    let replicas: Vec<usize> = outcomes.iter().map(|(k, _)| *k).collect();
    let redraws = outcomes.iter().map(|(_, r)| *r).sum();
    let mean = replicas.iter().sum::<usize>() as f64 / n_boot as f64;
    let var = replicas
        .iter()
        .map(|&k| {
            let d = k as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / (n_boot - 1) as f64;
    Ok(BootstrapResult {
        mean_n_cl: mean,
        std_n_cl: var.sqrt(),
        replicas,
        redraws,
    })
}
