//! Whole-panel analysis: filtered graph and bubble structure, cluster
//! composition, and agreement / disparity / overexpression curves over
//! the cluster-count sweep.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;

use corrfilter::correlation::{mean_offdiagonal, pearson, to_distance, WeightScheme};
use corrfilter::dbht::{dbht, BubbleKind, DbhtResult};
use corrfilter::dynamics::{
    CrossAri, DetrendMode, Method, MethodRecord, WindowRecord, WindowSeries, WindowSpec, SWEEP_CAP,
};
use corrfilter::ingest::{detrend_market_mode, load_taxonomy, ReturnsPanel, Taxonomy};
use corrfilter::kmedoids::{kmedoids, PamConfig};
use corrfilter::linkage::{cut, linkage, LinkageRule, Partition};
use corrfilter::metrics::{adjusted_rand, disparity, overexpression_scan_with, ScanConfig};

use crate::common::{
    load_returns, parse_detrend, parse_layout, parse_methods, parse_scan_config, parse_smoothing,
    path_or_default, scheme_label, Manifest, OutputSet,
};
use crate::config::{resolve, Config};
use crate::error::CliError;

#[derive(Args)]
pub struct StaticArgs {
    /// Price CSV.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Price CSV layout: wide or long.
    #[arg(long)]
    layout: Option<String>,
    /// Sector taxonomy CSV (ticker,supersector,industry).
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file supplying defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated subset of dbht,single,average,complete,kmedoids, or "all".
    #[arg(long)]
    methods: Option<String>,
    /// raw, detrended or both.
    #[arg(long)]
    detrend: Option<String>,
    /// Fixed cluster count instead of the full sweep.
    #[arg(long)]
    n_cl: Option<usize>,
    /// Correlation smoothing: uniform or exponential.
    #[arg(long)]
    smoothing: Option<String>,
    /// Exponential decay length; defaults to a third of the panel.
    #[arg(long)]
    theta: Option<f64>,
    /// Seed for k-medoids restarts.
    #[arg(long)]
    seed: Option<u64>,
    /// Overexpression significance level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Bonferroni divisor: half or full.
    #[arg(long)]
    bonferroni: Option<String>,
    /// Overexpression statistic: upper or point.
    #[arg(long)]
    tail: Option<String>,
}

struct CurvePoint {
    method: Method,
    detrended: bool,
    n_cl: usize,
    ari: f64,
    disparity: Option<f64>,
    rejections: usize,
    normalized_rejections: f64,
}

struct VariantResult {
    detrended: bool,
    mean_correlation: f64,
    records: Vec<MethodRecord>,
    parts: Vec<(Method, Partition)>,
    curves: Vec<CurvePoint>,
    full: DbhtResult,
    corr: corrfilter::correlation::CorrelationMatrix,
}

/// Runs every requested method on one (possibly detrended) panel.
///
/// Sweep mode enumerates cluster counts and keeps the
/// agreement-maximizing one per method (smallest count on ties); a
/// fixed count replaces the sweep for every method except the
/// directed-bubble one, which always reports its emergent count.
#[allow(clippy::too_many_arguments)]
fn analyze_variant(
    panel: &ReturnsPanel,
    scheme: WeightScheme,
    methods: &[Method],
    tax: &Taxonomy,
    tax_part: &Partition,
    detrended: bool,
    seed: u64,
    alpha: f64,
    scan: ScanConfig,
    fixed: Option<usize>,
) -> Result<VariantResult, CliError> {
    let corr = pearson(panel, scheme)?;
    let dist = to_distance(&corr)?;
    let full = dbht(&dist, &corr)?;
    let n = panel.n_assets();
    let cap = n.min(SWEEP_CAP);

    let mut records = Vec::new();
    let mut parts = Vec::new();
    let mut curves = Vec::new();

    for &method in methods {
        let ks: Vec<usize> = match (method, fixed) {
            (Method::Dbht, _) => vec![full.n_cl],
            (_, Some(k)) => vec![k],
            (_, None) => (2..=cap).collect(),
        };

        let mut best: Option<(Partition, f64, usize)> = None;
        let kmed_dendro;
        let dendro = match method {
            Method::Dbht => Some(&full.dendrogram),
            Method::SingleLinkage => {
                kmed_dendro = linkage(&dist, LinkageRule::Single)?;
                Some(&kmed_dendro)
            }
            Method::AverageLinkage => {
                kmed_dendro = linkage(&dist, LinkageRule::Average)?;
                Some(&kmed_dendro)
            }
            Method::CompleteLinkage => {
                kmed_dendro = linkage(&dist, LinkageRule::Complete)?;
                Some(&kmed_dendro)
            }
            Method::Kmedoids => None,
        };

        for &k in &ks {
            let part = match dendro {
                Some(d) => cut(d, k)?,
                None => kmedoids(&dist, &PamConfig::new(k, seed)).partition,
            };
            let ari = adjusted_rand(&part, tax_part)?;
            let report =
                overexpression_scan_with(&part, tax, &panel.tickers, alpha, scan);
            curves.push(CurvePoint {
                method,
                detrended,
                n_cl: k,
                ari,
                disparity: disparity(&part).ok(),
                rejections: report.rejections,
                normalized_rejections: report.normalized_rejections,
            });
            if best.as_ref().map_or(true, |(_, ba, _)| ari > *ba) {
                best = Some((part, ari, k));
            }
        }

        let (part, ari, k) = best.expect("at least one cluster count per method");
        records.push(MethodRecord {
            method,
            detrended,
            n_cl: part.n_clusters(),
            argmax_n_cl: k,
            ari_vs_taxonomy: ari,
            disparity: disparity(&part).ok(),
            labels: part.labels().to_vec(),
        });
        parts.push((method, part));
    }

    Ok(VariantResult {
        detrended,
        mean_correlation: mean_offdiagonal(&corr),
        records,
        parts,
        curves,
        full,
        corr,
    })
}

fn kind_label(kind: BubbleKind) -> &'static str {
    match kind {
        BubbleKind::Converging => "converging",
        BubbleKind::Diverging => "diverging",
        BubbleKind::Passage => "passage",
    }
}

/// PMFG edge table with the correlation and distance each edge carries.
fn pmfg_csv(v: &VariantResult, tickers: &[String]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["i", "j", "ticker_i", "ticker_j", "correlation", "distance"])?;
    for (i, j) in v.full.graph.pairs() {
        let rho = v.corr.values[[i, j]];
        w.write_record([
            i.to_string(),
            j.to_string(),
            tickers[i].clone(),
            tickers[j].clone(),
            format!("{rho:.12}"),
            format!("{:.12}", (2.0 * (1.0 - rho)).sqrt()),
        ])?;
    }
    w.flush()?;
    Ok(w.into_inner().expect("vec writer"))
}

fn bubbles_csv(full: &DbhtResult, tickers: &[String]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bubble", "kind", "n_vertices", "vertices"])?;
    for (b, bubble) in full.directed.tree.bubbles.iter().enumerate() {
        let mut vs = bubble.vertices.clone();
        vs.sort_unstable();
        let names: Vec<&str> = vs.iter().map(|&v| tickers[v].as_str()).collect();
        w.write_record([
            b.to_string(),
            kind_label(full.directed.kinds[b]).to_string(),
            vs.len().to_string(),
            names.join(" "),
        ])?;
    }
    w.flush()?;
    Ok(w.into_inner().expect("vec writer"))
}

fn bubble_edges_csv(full: &DbhtResult, tickers: &[String]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["from", "to", "clique", "strength"])?;
    for e in &full.directed.edges {
        let clique: Vec<&str> = e.clique.iter().map(|&v| tickers[v].as_str()).collect();
        w.write_record([
            e.from.to_string(),
            e.to.to_string(),
            clique.join(" "),
            format!("{:.12}", e.strength),
        ])?;
    }
    w.flush()?;
    Ok(w.into_inner().expect("vec writer"))
}

fn composition_csv(
    labels: &[usize],
    n_cl: usize,
    tickers: &[String],
    tax: &Taxonomy,
    sectors: &[String],
) -> Result<Vec<u8>, CliError> {
    let mut counts = vec![vec![0usize; sectors.len()]; n_cl];
    for (t, &label) in tickers.iter().zip(labels) {
        let sector = tax.get(t).expect("ticker classified").0;
        let s = sectors.iter().position(|x| x == sector).expect("sector listed");
        counts[label][s] += 1;
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["cluster".to_string()];
    header.extend(sectors.iter().cloned());
    w.write_record(&header)?;
    for (c, row) in counts.iter().enumerate() {
        let mut rec = vec![c.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(w.into_inner().expect("vec writer"))
}

pub fn run(args: StaticArgs) -> Result<(), CliError> {
    let mut cfg = Config::load(args.config.as_deref())?;
    let prices = path_or_default(resolve(args.prices, &mut cfg, "prices")?, "--prices is required")?;
    let layout = parse_layout(
        resolve(args.layout, &mut cfg, "layout")?.as_deref().unwrap_or("wide"),
    )?;
    let taxonomy_path = path_or_default(
        resolve(args.taxonomy, &mut cfg, "taxonomy")?,
        "--taxonomy is required",
    )?;
    let out = path_or_default(resolve(args.out, &mut cfg, "out")?, "--out is required")?;
    let methods = parse_methods(
        resolve(args.methods, &mut cfg, "methods")?.as_deref().unwrap_or("all"),
    )?;
    let detrend = parse_detrend(
        resolve(args.detrend, &mut cfg, "detrend")?.as_deref().unwrap_or("raw"),
    )?;
    let fixed = resolve(args.n_cl, &mut cfg, "n-cl")?;
    let smoothing_kind = resolve(args.smoothing, &mut cfg, "smoothing")?;
    let theta = resolve(args.theta, &mut cfg, "theta")?;
    let seed = resolve(args.seed, &mut cfg, "seed")?.unwrap_or(0);
    let alpha = resolve(args.alpha, &mut cfg, "alpha")?.unwrap_or(0.01);
    let scan = parse_scan_config(
        resolve(args.bonferroni, &mut cfg, "bonferroni")?.as_deref(),
        resolve(args.tail, &mut cfg, "tail")?.as_deref(),
    )?;
    cfg.finish()?;

    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::usage(format!("alpha must lie in (0, 1), got {alpha}")));
    }

    let panel = load_returns(&prices, layout)?;
    let tax = load_taxonomy(&taxonomy_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", taxonomy_path.display())))?;
    tax.validate_against(&panel.tickers)?;
    let tax_part = tax.supersector_partition(&panel.tickers)?;

    let n = panel.n_assets();
    if let Some(k) = fixed {
        if k < 1 || k > n {
            return Err(CliError::usage(format!(
                "--n-cl must lie in 1..={n}, got {k}"
            )));
        }
        if methods.contains(&Method::Dbht) {
            eprintln!(
                "warning: dbht chooses its cluster count automatically; --n-cl does not apply to it"
            );
        }
    }

    let t_obs = panel.n_obs();
    let scheme = parse_smoothing(smoothing_kind.as_deref(), theta, t_obs as f64 / 3.0)?;

    let mut variants = Vec::new();
    if detrend != DetrendMode::Detrended {
        variants.push(analyze_variant(
            &panel, scheme, &methods, &tax, &tax_part, false, seed, alpha, scan, fixed,
        )?);
    }
    if detrend != DetrendMode::Raw {
        let (residual, _) = detrend_market_mode(&panel)?;
        variants.push(analyze_variant(
            &residual,
            scheme,
            &methods,
            &tax,
            &tax_part,
            true,
            seed.wrapping_add(1),
            alpha,
            scan,
            fixed,
        )?);
    }

    // Reassemble the window-series shape so static tables match a
    // one-window rolling run column for column.
    let mut all_records = Vec::new();
    for v in &variants {
        all_records.extend(v.records.iter().cloned());
    }
    let mut cross_ari = Vec::new();
    if detrend == DetrendMode::Both {
        let raw = &variants[0];
        let det = &variants[1];
        for (m, rp) in &raw.parts {
            if let Some((_, dp)) = det.parts.iter().find(|(dm, _)| dm == m) {
                cross_ari.push(CrossAri {
                    method: *m,
                    ari: adjusted_rand(rp, dp)?,
                });
            }
        }
    }
    let series = WindowSeries {
        spec: WindowSpec { length: t_obs, shift: t_obs, smoothing: scheme },
        detrend,
        methods: methods.clone(),
        records: vec![WindowRecord {
            window: 0,
            start: 0,
            end: t_obs,
            end_date: *panel.dates.last().expect("nonempty panel"),
            mean_correlation: variants
                .iter()
                .find(|v| !v.detrended)
                .map(|v| v.mean_correlation)
                .unwrap_or(f64::NAN),
            mean_correlation_detrended: variants
                .iter()
                .find(|v| v.detrended)
                .map(|v| v.mean_correlation),
            methods: all_records,
            cross_ari,
        }],
    };

    let sectors: Vec<String> = panel
        .tickers
        .iter()
        .map(|t| tax.get(t).expect("ticker classified").0.to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut outputs = OutputSet::new();
    let mut buf = Vec::new();
    series.write_window_csv(&mut buf)?;
    outputs.add("windows.csv", buf);
    let mut buf = Vec::new();
    series.write_method_csv(&mut buf)?;
    outputs.add("methods.csv", buf);
    if detrend == DetrendMode::Both {
        let mut buf = Vec::new();
        series.write_cross_csv(&mut buf)?;
        outputs.add("cross_ari.csv", buf);
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "detrended", "ticker", "label"])?;
    for v in &variants {
        for rec in &v.records {
            for (t, &label) in panel.tickers.iter().zip(&rec.labels) {
                w.write_record([
                    rec.method.to_string(),
                    rec.detrended.to_string(),
                    t.clone(),
                    label.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    outputs.add("labels.csv", w.into_inner().expect("vec writer"));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "detrended", "n_cl", "ari"])?;
    for v in &variants {
        for p in &v.curves {
            w.write_record([
                p.method.to_string(),
                p.detrended.to_string(),
                p.n_cl.to_string(),
                format!("{:.12}", p.ari),
            ])?;
        }
    }
    w.flush()?;
    outputs.add("ari_vs_ncl.csv", w.into_inner().expect("vec writer"));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "detrended", "n_cl", "disparity"])?;
    for v in &variants {
        for p in &v.curves {
            w.write_record([
                p.method.to_string(),
                p.detrended.to_string(),
                p.n_cl.to_string(),
                p.disparity.map(|d| format!("{d:.12}")).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    outputs.add("disparity_vs_ncl.csv", w.into_inner().expect("vec writer"));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method",
        "detrended",
        "n_cl",
        "rejections",
        "normalized_rejections",
    ])?;
    for v in &variants {
        for p in &v.curves {
            w.write_record([
                p.method.to_string(),
                p.detrended.to_string(),
                p.n_cl.to_string(),
                p.rejections.to_string(),
                format!("{:.12}", p.normalized_rejections),
            ])?;
        }
    }
    w.flush()?;
    outputs.add("overexpression_vs_ncl.csv", w.into_inner().expect("vec writer"));

    for v in &variants {
        let suffix = if v.detrended { "_detrended" } else { "" };
        outputs.add(format!("pmfg_edges{suffix}.csv"), pmfg_csv(v, &panel.tickers)?);
        outputs.add(format!("bubbles{suffix}.csv"), bubbles_csv(&v.full, &panel.tickers)?);
        outputs.add(
            format!("bubble_edges{suffix}.csv"),
            bubble_edges_csv(&v.full, &panel.tickers)?,
        );
        for rec in &v.records {
            outputs.add(
                format!("composition_{}{suffix}.csv", rec.method),
                composition_csv(&rec.labels, rec.n_cl, &panel.tickers, &tax, &sectors)?,
            );
        }
    }

    let mut manifest = Manifest::new("static");
    manifest.input("prices", &prices);
    manifest.input("taxonomy", &taxonomy_path);
    manifest.flag("layout", if matches!(layout, corrfilter::ingest::CsvLayout::Wide) { "wide" } else { "long" });
    manifest.flag(
        "methods",
        methods.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","),
    );
    manifest.flag("detrend", format!("{detrend:?}").to_lowercase());
    manifest.flag("n_cl", fixed.map(|k| k.to_string()).unwrap_or_else(|| "sweep".into()));
    manifest.flag("smoothing", scheme_label(scheme));
    manifest.flag("seed", seed);
    manifest.flag("alpha", alpha);
    manifest.flag("bonferroni", format!("{:?}", scan.family).to_lowercase());
    manifest.flag("tail", format!("{:?}", scan.tail).to_lowercase());
    manifest.outputs = outputs.names();
    outputs.flush(&out, &manifest)
}
