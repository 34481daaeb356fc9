//! Bootstrap robustness of the emergent cluster count, per window.

use std::path::PathBuf;

use clap::Args;

use corrfilter::correlation::{pearson, to_distance};
use corrfilter::dbht::dbht;
use corrfilter::dynamics::{bootstrap_nclusters, make_windows, BootstrapMode, WindowSpec};

use crate::common::{
    load_returns, parse_layout, parse_smoothing, path_or_default, scheme_label, Manifest, OutputSet,
};
use crate::config::{resolve, Config};
use crate::error::CliError;

#[derive(Args)]
pub struct BootstrapArgs {
    /// Price CSV.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Price CSV layout: wide or long.
    #[arg(long)]
    layout: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file supplying defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Window length in observations; omitted = one whole-panel window.
    #[arg(long)]
    length: Option<usize>,
    /// Start-to-start shift; defaults to the window length.
    #[arg(long)]
    shift: Option<usize>,
    /// Replicas per window.
    #[arg(long)]
    n_boot: Option<usize>,
    /// Base seed; window w draws from seed + w.
    #[arg(long)]
    seed: Option<u64>,
    /// Resampling axis: time or rows.
    #[arg(long)]
    mode: Option<String>,
    /// Smoothing for the empirical estimate: uniform or exponential.
    /// Replicas always use the unweighted estimator.
    #[arg(long)]
    smoothing: Option<String>,
    /// Exponential decay length for the empirical estimate.
    #[arg(long)]
    theta: Option<f64>,
    /// Analyze only the first N windows.
    #[arg(long)]
    max_windows: Option<usize>,
}

pub fn run(args: BootstrapArgs) -> Result<(), CliError> {
    let mut cfg = Config::load(args.config.as_deref())?;
    let prices = path_or_default(resolve(args.prices, &mut cfg, "prices")?, "--prices is required")?;
    let layout = parse_layout(
        resolve(args.layout, &mut cfg, "layout")?.as_deref().unwrap_or("wide"),
    )?;
    let out = path_or_default(resolve(args.out, &mut cfg, "out")?, "--out is required")?;
    let length = resolve(args.length, &mut cfg, "length")?;
    let shift = resolve(args.shift, &mut cfg, "shift")?;
    let n_boot = resolve(args.n_boot, &mut cfg, "n-boot")?.unwrap_or(100);
    let seed = resolve(args.seed, &mut cfg, "seed")?.unwrap_or(0);
    let mode = match resolve(args.mode, &mut cfg, "mode")?.as_deref().unwrap_or("time") {
        "time" => BootstrapMode::ResampleTime,
        "rows" => BootstrapMode::ResampleRows,
        other => {
            return Err(CliError::usage(format!(
                "unknown bootstrap mode '{other}' (expected time or rows)"
            )))
        }
    };
    let smoothing_kind = resolve(args.smoothing, &mut cfg, "smoothing")?;
    let theta = resolve(args.theta, &mut cfg, "theta")?;
    let max_windows = resolve(args.max_windows, &mut cfg, "max-windows")?;
    cfg.finish()?;

    if n_boot < 2 {
        return Err(CliError::usage(format!(
            "--n-boot must be at least 2 (the replica deviation is undefined otherwise), got {n_boot}"
        )));
    }
    if max_windows == Some(0) {
        return Err(CliError::usage("--max-windows must be at least 1"));
    }
    if length.is_none() && shift.is_some() {
        return Err(CliError::usage("--shift requires --length"));
    }

    let panel = load_returns(&prices, layout)?;
    let t_obs = panel.n_obs();

    let windows = match length {
        Some(l) => make_windows(
            t_obs,
            &WindowSpec {
                length: l,
                shift: shift.unwrap_or(l),
                smoothing: corrfilter::correlation::WeightScheme::Uniform,
            },
        )?,
        None => vec![0..t_obs],
    };
    let windows = match max_windows {
        Some(m) if windows.len() > m => windows[..m].to_vec(),
        _ => windows,
    };

    // The empirical count defaults to the same unweighted estimator the
    // replicas use, so the comparison is like for like.
    let window_len = windows.first().map(|r| r.end - r.start).unwrap_or(t_obs);
    let empirical_scheme =
        parse_smoothing(smoothing_kind.as_deref().or(Some("uniform")), theta, window_len as f64 / 3.0)?;

    struct Row {
        window: usize,
        start: usize,
        end: usize,
        end_date: chrono::NaiveDate,
        empirical: usize,
        mean: f64,
        std: f64,
        redraws: usize,
        replicas: Vec<usize>,
    }

    let mut rows = Vec::new();
    for (w, range) in windows.iter().enumerate() {
        let sub = panel.window(range.start, range.end);
        let corr = pearson(&sub, empirical_scheme)?;
        let dist = to_distance(&corr)?;
        let empirical = dbht(&dist, &corr)?.n_cl;
        let boot = bootstrap_nclusters(&sub, n_boot, seed.wrapping_add(w as u64), mode)?;
        rows.push(Row {
            window: w,
            start: range.start,
            end: range.end,
            end_date: sub.dates[sub.n_obs() - 1],
            empirical,
            mean: boot.mean_n_cl,
            std: boot.std_n_cl,
            redraws: boot.redraws,
            replicas: boot.replicas,
        });
    }

    let mut outputs = OutputSet::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "window",
        "start",
        "end",
        "end_date",
        "empirical_n_cl",
        "mean_n_cl",
        "std_n_cl",
        "redraws",
        "within_one_std",
    ])?;
    for r in &rows {
        let within = (r.empirical as f64 - r.mean).abs() <= r.std;
        w.write_record([
            r.window.to_string(),
            r.start.to_string(),
            r.end.to_string(),
            r.end_date.format("%Y-%m-%d").to_string(),
            r.empirical.to_string(),
            format!("{:.12}", r.mean),
            format!("{:.12}", r.std),
            r.redraws.to_string(),
            within.to_string(),
        ])?;
    }
    w.flush()?;
    outputs.add("bootstrap.csv", w.into_inner().expect("vec writer"));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["window", "replica", "n_cl"])?;
    for r in &rows {
        for (i, &k) in r.replicas.iter().enumerate() {
            w.write_record([r.window.to_string(), i.to_string(), k.to_string()])?;
        }
    }
    w.flush()?;
    outputs.add("replicas.csv", w.into_inner().expect("vec writer"));

    let mut manifest = Manifest::new("bootstrap");
    manifest.input("prices", &prices);
    manifest.flag("layout", if matches!(layout, corrfilter::ingest::CsvLayout::Wide) { "wide" } else { "long" });
    match length {
        Some(l) => {
            manifest.flag("length", l);
            manifest.flag("shift", shift.unwrap_or(l));
        }
        None => manifest.flag("length", "whole-panel"),
    }
    manifest.flag("n_boot", n_boot);
    manifest.flag("seed", seed);
    manifest.flag(
        "mode",
        match mode {
            BootstrapMode::ResampleTime => "time",
            BootstrapMode::ResampleRows => "rows",
        },
    );
    manifest.flag("empirical_smoothing", scheme_label(empirical_scheme));
    manifest.flag("windows", rows.len());
    manifest.outputs = outputs.names();
    outputs.flush(&out, &manifest)
}
