//! Rolling-window analysis over a price panel.

use std::path::PathBuf;

use clap::Args;

use corrfilter::dynamics::{make_windows, rolling_analysis, DetrendMode, WindowSpec};
use corrfilter::ingest::load_taxonomy;

use crate::common::{
    load_returns, parse_detrend, parse_layout, parse_methods, parse_smoothing, path_or_default,
    scheme_label, Manifest, OutputSet,
};
use crate::config::{resolve, Config};
use crate::error::CliError;

#[derive(Args)]
pub struct RollingArgs {
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
    /// Window length in observations.
    #[arg(long)]
    length: Option<usize>,
    /// Start-to-start shift in observations.
    #[arg(long)]
    shift: Option<usize>,
    /// Correlation smoothing: uniform or exponential.
    #[arg(long)]
    smoothing: Option<String>,
    /// Exponential decay length; defaults to a third of the window.
    #[arg(long)]
    theta: Option<f64>,
    /// Comma-separated subset of dbht,single,average,complete,kmedoids, or "all".
    #[arg(long)]
    methods: Option<String>,
    /// raw, detrended or both.
    #[arg(long)]
    detrend: Option<String>,
    /// Seed for k-medoids restarts.
    #[arg(long)]
    seed: Option<u64>,
    /// Analyze only the first N windows.
    #[arg(long)]
    max_windows: Option<usize>,
}

pub fn run(args: RollingArgs) -> Result<(), CliError> {
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
    let length =
        resolve(args.length, &mut cfg, "length")?.ok_or_else(|| CliError::usage("--length is required"))?;
    let shift =
        resolve(args.shift, &mut cfg, "shift")?.ok_or_else(|| CliError::usage("--shift is required"))?;
    let smoothing_kind = resolve(args.smoothing, &mut cfg, "smoothing")?;
    let theta = resolve(args.theta, &mut cfg, "theta")?;
    let methods = parse_methods(
        resolve(args.methods, &mut cfg, "methods")?.as_deref().unwrap_or("all"),
    )?;
    let detrend = parse_detrend(
        resolve(args.detrend, &mut cfg, "detrend")?.as_deref().unwrap_or("raw"),
    )?;
    let seed = resolve(args.seed, &mut cfg, "seed")?.unwrap_or(0);
    let max_windows = resolve(args.max_windows, &mut cfg, "max-windows")?;
    cfg.finish()?;

    if max_windows == Some(0) {
        return Err(CliError::usage("--max-windows must be at least 1"));
    }

    let scheme = parse_smoothing(smoothing_kind.as_deref(), theta, length as f64 / 3.0)?;
    let spec = WindowSpec { length, shift, smoothing: scheme };

    let mut panel = load_returns(&prices, layout)?;
    let tax = load_taxonomy(&taxonomy_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", taxonomy_path.display())))?;
    tax.validate_against(&panel.tickers)?;

    // Capping the window count is a prefix operation, so trimming the
    // panel to the last kept window avoids computing dropped ones.
    if let Some(m) = max_windows {
        let all = make_windows(panel.n_obs(), &spec)?;
        if all.len() > m {
            panel = panel.window(0, all[m - 1].end);
        }
    }

    let series = rolling_analysis(&panel, &tax, &spec, &methods, detrend, seed)?;

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

    let mut manifest = Manifest::new("rolling");
    manifest.input("prices", &prices);
    manifest.input("taxonomy", &taxonomy_path);
    manifest.flag("layout", if matches!(layout, corrfilter::ingest::CsvLayout::Wide) { "wide" } else { "long" });
    manifest.flag("length", length);
    manifest.flag("shift", shift);
    manifest.flag("smoothing", scheme_label(scheme));
    manifest.flag(
        "methods",
        methods.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","),
    );
    manifest.flag("detrend", format!("{detrend:?}").to_lowercase());
    manifest.flag("seed", seed);
    manifest.flag("windows", series.records.len());
    if let Some(m) = max_windows {
        manifest.flag("max_windows", m);
    }
    manifest.outputs = outputs.names();
    outputs.flush(&out, &manifest)
}
