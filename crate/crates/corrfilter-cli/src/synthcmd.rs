//! Synthetic factor-model panel generation.

use std::path::PathBuf;

use clap::Args;

use corrfilter::synth::{generate, write_price_csv, write_taxonomy_csv, NoiseKind, SynthSpec};

use crate::common::{path_or_default, Manifest, OutputSet};
use crate::config::{resolve, Config};
use crate::error::CliError;

#[derive(Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file supplying defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of tickers.
    #[arg(long)]
    n_assets: Option<usize>,
    /// Number of return observations.
    #[arg(long)]
    n_obs: Option<usize>,
    /// Number of sectors, assigned round-robin.
    #[arg(long)]
    n_sectors: Option<usize>,
    /// Market loading range, lower end.
    #[arg(long)]
    market_low: Option<f64>,
    /// Market loading range, upper end.
    #[arg(long)]
    market_high: Option<f64>,
    /// Sector loading range, lower end.
    #[arg(long)]
    sector_low: Option<f64>,
    /// Sector loading range, upper end.
    #[arg(long)]
    sector_high: Option<f64>,
    /// Idiosyncratic noise scale.
    #[arg(long)]
    idio_vol: Option<f64>,
    /// Noise law: gaussian or student.
    #[arg(long)]
    noise: Option<String>,
    /// Student-t degrees of freedom.
    #[arg(long)]
    df: Option<f64>,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    let mut cfg = Config::load(args.config.as_deref())?;
    let out = path_or_default(resolve(args.out, &mut cfg, "out")?, "--out is required")?;
    let n_assets = resolve(args.n_assets, &mut cfg, "n-assets")?.unwrap_or(100);
    let n_obs = resolve(args.n_obs, &mut cfg, "n-obs")?.unwrap_or(2000);
    let n_sectors = resolve(args.n_sectors, &mut cfg, "n-sectors")?.unwrap_or(10);
    let market_low = resolve(args.market_low, &mut cfg, "market-low")?.unwrap_or(0.9);
    let market_high = resolve(args.market_high, &mut cfg, "market-high")?.unwrap_or(1.1);
    let sector_low = resolve(args.sector_low, &mut cfg, "sector-low")?.unwrap_or(0.3);
    let sector_high = resolve(args.sector_high, &mut cfg, "sector-high")?.unwrap_or(0.5);
    let idio_vol = resolve(args.idio_vol, &mut cfg, "idio-vol")?.unwrap_or(1.0);
    let noise_kind = resolve(args.noise, &mut cfg, "noise")?;
    let df = resolve(args.df, &mut cfg, "df")?;
    let seed = resolve(args.seed, &mut cfg, "seed")?.unwrap_or(0);
    cfg.finish()?;

    let noise = match noise_kind.as_deref().unwrap_or("gaussian").trim().to_ascii_lowercase().as_str() {
        "gaussian" => {
            if df.is_some() {
                return Err(CliError::usage("--df only applies to student noise"));
            }
            NoiseKind::Gaussian
        }
        "student" => {
            let df = df.unwrap_or(5.0);
            if !(df.is_finite() && df > 0.0) {
                return Err(CliError::usage(format!("--df must be positive, got {df}")));
            }
            NoiseKind::StudentT { df }
        }
        other => {
            return Err(CliError::usage(format!(
                "unknown noise '{other}' (expected gaussian or student)"
            )))
        }
    };

    if n_assets < 1 {
        return Err(CliError::usage("--n-assets must be at least 1"));
    }
    if n_obs < 1 {
        return Err(CliError::usage("--n-obs must be at least 1"));
    }
    if !(1..=n_assets).contains(&n_sectors) {
        return Err(CliError::usage(format!(
            "--n-sectors must lie in 1..={n_assets}, got {n_sectors}"
        )));
    }
    if !(idio_vol.is_finite() && idio_vol > 0.0) {
        return Err(CliError::usage(format!("--idio-vol must be positive, got {idio_vol}")));
    }
    if !(market_low.is_finite() && market_high.is_finite() && market_low <= market_high) {
        return Err(CliError::usage(format!(
            "market loading range [{market_low}, {market_high}] must be ordered and finite"
        )));
    }
    if !(sector_low.is_finite() && sector_high.is_finite() && sector_low <= sector_high) {
        return Err(CliError::usage(format!(
            "sector loading range [{sector_low}, {sector_high}] must be ordered and finite"
        )));
    }

    let spec = SynthSpec {
        n_assets,
        n_obs,
        n_sectors,
        market_loading: (market_low, market_high),
        sector_loading: (sector_low, sector_high),
        idio_vol,
        noise,
        rng_seed: seed,
    };
    let output = generate(&spec);

    let mut outputs = OutputSet::new();
    let mut buf = Vec::new();
    write_price_csv(&output.panel, &mut buf)?;
    outputs.add("prices.csv", buf);
    let mut buf = Vec::new();
    write_taxonomy_csv(&output.taxonomy, &output.panel.tickers, &mut buf)?;
    outputs.add("taxonomy.csv", buf);

    // The planted truth, for validating recovery downstream.
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ticker", "sector", "market_loading", "sector_loading"])?;
    for (i, t) in output.panel.tickers.iter().enumerate() {
        w.write_record([
            t.clone(),
            output.sector_of[i].to_string(),
            format!("{:.12}", output.market_loadings[i]),
            format!("{:.12}", output.sector_loadings[i]),
        ])?;
    }
    w.flush()?;
    outputs.add("factors.csv", w.into_inner().expect("vec writer"));

    let mut manifest = Manifest::new("synth");
    manifest.flag("n_assets", n_assets);
    manifest.flag("n_obs", n_obs);
    manifest.flag("n_sectors", n_sectors);
    manifest.flag("market_loading", format!("[{market_low}, {market_high}]"));
    manifest.flag("sector_loading", format!("[{sector_low}, {sector_high}]"));
    manifest.flag("idio_vol", idio_vol);
    manifest.flag(
        "noise",
        match noise {
            NoiseKind::Gaussian => "gaussian".to_string(),
            NoiseKind::StudentT { df } => format!("student(df={df})"),
        },
    );
    manifest.flag("seed", seed);
    manifest.outputs = outputs.names();
    outputs.flush(&out, &manifest)
}
