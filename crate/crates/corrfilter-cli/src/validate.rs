//! Preflight checks: can the pipeline run on these inputs?

use std::path::PathBuf;

use clap::Args;

use corrfilter::ingest::load_taxonomy;

use crate::common::{load_returns, parse_layout, path_or_default};
use crate::config::{resolve, Config};
use crate::error::CliError;

#[derive(Args)]
pub struct ValidateArgs {
    /// Price CSV.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Price CSV layout: wide or long.
    #[arg(long)]
    layout: Option<String>,
    /// Sector taxonomy CSV; checked against the panel when given.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    /// key = value file supplying defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: ValidateArgs) -> Result<(), CliError> {
    let mut cfg = Config::load(args.config.as_deref())?;
    let prices = path_or_default(resolve(args.prices, &mut cfg, "prices")?, "--prices is required")?;
    let layout = parse_layout(
        resolve(args.layout, &mut cfg, "layout")?.as_deref().unwrap_or("wide"),
    )?;
    let taxonomy_path = resolve(args.taxonomy, &mut cfg, "taxonomy")?;
    cfg.finish()?;

    let panel = load_returns(&prices, layout)?;
    println!("prices: {}", prices.display());
    println!("  tickers: {}", panel.n_assets());
    println!(
        "  returns: {} observations ({} .. {})",
        panel.n_obs(),
        panel.dates.first().expect("nonempty panel").format("%Y-%m-%d"),
        panel.dates.last().expect("nonempty panel").format("%Y-%m-%d"),
    );
    if panel.n_obs() < 3 {
        return Err(CliError::Data(format!(
            "correlation needs at least 3 observations, got {}",
            panel.n_obs()
        )));
    }

    // A constant return series has no correlation with anything; the
    // estimator would reject the panel downstream.
    for (i, t) in panel.tickers.iter().enumerate() {
        let row = panel.returns.row(i);
        let first = row[0];
        if row.iter().all(|&x| x == first) {
            return Err(CliError::Data(format!("constant return series for {t}")));
        }
    }

    if let Some(path) = taxonomy_path {
        let tax = load_taxonomy(&path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        println!("taxonomy: {}", path.display());
        println!("  classified tickers: {}", tax.len());
        println!(
            "  supersectors: {}, industries: {}",
            tax.supersectors().len(),
            tax.industries().len()
        );
        tax.validate_against(&panel.tickers)?;
        println!("  panel coverage: complete");
    }

    println!("ok");
    Ok(())
}
