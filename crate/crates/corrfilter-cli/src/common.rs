//! Flag vocabulary shared by the subcommands, input loading, and the
//! compute-then-write output collector.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use corrfilter::correlation::WeightScheme;
use corrfilter::dynamics::{DetrendMode, Method};
use corrfilter::ingest::{load_prices, log_returns, CsvLayout, ReturnsPanel};
use corrfilter::metrics::{BonferroniMode, ScanConfig, TailMode};

use crate::error::CliError;

pub fn parse_layout(s: &str) -> Result<CsvLayout, CliError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "wide" => Ok(CsvLayout::Wide),
        "long" => Ok(CsvLayout::Long),
        other => Err(CliError::usage(format!(
            "unknown layout '{other}' (expected wide or long)"
        ))),
    }
}

/// Comma-separated method names, or `all`; order kept, duplicates dropped.
pub fn parse_methods(s: &str) -> Result<Vec<Method>, CliError> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Method::ALL.to_vec());
    }
    let mut methods = Vec::new();
    for part in s.split(',') {
        let m: Method = part.parse().map_err(CliError::Usage)?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    if methods.is_empty() {
        return Err(CliError::usage("no methods given"));
    }
    Ok(methods)
}

pub fn parse_detrend(s: &str) -> Result<DetrendMode, CliError> {
    s.parse().map_err(CliError::Usage)
}

/// `uniform` or `exponential`; exponential without an explicit theta
/// falls back to `default_theta`.
pub fn parse_smoothing(
    kind: Option<&str>,
    theta: Option<f64>,
    default_theta: f64,
) -> Result<WeightScheme, CliError> {
    match kind.unwrap_or("exponential").trim().to_ascii_lowercase().as_str() {
        "uniform" => {
            if theta.is_some() {
                return Err(CliError::usage("--theta only applies to exponential smoothing"));
            }
            Ok(WeightScheme::Uniform)
        }
        "exponential" => {
            let theta = theta.unwrap_or(default_theta);
            if !(theta.is_finite() && theta > 0.0) {
                return Err(CliError::usage(format!("theta must be positive, got {theta}")));
            }
            Ok(WeightScheme::Exponential { theta })
        }
        other => Err(CliError::usage(format!(
            "unknown smoothing '{other}' (expected uniform or exponential)"
        ))),
    }
}

pub fn parse_scan_config(bonferroni: Option<&str>, tail: Option<&str>) -> Result<ScanConfig, CliError> {
    let family = match bonferroni.unwrap_or("half").trim().to_ascii_lowercase().as_str() {
        "half" => BonferroniMode::HalfFamily,
        "full" => BonferroniMode::FullFamily,
        other => {
            return Err(CliError::usage(format!(
                "unknown bonferroni mode '{other}' (expected half or full)"
            )))
        }
    };
    let tail = match tail.unwrap_or("upper").trim().to_ascii_lowercase().as_str() {
        "upper" => TailMode::UpperTail,
        "point" => TailMode::PointMass,
        other => {
            return Err(CliError::usage(format!(
                "unknown tail mode '{other}' (expected upper or point)"
            )))
        }
    };
    Ok(ScanConfig { tail, family })
}

pub fn scheme_label(scheme: WeightScheme) -> String {
    match scheme {
        WeightScheme::Uniform => "uniform".to_string(),
        WeightScheme::Exponential { theta } => format!("exponential(theta={theta})"),
    }
}

/// Loads prices and converts to log-returns; the pipeline needs at
/// least two series to correlate.
pub fn load_returns(prices: &Path, layout: CsvLayout) -> Result<ReturnsPanel, CliError> {
    let panel = load_prices(prices, layout)
        .map_err(|e| CliError::Data(format!("{}: {e}", prices.display())))?;
    let returns = log_returns(&panel)?;
    if returns.n_assets() < 2 {
        return Err(CliError::Data(format!(
            "{}: need at least two tickers, got {}",
            prices.display(),
            returns.n_assets()
        )));
    }
    Ok(returns)
}

/// Files are accumulated in memory and only touch the disk after every
/// computation has succeeded, so a failing run leaves no partial output.
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> OutputSet {
        OutputSet { files: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.files.iter().map(|(n, _)| n.clone()).collect();
        names.push("manifest.json".to_string());
        names
    }

    /// Writes all files plus the manifest and lists them on stdout.
    pub fn flush(self, dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)
                .map_err(|e| CliError::Data(format!("cannot write {name}: {e}")))?;
        }
        let mut text = serde_json::to_string_pretty(manifest)?;
        text.push('\n');
        std::fs::write(dir.join("manifest.json"), text)
            .map_err(|e| CliError::Data(format!("cannot write manifest.json: {e}")))?;
        for (name, _) in &self.files {
            println!("wrote {}", dir.join(name).display());
        }
        println!("wrote {}", dir.join("manifest.json").display());
        Ok(())
    }
}

/// Reproducibility record: inputs, resolved flags and output names.
/// Deliberately carries no timestamps so reruns are byte-identical.
#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: BTreeMap<String, String>,
    pub flags: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Manifest {
        Manifest {
            tool: "corrfilter",
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: BTreeMap::new(),
            flags: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, path: &Path) {
        self.inputs.insert(key.to_string(), path.display().to_string());
    }

    pub fn flag(&mut self, key: &str, value: impl ToString) {
        self.flags.insert(key.to_string(), value.to_string());
    }
}

pub fn path_or_default(p: Option<PathBuf>, err: &str) -> Result<PathBuf, CliError> {
    p.ok_or_else(|| CliError::usage(err))
}
