//! Command-line front end: ingestion, filtering, clustering, metrics
//! and rolling analyses wired into plot-ready CSV tables.

mod bootstrap;
mod common;
mod config;
mod error;
mod rolling;
mod static_analysis;
mod synthcmd;
mod validate;

use clap::Parser;

use error::CliError;

#[derive(Parser)]
#[command(
    name = "corrfilter",
    version,
    about = "Correlation-filtered graphs and clustering for return panels",
    propagate_version = true
)]
struct Cli {
    /// Worker threads; CORRFILTER_THREADS is the fallback, 0 = automatic.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Whole-panel analysis: graph, bubbles, composition and sweep curves.
    Static(static_analysis::StaticArgs),
    /// Windowed analysis across the panel.
    Rolling(rolling::RollingArgs),
    /// Resampling robustness of the emergent cluster count.
    Bootstrap(bootstrap::BootstrapArgs),
    /// Synthetic factor-model panel generation.
    Synth(synthcmd::SynthArgs),
    /// Input preflight checks.
    Validate(validate::ValidateArgs),
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("CORRFILTER_THREADS") {
        Ok(s) => s.trim().parse::<usize>().map(Some).map_err(|_| {
            CliError::usage(format!("CORRFILTER_THREADS must be an integer, got '{s}'"))
        }),
        Err(_) => Ok(None),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = thread_count(cli.threads)? {
        // A zero count falls through to the library default.
        if n > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::usage(format!("cannot configure {n} threads: {e}")))?;
        }
    }
    match cli.command {
        Command::Static(args) => static_analysis::run(args),
        Command::Rolling(args) => rolling::run(args),
        Command::Bootstrap(args) => bootstrap::run(args),
        Command::Synth(args) => synthcmd::run(args),
        Command::Validate(args) => validate::run(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
