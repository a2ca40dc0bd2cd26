//! `openpop` command-line front end.
//!
//! Exit codes: 0 on success, 2 for configuration and usage errors, 3 when a
//! fit degenerates or no family admits the data, 1 for anything else.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod locate;
pub mod report;

use commands::{Output, SensitivityFlags, WeightSource};
use config::Loaded;
use error::CliError;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "OPENPOP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "openpop", version, about = "Post-data inference over a modelled population space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, short)]
    config: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit every family and report posteriors, predictive scores and weights.
    Fit {
        #[command(flatten)]
        common: Common,
    },
    /// Report post-data family weights.
    Weights {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "predictive")]
        source: WeightSource,
    },
    /// Mixture post-data distribution of a population quantity.
    Quantity {
        #[command(flatten)]
        common: Common,
        /// mean, variance, sd, quantile:<p>, tailprob:<t> or expectation:<identity|square|abs|log>.
        #[arg(long, short)]
        quantity: Option<String>,
        #[arg(long, short)]
        level: Option<f64>,
        #[arg(long, value_enum, default_value = "predictive")]
        weights: WeightSource,
        /// Write the density table (q, density, cdf) here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Posterior-weighted P values.
    Pvalue {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: Option<String>,
        /// obs_value or sample_mean.
        #[arg(long)]
        statistic: Option<String>,
        /// Write the per-node table here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare a family with a substitute through a quantity.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        substitute: Option<String>,
        #[arg(long, short)]
        quantity: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Coverage or weight-concentration experiment.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Write the per-replicate (or per-n) table here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn threads() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{s}`"))),
        },
        Err(e) => Err(CliError::Config(format!("{THREADS_ENV}: {e}"))),
    }
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(n: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| CliError::Runtime(format!("cannot start worker threads: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T: Send>(_n: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    Ok(f())
}

fn execute(command: &Command) -> Result<(), CliError> {
    let (common, csv, out): (&Common, Option<&Path>, Result<Output, CliError>) = match command {
        Command::Fit { common } => (common, None, Loaded::load(&common.config).and_then(|c| commands::fit(&c))),
        Command::Weights { common, source } => {
            (common, None, Loaded::load(&common.config).and_then(|c| commands::weights(&c, *source)))
        }
        Command::Quantity { common, quantity, level, weights, csv } => (
            common,
            csv.as_deref(),
            Loaded::load(&common.config).and_then(|c| commands::quantity(&c, quantity.as_deref(), *level, *weights)),
        ),
        Command::Pvalue { common, family, statistic, csv } => (
            common,
            csv.as_deref(),
            Loaded::load(&common.config).and_then(|c| commands::pvalue(&c, family.as_deref(), statistic.as_deref())),
        ),
        Command::Sensitivity { common, family, substitute, quantity, threshold } => {
            let flags = SensitivityFlags {
                family: family.as_deref(),
                substitute: substitute.as_deref(),
                quantity: quantity.as_deref(),
                threshold: *threshold,
            };
            (common, None, Loaded::load(&common.config).and_then(|c| commands::sensitivity(&c, &flags)))
        }
        Command::Simulate { common, csv } => {
            (common, csv.as_deref(), Loaded::load(&common.config).and_then(|c| commands::simulate(&c)))
        }
    };
    let out = out?;
    if let (Some(path), Some(t)) = (csv, &out.table) {
        report::write_csv(path, &t.header, &t.rows)?;
    }
    report::emit(common.out.as_deref(), &report::render(&out.report))
}

/// Run the CLI on `args` (including the program name) and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = threads().and_then(|n| with_pool(n, || execute(&cli.command))).and_then(|r| r);
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
