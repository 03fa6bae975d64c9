//! `serieslab` command-line front end.
//!
//! Exit codes: 0 success, 2 parse or usage error, 3 horizon or audit failure,
//! 4 shortfall (partial output is still written).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serieslab::error::Error;
use serieslab::io::Format;
use serieslab::rational::Rational;

#[derive(Parser, Debug)]
#[command(name = "serieslab", version, about = "Exact experiments on subseries, shuffles and divergence certificates")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Number of terms examined.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub horizon: u64,
    /// Tolerance for audits and splits.
    #[arg(long, global = true, default_value = "1/8", value_parser = parse_rational)]
    pub tol: Rational,
    /// Base seed; trial i uses seed + i.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output format for tables (reports are always JSON).
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    pub format: Format,
    /// Block base for geometric partitions.
    #[arg(long, global = true, default_value = "5", value_parser = parse_rational)]
    pub base: Rational,
    /// Largest index scanned before giving up.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    pub scan_bound: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    serieslab::rational::parse_rational(s).map_err(|e| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Partial sums of a series, optionally restricted to an index set.
    Trace {
        #[arg(long)]
        series: String,
        #[arg(long)]
        set: Option<String>,
    },
    /// Apply a transform pipeline and trace the result, or tabulate a map.
    Transform {
        #[arg(long, default_value = "altharm")]
        series: String,
        /// Stages such as `zero_pad(odds) | shuffle(evens;odds) | negate`.
        #[arg(long, conflicts_with = "map")]
        pipeline: Option<String>,
        /// `shuffle(A;B)` or `p_set(A;B)`: write `n,p_n` instead of a trace.
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        set: Option<String>,
    },
    /// Divergence certificates.
    #[command(subcommand)]
    Witness(WitnessCmd),
    /// (r,s)-sequences: build, audit, split, oscillate.
    #[command(subcommand)]
    Rs(RsCmd),
    /// Random-sign Monte Carlo.
    #[command(subcommand)]
    Mc(McCmd),
    /// Sign-pattern space experiments.
    #[command(subcommand)]
    Kspace(KspaceCmd),
}

#[derive(Subcommand, Debug)]
pub enum WitnessCmd {
    /// Milestones with exact block sums.
    Milestones {
        #[arg(long)]
        series: String,
        #[arg(long)]
        set: String,
        /// plus, minus or osc.
        #[arg(long, default_value = "plus")]
        mode: String,
        /// Oscillation amplitude for `--mode osc`.
        #[arg(long, value_parser = parse_rational)]
        c: Option<Rational>,
        #[arg(long, default_value_t = 5)]
        count: usize,
        /// greedy, strengthened or dominating.
        #[arg(long, default_value = "greedy")]
        rule: String,
    },
    /// A finite set whose partial sums pass the targets in order.
    Oscillator {
        #[arg(long)]
        series: String,
        /// Comma-separated targets, e.g. `1,-1,2,-2`.
        #[arg(long, allow_hyphen_values = true)]
        targets: String,
    },
    /// Oscillation past ±1/4 over a set.
    Quarter {
        #[arg(long)]
        series: String,
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 2)]
        excursions: usize,
    },
    /// Greedy blocks with `Σ|a_n| <= base^k`.
    Blocks {
        #[arg(long)]
        series: String,
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
    /// Re-read a witness file and re-verify its certificates exactly.
    Verify {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum RsCmd {
    /// Build the (1,1)-sequence of a series with `|a_n| <= 1`.
    Build {
        #[arg(long)]
        series: String,
        #[arg(long, default_value_t = 2)]
        pairs: usize,
    },
    /// Per-block deviations from (r,s) against `--tol`.
    Audit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        tail_start: usize,
    },
    /// Which blocks a set splits.
    Split {
        #[arg(long)]
        input: PathBuf,
        /// Set spec, or `B` for the union of the `B_k`.
        #[arg(long)]
        d: String,
        /// almost or total.
        #[arg(long, default_value = "almost")]
        kind: String,
        #[arg(long, default_value_t = 1)]
        min_blocks: usize,
    },
    /// Oscillation of the origin series over a splitting set.
    Oscillate {
        #[arg(long)]
        input: PathBuf,
        /// Set spec, or `B` for the union of the `B_k`.
        #[arg(long)]
        d: String,
        #[arg(long, default_value_t = 1)]
        min_blocks: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum McCmd {
    /// Escape frequencies of randomly signed series.
    Rademacher {
        /// `harmonic`, `sqrt` (1/√n) or any series spec with nonnegative terms.
        #[arg(long, default_value = "harmonic")]
        cn: String,
        #[arg(long, default_value = "all")]
        set: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value = "10", value_parser = parse_rational)]
        escape: Rational,
    },
    /// Sample variance of `S_m` against the exact variance.
    Variance {
        #[arg(long, default_value = "harmonic")]
        cn: String,
        #[arg(long, default_value = "all")]
        set: String,
        #[arg(long, default_value_t = 10_000)]
        m: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum KspaceCmd {
    /// Sample points, check the block bound and the flip pairing exactly.
    Sample {
        #[arg(long, default_value_t = 50)]
        depth: u64,
        #[arg(long, default_value_t = 100)]
        samples: u64,
        #[arg(long, default_value = "all")]
        set: String,
    },
    /// Frequency of passing `±threshold` over a set.
    Inf {
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 100)]
        samples: u64,
        #[arg(long, default_value_t = 30)]
        depth: u64,
        #[arg(long, default_value = "1/4", value_parser = parse_rational)]
        threshold: Rational,
    },
}

/// Why a command did not finish cleanly.
#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    /// Output was written but fell short of the request.
    Shortfall(String),
    /// Output was written but an audit or verification failed.
    Rejected(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::from(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::InvalidArgument(_) | Error::NotInfiniteCoinfinite { .. } | Error::ZeroIndex => 2,
        Error::Io(_) => 1,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match commands::run(&cli, argv.join(" ")) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Rejected(msg)) => {
            eprintln!("rejected: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Shortfall(msg)) => {
            eprintln!("shortfall: {msg}");
            ExitCode::from(4)
        }
    }
}
