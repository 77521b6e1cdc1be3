use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rqbc", version, about = "Windowed-measurement and parity-commitment simulations")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML or JSON configuration file (format chosen by extension).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the configuration.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Output file, or a directory for per-run JSON transcripts. Defaults to stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads for data-parallel work.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detection probability over shapes, bandwidths and window widths.
    Sweep(SweepArgs),
    /// Monte Carlo protocol runs.
    Run(RunArgs),
    /// Flag and detection probabilities of cheating strategies.
    Attack(AttackArgs),
    /// POVM validity and oracle agreement audit.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',')]
    pub shapes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Window half-widths T.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub runs: Option<u64>,
    #[command(flatten)]
    pub strategy: StrategyArgs,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[command(flatten)]
    pub strategy: StrategyArgs,
    /// Channel counts N.
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<usize>>,
    /// Verification times T (default: t_open).
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct StrategyArgs {
    /// honest | delayed | mixed | wrong-state | early-measure
    #[arg(long)]
    pub strategy: Option<String>,
    /// Delay for `delayed`.
    #[arg(long)]
    pub tau0: Option<f64>,
    /// Measurement time for `early-measure` (default: the configured t_probe).
    #[arg(long)]
    pub t_probe: Option<f64>,
    /// Centre of the substituted packet for `wrong-state`.
    #[arg(long)]
    pub k_c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Window products T*delta to audit.
    #[arg(long, value_delimiter = ',')]
    pub t_deltas: Option<Vec<f64>>,

    #[arg(long, hide = true)]
    pub inject_corruption: bool,
}
