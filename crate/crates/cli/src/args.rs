use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "privseq", version, about = "Structured private pooled sequencing toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimal level count and base coverage depth for given accuracy and privacy levels.
    Bounds(BoundsArgs),
    /// Run one seeded simulation and decode the unknown genotypes.
    Simulate(SimulateArgs),
    /// Exact per-SNP leakage to the sequencer for M = 1..m-max.
    Leakage(LeakageArgs),
    /// Bounds and optional Monte Carlo error over a parameter grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Depth {
    Constant,
    Random,
}

/// `--alpha0` value: a positive integer or `auto`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alpha0Arg {
    Auto,
    Fixed(u64),
}

impl FromStr for Alpha0Arg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Alpha0Arg::Auto);
        }
        match s.parse::<u64>() {
            Ok(0) | Err(_) => Err(format!("`{s}` is neither `auto` nor a positive integer")),
            Ok(v) => Ok(Alpha0Arg::Fixed(v)),
        }
    }
}

fn read_error(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 0.5 {
        Ok(v)
    } else {
        Err(format!("eta must be in (0, 0.5), got {v}"))
    }
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must be in (0, 1), got {v}"))
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be >= 0, got {v}"))
    }
}

fn probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must be in [0, 1], got {v}"))
    }
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, value_parser = read_error)]
    pub eta: f64,
    #[arg(long, value_parser = open_unit)]
    pub eps: f64,
    #[arg(long, value_parser = open_unit)]
    pub beta: Option<f64>,
    /// Number of unknown individuals; defaults to the minimum implied by --beta.
    #[arg(long = "m", alias = "M")]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    pub sigma_alpha: f64,
    /// Double M for diploid genomes.
    #[arg(long)]
    pub diploid: bool,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Population and scheme options shared by `simulate` and `sweep`.
#[derive(Debug, Args)]
pub struct PopulationArgs {
    /// Number of SNP positions.
    #[arg(long, default_value_t = 10_000)]
    pub snps: usize,
    /// Prior probability of allele 1 for every SNP.
    #[arg(long, default_value_t = 0.5, value_parser = probability, conflicts_with = "freq_file")]
    pub prior: f64,
    /// One probability per line, one line per SNP; overrides --snps.
    #[arg(long)]
    pub freq_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results are identical for any value.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Sample random depths from a moment-matched binomial.
    #[arg(long)]
    pub binomial_depths: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "m", alias = "M")]
    pub m: usize,
    #[arg(long, default_value = "auto")]
    pub alpha0: Alpha0Arg,
    #[arg(long, value_parser = read_error)]
    pub eta: f64,
    /// Accuracy level; used to resolve `--alpha0 auto` and reported next to the error rate.
    #[arg(long, default_value_t = 0.1, value_parser = open_unit)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    pub sigma_alpha: f64,
    #[arg(long, value_enum, default_value_t = Depth::Constant)]
    pub depth: Depth,
    #[arg(long)]
    pub diploid: bool,
    /// Simulate every read individually instead of drawing counts.
    #[arg(long)]
    pub per_read: bool,
    #[command(flatten)]
    pub population: PopulationArgs,
    /// Per-SNP CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the run summary printed on stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct LeakageArgs {
    #[arg(long, default_value_t = 10)]
    pub m_max: usize,
    /// Prior probability of allele 1 for the unknown individuals.
    #[arg(long, default_value_t = 0.5, value_parser = probability, conflicts_with = "freq_file")]
    pub prior: f64,
    /// Average the leakage over the distinct frequencies in this file.
    #[arg(long)]
    pub freq_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "m", alias = "M", value_delimiter = ',', required = true)]
    pub m: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true, value_parser = read_error)]
    pub eta: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true, value_parser = open_unit)]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0", value_parser = nonnegative)]
    pub sigma_alpha: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Depth::Constant)]
    pub depth: Depth,
    #[arg(long)]
    pub diploid: bool,
    /// Simulated SNP columns per cell; 0 reports bounds only.
    #[arg(long, default_value_t = 0)]
    pub mc_trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub binomial_depths: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
