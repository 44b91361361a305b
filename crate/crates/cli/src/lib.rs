//! The `morlpan` command line: generate a solution set, extract behavior,
//! cluster with PAN, compare against k-medoids and summarize results.

pub mod commands;
pub mod io;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use morlpan::baselines::PointSelector;
use morlpan::Normalization;

pub use commands::run;

#[derive(Debug, Parser)]
#[command(name = "morlpan", version, about = "Cluster MORL solution sets in objective and behavior space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train policies over a weight lattice and write the Pareto set.
    Generate(GenerateArgs),
    /// Fill behavior matrices from the Q-table sidecar.
    Extract(ExtractArgs),
    /// Run PAN on a solution set with behavior.
    Cluster(ClusterArgs),
    /// Run PAN and the k-medoids baseline and compare them.
    Compare(CompareArgs),
    /// Summarize a front or comparison file.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, env = "MORLPAN_OUTPUT_DIR", default_value = "out")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Grid layout JSON. Defaults to the classic ten-treasure grid.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Use a random layout with every treasure on the convex front instead.
    #[arg(long, conflicts_with = "input")]
    pub layout_seed: Option<u64>,
    /// Treasures in a random layout.
    #[arg(long, default_value_t = 12, requires = "layout_seed")]
    pub treasures: usize,
    #[arg(long, default_value_t = 100)]
    pub resolution: usize,
    #[arg(long, default_value_t = 3000)]
    pub episodes: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon_vis: f64,
    /// States kept per policy.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Raw,
    Zscore,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Raw => Normalization::Raw,
            NormArg::Zscore => Normalization::ZScorePerFeature,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PanArgs {
    #[arg(long, value_enum, default_value_t = NormArg::Raw)]
    pub normalization: NormArg,
    #[arg(long, default_value_t = 20)]
    pub pop: usize,
    #[arg(long, default_value_t = 200)]
    pub gens: usize,
    #[arg(long, default_value_t = 0.3)]
    pub pm: f64,
    #[arg(long, default_value_t = 0.2)]
    pub pu: f64,
    #[arg(long, default_value_t = 0.5)]
    pub pr: f64,
    #[arg(long, default_value_t = 0.2)]
    pub ps: f64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub pan: PanArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub pan: PanArgs,
    /// Front members to trace into Sankey files: an index, `knee`,
    /// `objective-best` or `behavior-best`.
    #[arg(long, value_delimiter = ',', default_value = "knee")]
    pub pair: Vec<PointSelector>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// A front or comparison JSON file.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}
