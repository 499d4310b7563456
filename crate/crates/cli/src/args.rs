use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lenma::{HeaderMode, ShortMessagePolicy};

#[derive(Debug, Parser)]
#[command(name = "lenma", version, about = "Online syslog template miner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster log lines into templates.
    Mine(MineArgs),
    /// Continue mining from a saved state, writing the state back.
    Resume(ResumeArgs),
    /// Write the templates of a saved state.
    Export(ExportArgs),
    /// Group an assignment log by minute and report recurring patterns.
    Analyze(AnalyzeArgs),
    /// Measure per-batch processing time and template growth.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShortMessages {
    EffectiveMin,
    Strict,
}

impl From<ShortMessages> for ShortMessagePolicy {
    fn from(s: ShortMessages) -> Self {
        match s {
            ShortMessages::EffectiveMin => ShortMessagePolicy::EffectiveMin,
            ShortMessages::Strict => ShortMessagePolicy::Strict,
        }
    }
}

/// Mining parameters. Unset flags take the defaults, or the values stored in
/// a state file being resumed.
#[derive(Debug, Clone, Default, Args)]
pub struct MiningFlags {
    /// Cluster similarity threshold, in (0, 1] [default: 0.9]
    #[arg(long)]
    pub tc: Option<f64>,
    /// Minimum number of shared words at the same positions [default: 3]
    #[arg(long)]
    pub tp: Option<usize>,
    /// classic-bsd, rfc5424, none or skip:N [default: classic-bsd]
    #[arg(long)]
    pub header_mode: Option<HeaderMode>,
    /// Trim trailing colons and drop punctuation-only tokens.
    #[arg(long)]
    pub drop_punct: bool,
    /// Positional gate for messages shorter than --tp [default: effective-min]
    #[arg(long, value_enum)]
    pub short_messages: Option<ShortMessages>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MineArgs {
    /// Input files; "-" reads standard input.
    pub inputs: Vec<String>,
    #[command(flatten)]
    pub mining: MiningFlags,
    /// Load the index from this state file before mining.
    #[arg(long)]
    pub state_in: Option<PathBuf>,
    /// Save the index to this state file after mining.
    #[arg(long)]
    pub state_out: Option<PathBuf>,
    /// Write one "cluster_id<TAB>line" record per message; appends when
    /// resuming from a state file.
    #[arg(long)]
    pub assignments: Option<PathBuf>,
    /// Export templates after mining: --export {json|csv|text} <path>. May be
    /// repeated.
    #[arg(long, num_args = 2, value_names = ["FORMAT", "PATH"])]
    pub export: Option<Vec<String>>,
    /// Receive syslog datagrams on addr:port instead of reading files.
    #[arg(long)]
    pub listen: Option<String>,
    /// Keep reading the input file as it grows (Ctrl-C to finish).
    #[arg(long)]
    pub follow: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ResumeArgs {
    /// State file to resume from and, unless --state-out is given, save to.
    pub state: PathBuf,
    #[command(flatten)]
    pub mine: MineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    pub state: PathBuf,
    #[arg(long, default_value = "text")]
    pub format: String,
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Assignment log written by `mine --assignments`.
    #[arg(long)]
    pub assignments: PathBuf,
    /// State file written by the same mining run.
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, default_value_t = lenma::analyze::DEFAULT_DISTANCE_THRESHOLD)]
    pub distance_threshold: f64,
    /// Number of most populous group clusters to report as frequent.
    #[arg(long, default_value_t = 2)]
    pub top_k: usize,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub batch_size: usize,
    #[command(flatten)]
    pub mining: MiningFlags,
    /// CSV output path; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
