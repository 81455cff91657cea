use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rqnet", version, about = "Recurrence network analysis of daily price series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Whole-series embedding parameters and DET, LAM, CC, CPL per market
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Sliding-window measure series and heat-map tables
    Windows {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Modified Mann-Kendall trend tests over long-format window output
    Trend {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        trend: TrendArgs,
    },
    /// Recurrence matrix as an RPV1 binary dump and a sparse coordinate list
    ExportRp {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        slice: SliceArgs,
    },
    /// Recurrence network as an edge list
    ExportNetwork {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        slice: SliceArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 1500-step windows slid by 100, embedded with m = 4
    Gfc,
    /// 250-step windows slid by 10, no embedding
    Short,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Gfc => "gfc",
            Preset::Short => "short",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Input CSV file; repeat for a batch
    #[arg(short, long = "input", value_name = "PATH")]
    pub inputs: Vec<PathBuf>,
    /// Label for the input at the same position (defaults to the file stem)
    #[arg(long = "label", value_name = "NAME")]
    pub labels: Vec<String>,
    /// key = value configuration file; flags override its entries
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Output format; repeat for both
    #[arg(long = "format", value_enum)]
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// daily, weekdays or none
    #[arg(long)]
    pub calendar: Option<String>,
    #[arg(long, value_name = "DEGREE")]
    pub detrend_degree: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// euclidean or maximum
    #[arg(long)]
    pub norm: Option<String>,
    /// Embedding dimension; estimated by false nearest neighbours when absent
    #[arg(long, value_name = "M")]
    pub embed_m: Option<usize>,
    /// Embedding delay; estimated from the autocorrelation when absent
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long, value_name = "M")]
    pub m_max: Option<usize>,
    #[arg(long, value_name = "LAG")]
    pub max_lag: Option<usize>,
    #[arg(long, value_name = "L")]
    pub l_min: Option<usize>,
    #[arg(long, value_name = "V")]
    pub v_min: Option<usize>,
    /// Count the main diagonal in DET
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub include_loi: Option<bool>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct WindowArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, value_name = "N")]
    pub window_length: Option<usize>,
    #[arg(long, value_name = "N")]
    pub window_step: Option<usize>,
    /// Measure to compute (DET, LAM, CC, CPL, VAR, AC1); repeatable
    #[arg(long = "measure", value_name = "NAME")]
    pub measures: Vec<String>,
    /// Re-rank every window onto (0, 1) before building recurrences
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub normalize_windows: Option<bool>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrendArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// START:END as ISO dates or window-center indices, inclusive; repeatable
    #[arg(long = "range", value_name = "START:END")]
    pub ranges: Vec<String>,
    /// Restrict to these measures; repeatable
    #[arg(long = "measure", value_name = "NAME")]
    pub measures: Vec<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SliceArgs {
    /// First index of the exported stretch of the prepared series
    #[arg(long)]
    pub start: Option<usize>,
    /// Length of the exported stretch; the whole series when absent
    #[arg(long)]
    pub length: Option<usize>,
}
