//! `qmcover`: seeds, constructions, verification, partition search and
//! tables over an on-disk registry.

mod commands;
mod config;
mod error;
mod registry;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "qmcover", version, about = "Binary covering codes from QM constructions")]
pub struct Cli {
    /// Registry directory (default: $QMCOVER_REGISTRY, else ./registry).
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,
    /// TOML config (default: <registry>/qmcover.toml when present).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Built-in starting codes.
    #[command(subcommand)]
    Seed(SeedCmd),
    /// Build a QM construction from registry records.
    Construct(ConstructArgs),
    /// Check a record's claims exhaustively or by decoder sampling.
    Verify(VerifyArgs),
    /// Search for an (R, ell)-partition with few subsets.
    SearchPartition(SearchArgs),
    /// Recompute the comparison tables.
    Tables(TablesArgs),
    /// List, build and verify the construction chains.
    Family(FamilyArgs),
    /// Write a record as hex, a token list or JSON.
    Export(ExportArgs),
    /// Add an external code to the registry.
    Import(ImportArgs),
    /// Records in the registry.
    List,
    /// A record's verification log.
    Log { name: String },
    /// Evaluate a closed-form length bound.
    Bound { name: String, r: u32 },
    /// Decrease of the known length bound at (r, R).
    Delta {
        r: u32,
        #[arg(value_name = "R")]
        radius: u32,
    },
}

#[derive(Subcommand, Debug)]
pub enum SeedCmd {
    /// Names of the built-in seeds.
    List,
    /// Store seeds in the registry.
    Add {
        names: Vec<String>,
        #[arg(long)]
        all: bool,
    },
    /// Store a seed if needed and verify its radius, distance and partitions.
    Verify { name: String },
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(long)]
    pub variant: String,
    #[arg(long)]
    pub start: String,
    #[arg(long)]
    pub m: u32,
    /// Partition of the start code.
    #[arg(long, default_value = "trivial")]
    pub partition: String,
    #[arg(long)]
    pub inner: Option<String>,
    #[arg(long, default_value = "trivial")]
    pub inner_partition: String,
    /// Reduction polynomial, e.g. 0x13.
    #[arg(long, value_parser = parse_u32)]
    pub poly: Option<u32>,
    /// Indicator per start subset, comma separated, `*` for STAR.
    #[arg(long, value_delimiter = ',')]
    pub indicators: Option<Vec<String>>,
    #[arg(long)]
    pub star_subset: Option<usize>,
    /// Record name (default: derived from the recipe).
    #[arg(long)]
    pub out: Option<String>,
    /// Store matrix and partitions when n is at most this.
    #[arg(long, default_value_t = 1 << 20)]
    pub max_listed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    Auto,
    Exhaustive,
    Sample,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub name: String,
    #[arg(long, value_enum, default_value_t = VerifyMode::Auto)]
    pub mode: VerifyMode,
    /// Acknowledge an expensive exhaustive run.
    #[arg(long)]
    pub heavy: bool,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip partition checks.
    #[arg(long)]
    pub no_partitions: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Greedy,
    Anneal,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// Matrix file in hex format, or a registry record name.
    #[arg(long = "in")]
    pub input: String,
    #[arg(long = "R")]
    pub radius: u32,
    #[arg(long, default_value_t = 0)]
    pub ell: u32,
    #[arg(long)]
    pub max_subsets: usize,
    /// Time budget in seconds.
    #[arg(long, default_value_t = 60)]
    pub budget: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Greedy)]
    pub strategy: StrategyArg,
    /// Attach the result to this record under `--save-as`.
    #[arg(long, requires = "save_as")]
    pub attach: Option<String>,
    #[arg(long)]
    pub save_as: Option<String>,
    /// Also write the partition text here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Text,
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct TablesArgs {
    #[arg(long = "R")]
    pub radius: u32,
    #[arg(long, default_value_t = 2)]
    pub rmin: u32,
    #[arg(long, default_value_t = 64)]
    pub rmax: u32,
    #[arg(long, value_enum, default_value_t = TableFormat::Text)]
    pub format: TableFormat,
}

#[derive(Args, Debug)]
pub struct FamilyArgs {
    #[arg(long = "R")]
    pub radius: u32,
    #[arg(long, default_value_t = 64)]
    pub rmax: u32,
    /// Build every step and store it.
    #[arg(long)]
    pub construct: bool,
    /// Verify stored steps exhaustively up to this r.
    #[arg(long)]
    pub verify_upto: Option<u32>,
    /// Decoder trials for steps above `--verify-upto`; none when absent.
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Hex,
    Tokens,
    Json,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    pub name: String,
    #[arg(long, value_enum, default_value_t = ExportFormat::Hex)]
    pub format: ExportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ImportArgs {
    pub name: String,
    /// A JSON document written by `export --format json`.
    #[arg(long, conflicts_with = "matrix")]
    pub from: Option<PathBuf>,
    /// Matrix in hex format.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long = "R")]
    pub radius: Option<u32>,
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub ell: u32,
    /// `name=file` pairs of partition files.
    #[arg(long = "partition")]
    pub partitions: Vec<String>,
    #[arg(long, default_value = "external")]
    pub source: String,
    /// Check the claimed radius before storing.
    #[arg(long)]
    pub check: bool,
}

fn parse_u32(s: &str) -> Result<u32, String> {
    let t = s.trim();
    match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(h) => u32::from_str_radix(h, 16),
        None => t.parse(),
    }
    .map_err(|e| format!("{s}: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
