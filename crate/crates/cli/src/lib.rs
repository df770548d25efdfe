//! Argument parsing and the pipeline driver behind the `holdim` binary.

mod output;
mod pipeline;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use output::{CliError, RunOutput};
pub use pipeline::run_pipeline;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug, Clone, Serialize)]
#[command(name = "holdim", version, about = "Bi-Hölder embeddings of finite metric samples, with lemma verifiers and dimension certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output file (a directory for `embed` and `demo`); stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = PrecisionArg::Float64)]
    pub precision: PrecisionArg,
    /// Worker threads for the parallel parts; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Build a sample space and dump it.
    Space(SpaceArgs),
    /// Build and certify a colored cover of a dumped space.
    Cover(CoverArgs),
    /// Compute a scale schedule.
    Schedule(ScheduleArgs),
    /// Run the construction and write one dump per stage.
    Embed(EmbedArgs),
    /// Check every lemma against a directory of stage dumps.
    Verify(VerifyArgs),
    /// Box-counting dimension estimate.
    Dims(DimsArgs),
    /// Certificates for the counterexample constructions.
    Counterexample(CounterexampleArgs),
    /// Full pipeline on a preset.
    Demo(DemoArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionArg {
    Float64,
    Rational,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    Cantor,
    Product,
    Cube,
    Harmonic,
    Random,
    Line,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SpaceArgs {
    #[arg(long, value_enum, default_value_t = SpaceKind::Cantor)]
    pub kind: SpaceKind,
    /// Cantor construction levels.
    #[arg(long, default_value_t = 4)]
    pub levels: u32,
    /// third | fastgap | ratio:<p/q> | custom:<file>
    #[arg(long, default_value = "third")]
    pub gaps: String,
    /// Cube dimension for product and cube spaces.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long, default_value_t = 16)]
    pub grid_res: usize,
    /// Truncation of the harmonic sequence.
    #[arg(long, default_value_t = 40)]
    pub m: usize,
    /// Point count and ambient dimension of random spaces.
    #[arg(long, default_value_t = 64)]
    pub count: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Comma-separated exact points for `line`, such as 0,1/3,1.
    #[arg(long)]
    pub points: Option<String>,
    /// Snowflake exponent applied after building.
    #[arg(long)]
    pub power: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverMode {
    Greedy,
    Structured,
    Refine,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CoverArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = CoverMode::Structured)]
    pub mode: CoverMode,
    /// Doubling constant used by `refine`.
    #[arg(long = "N", default_value_t = 8)]
    pub big_n: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Exact,
    Relaxed,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScheduleArgs {
    #[arg(long, default_value_t = 0)]
    pub n: u32,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// auto or an integer >= 2.
    #[arg(long = "N", default_value = "auto")]
    pub big_n: String,
    #[arg(long, default_value_t = 8)]
    pub stages: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    /// Relaxed mode: required ratio ε_{i+1}/ε_i.
    #[arg(long, default_value_t = 1.0 / 512.0)]
    pub ratio: f64,
    /// Relaxed mode: the L used in the δ recurrence.
    #[arg(long, default_value_t = 512.0)]
    pub l_user: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoversArg {
    Structured,
    Greedy,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EmbedArgs {
    #[arg(long)]
    pub space: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
    /// Defaults to the schedule's stage count.
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long, value_enum, default_value_t = CoversArg::Structured)]
    pub covers: CoversArg,
    /// Stop after the first all-singleton stage.
    #[arg(long)]
    pub stop_on_stabilization: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    /// Directory written by `embed`.
    #[arg(long)]
    pub stages: PathBuf,
    /// Defaults to the schedule stored next to the stages.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Defaults to the space stored next to the stages.
    #[arg(long)]
    pub space: Option<PathBuf>,
    /// all, or a comma-separated list of lemma ids.
    #[arg(long, default_value = "all")]
    pub lemmas: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DimsArgs {
    #[arg(long)]
    pub space: PathBuf,
    /// hi:lo:steps (geometric), or triadic:a:b / dyadic:a:b for base^-k, k = a..=b.
    #[arg(long, default_value = "triadic:1:6")]
    pub scales: String,
    /// Also sum diam^s over each scale's clusters.
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Snowflake exponent applied before counting.
    #[arg(long)]
    pub snowflake: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Fastgap,
    Hypercurve,
    Harmonic,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CounterexampleArgs {
    #[arg(long, value_enum)]
    pub which: Which,
    /// Comma-separated key=value pairs, e.g. alpha=2,beta=0.5,lambda=4.
    #[arg(long, default_value = "")]
    pub params: String,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    TwoPoint,
    CantorRelaxed,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DemoArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
}

impl Cli {
    pub fn command_name(&self) -> &'static str {
        match self.command {
            Command::Space(_) => "space",
            Command::Cover(_) => "cover",
            Command::Schedule(_) => "schedule",
            Command::Embed(_) => "embed",
            Command::Verify(_) => "verify",
            Command::Dims(_) => "dims",
            Command::Counterexample(_) => "counterexample",
            Command::Demo(_) => "demo",
        }
    }
}
