use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{input_error, CliError, CliResult};

#[derive(Parser, Debug, Serialize)]
#[command(name = "simplex-slice", version, about, args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Global {
    /// Base seed; drawn from the clock when absent and recorded in the outputs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap (sets SIMPLEXSLICE_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// File of `key=value` lines; its values override command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Volume of a body given as JSON.
    #[command(args_override_self = true)]
    Volume(VolumeArgs),
    /// Uniform points of the unit simplex as CSV.
    #[command(args_override_self = true)]
    Sample(SampleArgs),
    /// Copula grid of one window of a returns file.
    #[command(args_override_self = true)]
    Copula(CopulaArgs),
    /// Rolling indicator series and persistent warning periods.
    #[command(args_override_self = true)]
    Indicator(IndicatorArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Volume(_) => "volume",
            Command::Sample(_) => "sample",
            Command::Copula(_) => "copula",
            Command::Indicator(_) => "indicator",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeMethod {
    Auto,
    Varsi,
    Rejection,
    Lawrence,
    Hnr,
    Nonconvex,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Float,
    Rational,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerArg {
    Exponential,
    Sorted,
}

impl From<SamplerArg> for simplexslice::sampling::SamplerMethod {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Exponential => simplexslice::sampling::SamplerMethod::Exponential,
            SamplerArg::Sorted => simplexslice::sampling::SamplerMethod::SortedIntegers,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IndicatorKind {
    /// Portfolio return against portfolio variance over one window.
    Volatility,
    /// Portfolio return over one window against the following window.
    Momentum,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CopulaMethodArg {
    Sampling,
    Lawrence,
    Hnr,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WalkArgs {
    /// Target relative error of the random walk.
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Steps between recorded walk points; default ceil(ln d) + 10.
    #[arg(long)]
    pub walk_length: Option<usize>,
    #[arg(long)]
    pub points_per_phase: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub chains: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VolumeArgs {
    #[arg(long)]
    pub body: PathBuf,
    #[arg(long, value_enum, default_value_t = VolumeMethod::Auto)]
    pub method: VolumeMethod,
    /// Lawrence arithmetic; rational above d = 30 by default.
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Rejection sample count.
    #[arg(long)]
    pub n: Option<usize>,
    /// Rejection target relative error; sizes the run from the error table
    /// when `--n` is absent.
    #[arg(long)]
    pub error: Option<f64>,
    #[arg(long, value_enum, default_value_t = SamplerArg::Exponential)]
    pub sampler: SamplerArg,
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub allow_nonconvex_high_d: bool,
    #[arg(long, default_value = "result.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = SamplerArg::Exponential)]
    pub method: SamplerArg,
    #[arg(long, default_value = "points.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CopulaArgs {
    /// CSV with header `date,ASSET1,ASSET2,...` of daily simple returns.
    #[arg(long)]
    pub returns: PathBuf,
    #[arg(long, value_enum, default_value_t = IndicatorKind::Volatility)]
    pub kind: IndicatorKind,
    /// Rows per window; default is every row (half of them for momentum).
    #[arg(long)]
    pub window: Option<usize>,
    /// Last date of the window (ISO); default is the last row.
    #[arg(long)]
    pub end: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value_t = 500_000)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = CopulaMethodArg::Sampling)]
    pub method: CopulaMethodArg,
    #[arg(long, value_enum, default_value_t = SamplerArg::Exponential)]
    pub sampler: SamplerArg,
    /// Band width for the indicator recorded in the sidecar.
    #[arg(long, default_value_t = 0.1)]
    pub band_width: f64,
    #[command(flatten)]
    pub walk: WalkArgs,
    /// Grid CSV; the JSON sidecar takes the same name with a `.json` extension.
    #[arg(long, default_value = "copula.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct IndicatorArgs {
    #[arg(long)]
    pub returns: PathBuf,
    #[arg(long, value_enum, default_value_t = IndicatorKind::Volatility)]
    pub kind: IndicatorKind,
    #[arg(long, default_value_t = 60)]
    pub window: usize,
    #[arg(long, default_value_t = 0.1)]
    pub band_width: f64,
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value_t = 500_000)]
    pub n: usize,
    /// Warning periods must last more than this many observations.
    #[arg(long, default_value_t = 60)]
    pub min_days: usize,
    #[arg(long, value_enum, default_value_t = SamplerArg::Exponential)]
    pub sampler: SamplerArg,
    #[arg(long, default_value = "indicator.csv")]
    pub out: PathBuf,
    #[arg(long, default_value = "warnings.csv")]
    pub warnings: PathBuf,
}

/// Turns `key=value` lines into flags appended after `argv`, so they win
/// over earlier occurrences. `key=false` removes a boolean flag.
pub fn merge_config(argv: &[String], path: &Path) -> CliResult<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(path, e))?;
    let mut out = argv.to_vec();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                i + 1
            ))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key == "config" {
            return Err(CliError::usage(format!(
                "{}:{}: config files cannot include other config files",
                path.display(),
                i + 1
            )));
        }
        let flag = format!("--{key}");
        match value {
            "true" => out.push(flag),
            "false" => out.retain(|a| *a != flag),
            _ => out.push(format!("{flag}={value}")),
        }
    }
    Ok(out)
}
