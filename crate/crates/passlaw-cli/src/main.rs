//! `passlaw` — reproducible pass@k scaling analysis runs.
//!
//! Each subcommand reads plain files, writes its artifacts into `--out`,
//! and records a `manifest.json` describing the run: resolved
//! configuration, inputs, artifact names, tool versions, the seed, and any
//! error. Artifacts are deterministic for a fixed configuration and seed;
//! wall-clock timestamps appear only in the manifest.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, missing paths,
//! unwritable output), 2 data error (inputs that parse or validate wrong),
//! 3 numerical failure (a fit or integral that cannot meet its contract).

mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use passlaw::compound::CompoundKind;
use passlaw::ingest::LogFormat;

#[derive(Parser)]
#[command(name = "passlaw")]
#[command(version)]
#[command(about = "Estimate, fit, forecast, and backtest pass@k scaling laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate per-problem and aggregate pass@k curves from an attempt log
    Estimate(EstimateArgs),
    /// Fit a latent success-probability distribution to counts by maximum likelihood
    FitDist(FitDistArgs),
    /// Fit −log pass@k ≈ a·k^(−b) by least squares and both distributional routes
    FitPowerlaw(FitPowerlawArgs),
    /// Forecast the aggregate pass@k curve implied by a fitted distribution
    Forecast(ForecastArgs),
    /// Classify whether the benchmark's scaling is power-law or faster
    Classify(ClassifyArgs),
    /// Generate a synthetic benchmark with a known ground-truth exponent
    Synth(SynthArgs),
    /// Measure exponent-estimator accuracy on subsampled synthetic data
    Backtest(BacktestArgs),
}

/// Input schema of an attempt log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    /// One JSON object per attempt
    #[value(name = "per_attempt_jsonl")]
    PerAttemptJsonl,
    /// One JSON object per problem (optional benchmark header line)
    #[value(name = "per_problem_jsonl")]
    PerProblemJsonl,
    /// CSV with header problem_id,num_attempts,num_successes,censored
    #[value(name = "per_problem_csv")]
    PerProblemCsv,
}

impl From<FormatArg> for LogFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::PerAttemptJsonl => LogFormat::PerAttemptJsonl,
            FormatArg::PerProblemJsonl => LogFormat::PerProblemJsonl,
            FormatArg::PerProblemCsv => LogFormat::PerProblemCsv,
        }
    }
}

/// Latent family assumed by maximum-likelihood fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    /// Scaled Beta latent (closed-form likelihood; supports censored data)
    Beta,
    /// Scaled Kumaraswamy latent (quadrature likelihood)
    Kumaraswamy,
}

impl From<FamilyArg> for CompoundKind {
    fn from(value: FamilyArg) -> Self {
        match value {
            FamilyArg::Beta => CompoundKind::ScaledBetaBinomial,
            FamilyArg::Kumaraswamy => CompoundKind::ScaledKumaraswamyBinomial,
        }
    }
}

impl FamilyArg {
    fn label(self) -> &'static str {
        match self {
            Self::Beta => "beta",
            Self::Kumaraswamy => "kumaraswamy",
        }
    }
}

/// Either the default logarithmic k grid or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq)]
enum KGridArg {
    /// Six log-spaced budgets per decade up to the k cap.
    Log,
    /// Strictly increasing positive budgets, comma-separated.
    Explicit(Vec<u64>),
}

impl std::str::FromStr for KGridArg {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        if text == "log" {
            return Ok(Self::Log);
        }
        let values = text
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<u64>()
                    .map_err(|e| format!("bad k value {part:?}: {e}"))
            })
            .collect::<Result<Vec<u64>, String>>()?;
        if values.is_empty() || values[0] == 0 {
            return Err("k values must be positive".into());
        }
        if values.windows(2).any(|pair| pair[0] >= pair[1]) {
            return Err("k values must be strictly increasing".into());
        }
        Ok(Self::Explicit(values))
    }
}

impl std::fmt::Display for KGridArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Log => write!(f, "log"),
            Self::Explicit(values) => {
                let parts: Vec<String> = values.iter().map(u64::to_string).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

/// Comma-separated positive integers (grid axes for `backtest`).
#[derive(Debug, Clone, PartialEq, Eq)]
struct GridArg(Vec<u64>);

impl std::str::FromStr for GridArg {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let values = text
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<u64>()
                    .map_err(|e| format!("bad grid value {part:?}: {e}"))
            })
            .collect::<Result<Vec<u64>, String>>()?;
        if values.is_empty() || values.contains(&0) {
            return Err("grid values must be positive".into());
        }
        Ok(Self(values))
    }
}

impl std::fmt::Display for GridArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Args)]
struct InputArgs {
    /// Input attempt log
    #[arg(long)]
    input: PathBuf,
    /// Input schema
    #[arg(long, value_enum, default_value_t = FormatArg::PerProblemJsonl)]
    format: FormatArg,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// Seed recorded in every artifact; drives all randomness
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// k grid: "log" or an explicit comma-separated list
    #[arg(long, default_value = "log")]
    k_grid: KGridArg,
    /// Cap of the logarithmic k grid (default: smallest per-problem budget)
    #[arg(long)]
    k_max: Option<u64>,
}

#[derive(Args)]
struct FitDistArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Latent family to fit
    #[arg(long, value_enum, default_value_t = FamilyArg::Beta)]
    family: FamilyArg,
}

#[derive(Args)]
struct FitPowerlawArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Latent family behind the distributional fits
    #[arg(long, value_enum, default_value_t = FamilyArg::Beta)]
    family: FamilyArg,
    /// Smallest k used by the log-log regressions
    #[arg(long, default_value_t = passlaw::powerlaw::DEFAULT_K_MIN)]
    k_min: u64,
    /// k grid for the observed-curve regression: "log" or explicit list
    #[arg(long, default_value = "log")]
    k_grid: KGridArg,
    /// Cap of the logarithmic k grid (default: smallest per-problem budget)
    #[arg(long)]
    k_max: Option<u64>,
}

#[derive(Args)]
struct ForecastArgs {
    /// Fitted-distribution artifact produced by `fit-dist`
    #[arg(long)]
    input: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// Seed recorded in the artifacts (default: the input artifact's seed)
    #[arg(long)]
    seed: Option<u64>,
    /// k grid to forecast: "log" or an explicit comma-separated list
    #[arg(long, default_value = "log")]
    k_grid: KGridArg,
    /// Cap of the logarithmic k grid (default 1000000)
    #[arg(long)]
    k_max: Option<u64>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Zero-success fraction at or above which tail mass counts as unresolved
    #[arg(long, default_value_t = passlaw::powerlaw::ClassifyConfig::default().zero_success_threshold)]
    threshold_tail: f64,
    /// Maximum relative slope drift across the top octaves still called flat
    #[arg(long, default_value_t = passlaw::powerlaw::ClassifyConfig::default().slope_drift_tolerance)]
    threshold_slope: f64,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    output: OutputArgs,
    /// Latent family of the synthetic benchmark (e.g. scaled_beta, uniform)
    #[arg(long)]
    family: String,
    /// Family parameters as comma-separated name=value pairs
    #[arg(long, default_value = "")]
    params: String,
    /// Number of problems
    #[arg(long)]
    problems: u64,
    /// Attempts per problem
    #[arg(long)]
    samples: u64,
}

#[derive(Args)]
struct BacktestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Ground-truth artifact produced by `synth`
    #[arg(long)]
    truth: PathBuf,
    /// Problem-count grid (comma-separated)
    #[arg(long, default_value = "32,64,128,256,512")]
    problems: GridArg,
    /// Samples-per-problem grid (comma-separated)
    #[arg(long, default_value = "10,30,100,300,1000,3000,10000")]
    samples: GridArg,
    /// Number of subsampling seeds (used as seed..seed+seeds)
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Latent family assumed by the distributional estimator
    #[arg(long, value_enum, default_value_t = FamilyArg::Beta)]
    family: FamilyArg,
    /// Smallest k used by the least-squares estimator
    #[arg(long, default_value_t = passlaw::powerlaw::DEFAULT_K_MIN)]
    k_min: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are not errors; everything else is usage.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run::execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}
