//! Command execution: library plumbing, artifact writing, exit-code mapping.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use passlaw::compound::{fit_mle, FitConfig, FittedDistribution};
use passlaw::distributions::DistributionSpec;
use passlaw::estimators::{
    aggregate_pass_curve, default_k_grid, neg_log_curve, per_problem_pass_curve,
    write_per_problem_curves_csv, OmitReason,
};
use passlaw::ingest::{parse_attempt_log, validate, write_per_problem_jsonl, BenchmarkData};
use passlaw::powerlaw::{
    classify_scaling, fit_distributional, fit_least_squares, forecast_curve, forecast_k_grid,
    ClassifyConfig, FitMethod,
};
use passlaw::synthbench::{backtest, generate_benchmark, write_backtest_csv, BacktestConfig};
use passlaw::synthbench::SyntheticGroundTruth;
use passlaw::{Error, SeededArtifact};

use crate::manifest::{InputRecord, Manifest};
use crate::{
    BacktestArgs, ClassifyArgs, Command, EstimateArgs, FitDistArgs, FitPowerlawArgs, ForecastArgs,
    InputArgs, KGridArg, SynthArgs,
};

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, missing paths, unwritable output — exit 1.
    Usage(String),
    /// Inputs that parse or validate wrong — exit 2.
    Data(String),
    /// A computation that cannot meet its numerical contract — exit 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(message) | Self::Data(message) | Self::Numerical(message) => {
                f.write_str(message)
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        if error.is_data_error() {
            Self::Data(error.to_string())
        } else if matches!(error, Error::Io(_)) {
            Self::Usage(error.to_string())
        } else {
            Self::Numerical(error.to_string())
        }
    }
}

/// Run one parsed command to completion, always leaving a manifest behind.
pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Estimate(args) => run_estimate(args),
        Command::FitDist(args) => run_fit_dist(args),
        Command::FitPowerlaw(args) => run_fit_powerlaw(args),
        Command::Forecast(args) => run_forecast(args),
        Command::Classify(args) => run_classify(args),
        Command::Synth(args) => run_synth(args),
        Command::Backtest(args) => run_backtest(args),
    }
}

/// Shared scaffolding: create the output directory, run the body, record
/// any error in the manifest, and write the manifest even on failure.
fn run_command<F>(
    name: &str,
    out_dir: &Path,
    seed: u64,
    config: serde_json::Value,
    inputs: Vec<InputRecord>,
    body: F,
) -> Result<(), CliError>
where
    F: FnOnce(&mut Manifest, &Path) -> Result<(), CliError>,
{
    std::fs::create_dir_all(out_dir).map_err(|e| {
        CliError::Usage(format!(
            "cannot create output directory {}: {e}",
            out_dir.display()
        ))
    })?;
    let mut manifest = Manifest::new(name, seed, config, inputs);
    let result = body(&mut manifest, out_dir);
    if let Err(error) = &result {
        manifest.error = Some(error.to_string());
    }
    let written = manifest.write(out_dir);
    match (result, written) {
        (Err(error), _) => Err(error),
        (Ok(()), Err(e)) => Err(CliError::Usage(format!(
            "cannot write manifest into {}: {e}",
            out_dir.display()
        ))),
        (Ok(()), Ok(())) => Ok(()),
    }
}

fn attempt_log_input(args: &InputArgs) -> InputRecord {
    InputRecord {
        role: "attempt_log".into(),
        path: args.input.display().to_string(),
        format: Some(format!("{:?}", args.format).to_snake_case()),
    }
}

/// Snake-case helper for echoing enum flags into manifests.
trait ToSnakeCase {
    fn to_snake_case(&self) -> String;
}

impl ToSnakeCase for String {
    fn to_snake_case(&self) -> String {
        let mut out = String::new();
        for (index, ch) in self.chars().enumerate() {
            if ch.is_ascii_uppercase() {
                if index > 0 {
                    out.push('_');
                }
                out.push(ch.to_ascii_lowercase());
            } else {
                out.push(ch);
            }
        }
        out
    }
}

fn read_benchmark(args: &InputArgs) -> Result<BenchmarkData, CliError> {
    let file = File::open(&args.input).map_err(|e| {
        CliError::Usage(format!("cannot open input {}: {e}", args.input.display()))
    })?;
    parse_attempt_log(BufReader::new(file), args.format.into()).map_err(CliError::from)
}

/// Serialize a payload as pretty JSON with a trailing newline and record it.
fn write_json_artifact<T: Serialize>(
    dir: &Path,
    name: &str,
    payload: &T,
    manifest: &mut Manifest,
) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(payload)
        .map_err(|e| CliError::Usage(format!("cannot serialize {name}: {e}")))?;
    text.push('\n');
    std::fs::write(dir.join(name), text)
        .map_err(|e| CliError::Usage(format!("cannot write {name}: {e}")))?;
    manifest.artifacts.push(name.to_string());
    Ok(())
}

/// Write a CSV artifact with a leading `# seed=…` comment and record it.
fn write_csv_artifact<F>(
    dir: &Path,
    name: &str,
    seed: u64,
    manifest: &mut Manifest,
    write_body: F,
) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<u8>) -> passlaw::Result<()>,
{
    let mut buffer = Vec::new();
    writeln!(buffer, "# seed={seed}").expect("writing to a Vec cannot fail");
    write_body(&mut buffer)?;
    std::fs::write(dir.join(name), buffer)
        .map_err(|e| CliError::Usage(format!("cannot write {name}: {e}")))?;
    manifest.artifacts.push(name.to_string());
    Ok(())
}

/// Resolve `--k-grid`/`--k-max` into concrete budgets. `default_max`
/// supplies the logarithmic grid's cap when `--k-max` is absent.
fn resolve_k_grid<F>(
    grid: &KGridArg,
    k_max: Option<u64>,
    default_max: F,
) -> Result<Vec<u64>, CliError>
where
    F: FnOnce() -> Result<u64, CliError>,
{
    match grid {
        KGridArg::Explicit(values) => {
            if k_max.is_some() {
                return Err(CliError::Usage(
                    "--k-max applies only to the logarithmic k grid; drop it or use --k-grid log"
                        .into(),
                ));
            }
            Ok(values.clone())
        }
        KGridArg::Log => {
            let cap = match k_max {
                Some(0) => return Err(CliError::Usage("--k-max must be positive".into())),
                Some(value) => value,
                None => default_max()?,
            };
            Ok(default_k_grid(cap))
        }
    }
}

/// The smallest uncensored per-problem budget — the widest k cap at which
/// every problem still contributes to the aggregate.
fn smallest_uncensored_budget(data: &BenchmarkData) -> Result<u64, CliError> {
    data.problems
        .iter()
        .filter(|p| !p.censored)
        .map(|p| p.num_attempts)
        .min()
        .ok_or_else(|| {
            CliError::Data("no uncensored problems; cannot choose a k grid from the data".into())
        })
}

fn run_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let EstimateArgs {
        input,
        output,
        k_grid,
        k_max,
    } = args;
    let config = json!({
        "format": format!("{:?}", input.format).to_snake_case(),
        "k_grid": k_grid.to_string(),
        "k_max": k_max,
    });
    let inputs = vec![attempt_log_input(&input)];
    run_command(
        "estimate",
        &output.out,
        output.seed,
        config,
        inputs,
        |manifest, dir| {
            let data = read_benchmark(&input)?;
            manifest.warnings.extend(validate(&data));
            let k_values = resolve_k_grid(&k_grid, k_max, || smallest_uncensored_budget(&data))?;
            let aggregate = aggregate_pass_curve(&data, &k_values)?;
            for &k in &aggregate.dropped_k {
                manifest.warnings.push(format!(
                    "k={k} exceeds a problem's sample budget; dropped from the aggregate"
                ));
            }
            for id in &aggregate.excluded_problems {
                manifest
                    .warnings
                    .push(format!("problem {id:?} is censored; excluded from the aggregate"));
            }
            let mut curves = Vec::new();
            for problem in data.problems.iter().filter(|p| !p.censored) {
                match per_problem_pass_curve(problem, &k_values) {
                    Ok(curve) => curves.push((problem.problem_id.clone(), curve)),
                    Err(Error::InsufficientData(message)) => manifest.warnings.push(message),
                    Err(error) => return Err(error.into()),
                }
            }
            write_csv_artifact(dir, "aggregate_curve.csv", output.seed, manifest, |w| {
                aggregate.curve.write_csv(w)
            })?;
            write_csv_artifact(dir, "per_problem_curves.csv", output.seed, manifest, |w| {
                write_per_problem_curves_csv(&curves, w)
            })
        },
    )
}

fn run_fit_dist(args: FitDistArgs) -> Result<(), CliError> {
    let FitDistArgs {
        input,
        output,
        family,
    } = args;
    let config = json!({
        "format": format!("{:?}", input.format).to_snake_case(),
        "family": family.label(),
    });
    let inputs = vec![attempt_log_input(&input)];
    run_command(
        "fit-dist",
        &output.out,
        output.seed,
        config,
        inputs,
        |manifest, dir| {
            let data = read_benchmark(&input)?;
            manifest.warnings.extend(validate(&data));
            let fitted = fit_mle(&data, family.into(), &FitConfig::default())?;
            if !fitted.converged {
                manifest.warnings.push(
                    "independent optimizer restarts disagree at the optimum; \
                     the fit is degenerate"
                        .into(),
                );
            }
            write_json_artifact(
                dir,
                "fitted_distribution.json",
                &SeededArtifact::new(output.seed, &fitted),
                manifest,
            )
        },
    )
}

fn run_fit_powerlaw(args: FitPowerlawArgs) -> Result<(), CliError> {
    let FitPowerlawArgs {
        input,
        output,
        family,
        k_min,
        k_grid,
        k_max,
    } = args;
    let config = json!({
        "format": format!("{:?}", input.format).to_snake_case(),
        "family": family.label(),
        "k_min": k_min,
        "k_grid": k_grid.to_string(),
        "k_max": k_max,
    });
    let inputs = vec![attempt_log_input(&input)];
    run_command(
        "fit-powerlaw",
        &output.out,
        output.seed,
        config,
        inputs,
        |manifest, dir| {
            let data = read_benchmark(&input)?;
            manifest.warnings.extend(validate(&data));
            let budget = smallest_uncensored_budget(&data)?;
            let k_values = resolve_k_grid(&k_grid, k_max, || Ok(budget))?;
            let aggregate = aggregate_pass_curve(&data, &k_values)?;
            let transformed = neg_log_curve(&aggregate.curve);
            for omitted in &transformed.omitted {
                let why = match omitted.reason {
                    OmitReason::Infinite => "pass@k is 0 there",
                    OmitReason::Degenerate => "pass@k is 1 there",
                };
                manifest
                    .warnings
                    .push(format!("k={} omitted from the regression: {why}", omitted.k));
            }
            let points: Vec<(u64, f64)> =
                transformed.points.iter().map(|p| (p.k, p.neg_log)).collect();
            let least_squares = fit_least_squares(&points, k_min)?;
            let fits = fit_distributional(
                &data,
                family.into(),
                &forecast_k_grid(budget),
                &FitConfig::default(),
                k_min,
            )?;
            write_json_artifact(
                dir,
                "least_squares.json",
                &SeededArtifact::new(output.seed, &least_squares),
                manifest,
            )?;
            write_json_artifact(
                dir,
                "distributional_simulated.json",
                &SeededArtifact::new(output.seed, &fits.simulated),
                manifest,
            )?;
            write_json_artifact(
                dir,
                "distributional_direct.json",
                &SeededArtifact::new(output.seed, &fits.direct),
                manifest,
            )
        },
    )
}

fn run_forecast(args: ForecastArgs) -> Result<(), CliError> {
    let ForecastArgs {
        input,
        out,
        seed,
        k_grid,
        k_max,
    } = args;
    let config = json!({
        "k_grid": k_grid.to_string(),
        "k_max": k_max,
    });
    let inputs = vec![InputRecord {
        role: "fitted_distribution".into(),
        path: input.display().to_string(),
        format: None,
    }];
    run_command(
        "forecast",
        &out,
        seed.unwrap_or(0),
        config,
        inputs,
        |manifest, dir| {
            let file = File::open(&input).map_err(|e| {
                CliError::Usage(format!("cannot open input {}: {e}", input.display()))
            })?;
            let artifact: SeededArtifact<FittedDistribution> =
                serde_json::from_reader(BufReader::new(file)).map_err(|e| {
                    CliError::Data(format!(
                        "cannot parse fitted distribution {}: {e}",
                        input.display()
                    ))
                })?;
            // Unless overridden, the forecast inherits the fit's seed.
            let seed = seed.unwrap_or(artifact.seed);
            manifest.seed = seed;
            let k_values = resolve_k_grid(&k_grid, k_max, || Ok(1_000_000))?;
            let curve = forecast_curve(&artifact.payload, &k_values)?;
            write_csv_artifact(dir, "forecast_curve.csv", seed, manifest, |w| {
                curve.write_csv(w)
            })
        },
    )
}

fn run_classify(args: ClassifyArgs) -> Result<(), CliError> {
    let ClassifyArgs {
        input,
        output,
        threshold_tail,
        threshold_slope,
    } = args;
    if !(0.0..=1.0).contains(&threshold_tail) {
        return Err(CliError::Usage(format!(
            "--threshold-tail must lie in [0, 1], got {threshold_tail}"
        )));
    }
    if !(threshold_slope > 0.0 && threshold_slope.is_finite()) {
        return Err(CliError::Usage(format!(
            "--threshold-slope must be positive, got {threshold_slope}"
        )));
    }
    let classify_config = ClassifyConfig {
        zero_success_threshold: threshold_tail,
        slope_drift_tolerance: threshold_slope,
        ..ClassifyConfig::default()
    };
    let config = json!({
        "format": format!("{:?}", input.format).to_snake_case(),
        "threshold_tail": threshold_tail,
        "threshold_slope": threshold_slope,
        "min_problems": classify_config.min_problems,
    });
    let inputs = vec![attempt_log_input(&input)];
    run_command(
        "classify",
        &output.out,
        output.seed,
        config,
        inputs,
        |manifest, dir| {
            let data = read_benchmark(&input)?;
            manifest.warnings.extend(validate(&data));
            let class = classify_scaling(&data, &classify_config);
            write_json_artifact(
                dir,
                "scaling_class.json",
                &SeededArtifact::new(output.seed, &class),
                manifest,
            )
        },
    )
}

/// Parse `name=value,name=value` family parameters.
fn parse_params(text: &str) -> Result<BTreeMap<String, f64>, CliError> {
    let mut params = BTreeMap::new();
    for part in text.split(',').filter(|part| !part.trim().is_empty()) {
        let (name, value) = part.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "--params entries must look like name=value, got {part:?}"
            ))
        })?;
        let name = name.trim();
        let value: f64 = value.trim().parse().map_err(|e| {
            CliError::Usage(format!("bad value for parameter {name:?}: {e}"))
        })?;
        if params.insert(name.to_string(), value).is_some() {
            return Err(CliError::Usage(format!(
                "parameter {name:?} given more than once"
            )));
        }
    }
    Ok(params)
}

fn run_synth(args: SynthArgs) -> Result<(), CliError> {
    let SynthArgs {
        output,
        family,
        params,
        problems,
        samples,
    } = args;
    let param_map = parse_params(&params)?;
    let config = json!({
        "family": &family,
        "params": &param_map,
        "problems": problems,
        "samples": samples,
    });
    run_command(
        "synth",
        &output.out,
        output.seed,
        config,
        Vec::new(),
        |manifest, dir| {
            let spec = DistributionSpec::from_parts(&family, &param_map)?;
            let truth = SyntheticGroundTruth::new(spec, problems, samples, output.seed)?;
            let data = generate_benchmark(&truth)?;
            let mut buffer = Vec::new();
            write_per_problem_jsonl(&data, &mut buffer)?;
            std::fs::write(dir.join("benchmark.jsonl"), buffer)
                .map_err(|e| CliError::Usage(format!("cannot write benchmark.jsonl: {e}")))?;
            manifest.artifacts.push("benchmark.jsonl".into());
            // The ground truth already carries the seed as a field.
            write_json_artifact(dir, "ground_truth.json", &truth, manifest)
        },
    )
}

fn run_backtest(args: BacktestArgs) -> Result<(), CliError> {
    let BacktestArgs {
        input,
        output,
        truth,
        problems,
        samples,
        seeds,
        family,
        k_min,
    } = args;
    let seed_end = output.seed.checked_add(seeds).ok_or_else(|| {
        CliError::Usage(format!(
            "--seed {} plus --seeds {seeds} overflows the seed range",
            output.seed
        ))
    })?;
    let config = json!({
        "format": format!("{:?}", input.format).to_snake_case(),
        "problems": &problems.0,
        "samples": &samples.0,
        "seeds": seeds,
        "family": family.label(),
        "k_min": k_min,
        "estimators": [
            FitMethod::LeastSquares.label(),
            FitMethod::DistributionalDirect.label(),
        ],
    });
    let inputs = vec![
        attempt_log_input(&input),
        InputRecord {
            role: "ground_truth".into(),
            path: truth.display().to_string(),
            format: None,
        },
    ];
    run_command(
        "backtest",
        &output.out,
        output.seed,
        config,
        inputs,
        |manifest, dir| {
            let data = read_benchmark(&input)?;
            manifest.warnings.extend(validate(&data));
            let file = File::open(&truth).map_err(|e| {
                CliError::Usage(format!("cannot open ground truth {}: {e}", truth.display()))
            })?;
            let ground_truth: SyntheticGroundTruth =
                serde_json::from_reader(BufReader::new(file)).map_err(|e| {
                    CliError::Data(format!(
                        "cannot parse ground truth {}: {e}",
                        truth.display()
                    ))
                })?;
            let true_b = ground_truth.true_b().ok_or_else(|| {
                CliError::Data(
                    "the ground-truth latent has no power-law left tail; \
                     relative exponent error is undefined"
                        .into(),
                )
            })?;
            if ground_truth.num_problems as usize != data.problems.len() {
                manifest.warnings.push(format!(
                    "ground truth declares {} problems but the input has {}; \
                     is this the matching benchmark?",
                    ground_truth.num_problems,
                    data.problems.len()
                ));
            }
            let backtest_config = BacktestConfig {
                problem_grid: problems.0.clone(),
                sample_grid: samples.0.clone(),
                seeds: (output.seed..seed_end).collect(),
                estimators: vec![FitMethod::LeastSquares, FitMethod::DistributionalDirect],
                fit_kind: family.into(),
                fit_config: FitConfig::default(),
                k_min,
            };
            let report = backtest(&data, true_b, &backtest_config)?;
            write_json_artifact(
                dir,
                "backtest_report.json",
                &SeededArtifact::new(output.seed, &report),
                manifest,
            )?;
            write_csv_artifact(dir, "backtest_cells.csv", output.seed, manifest, |w| {
                write_backtest_csv(&report, w)
            })
        },
    )
}
