//! Synthetic benchmarks with known ground truth and estimator backtesting.
//!
//! On real data the scaling exponent is never observable, so the exponent
//! estimators can only be judged against each other. This module closes the
//! loop: draw per-problem success probabilities from a declared latent
//! family (whose exact tail exponent is known), simulate attempt counts,
//! then measure how well each estimator recovers the true exponent as the
//! number of problems and the per-problem sample budget shrink.
//!
//! All randomness flows through per-problem substreams derived by hashing
//! the master seed with the problem index, so generation and subsampling
//! parallelize freely while remaining bit-for-bit reproducible.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution as _};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compound::{fit_mle, CompoundKind, FitConfig};
use crate::distributions::{DistributionSpec, TailLaw};
use crate::error::{Error, Result};
use crate::estimators::{aggregate_pass_curve, default_k_grid, neg_log_curve};
use crate::ingest::{BenchmarkData, ProblemCounts};
use crate::powerlaw::{
    fit_distributional, fit_least_squares, forecast_k_grid, FitMethod, DEFAULT_K_MIN,
};
use crate::specfun::ln_binomial;

/// Substream labels, hashed into derived seeds so distinct uses of one
/// master seed can never collide.
const LANE_LATENT: u64 = 1;
const LANE_COUNTS: u64 = 2;
const LANE_SELECT: u64 = 3;
const LANE_THIN: u64 = 4;
const LANE_CELL: u64 = 5;

/// SplitMix64 finalizer: a full-avalanche 64-bit mixer.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the substream labeled by `parts` (a lane plus indices), mixed
/// so that every (master_seed, parts…) tuple lands in a decorrelated region
/// of seed space. Keyed substreams make per-problem draws order-free:
/// parallel and sequential generation produce identical output.
fn derive_seed(master_seed: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(master_seed);
    for &part in parts {
        state = splitmix64(state ^ part);
    }
    state
}

/// Draw from Hypergeometric(population, successes, sample): the number of
/// successes among `sample` items taken without replacement from a
/// population containing `successes` of them.
///
/// Inverse-transform sampling on the PMF, accumulated outward from the
/// mode: the mode probability comes from the entropy-form log-binomials,
/// neighbors follow by exact ratio recurrences, and the two frontier
/// masses are consumed largest-first, so the walk is short with high
/// probability and the far tails may underflow harmlessly. (rand_distr
/// 0.4's `Hypergeometric` constructor overflows internally for populations
/// in the tens of thousands, which is the normal regime here.)
fn hypergeometric_draw(
    rng: &mut ChaCha12Rng,
    population: u64,
    successes: u64,
    sample: u64,
) -> u64 {
    debug_assert!(successes <= population && sample <= population);
    let x_min = sample.saturating_sub(population - successes);
    let x_max = successes.min(sample);
    if x_min == x_max {
        return x_min;
    }

    // P(x+1)/P(x) and P(x−1)/P(x); every factor stays below 2^53.
    let ratio_up = |x: u64| {
        ((successes - x) as f64 * (sample - x) as f64)
            / ((x + 1) as f64 * (population - successes - sample + x + 1) as f64)
    };
    let ratio_down = |x: u64| {
        (x as f64 * (population - successes - sample + x) as f64)
            / ((successes - x + 1) as f64 * (sample - x + 1) as f64)
    };

    let mode = (((sample + 1) as f64 * (successes + 1) as f64) / (population + 2) as f64)
        .floor()
        .clamp(x_min as f64, x_max as f64) as u64;
    let p_mode = (ln_binomial(successes, mode)
        + ln_binomial(population - successes, sample - mode)
        - ln_binomial(population, sample))
    .exp();

    // Uniform on (0, 1): 53 random mantissa bits, offset by half a step.
    let target = ((rng.gen::<u64>() >> 11) as f64).mul_add(f64::EPSILON / 2.0, f64::EPSILON / 4.0);

    let mut cumulative = p_mode;
    if target <= cumulative {
        return mode;
    }
    let (mut left, mut left_mass) = (mode, p_mode);
    let (mut right, mut right_mass) = (mode, p_mode);
    loop {
        let can_left = left > x_min;
        let can_right = right < x_max;
        if !can_left && !can_right {
            // The PMF sums to 1 only up to rounding; a target landing in
            // that dust goes to the last supported cell.
            return right;
        }
        let next_left = if can_left { left_mass * ratio_down(left) } else { 0.0 };
        let next_right = if can_right { right_mass * ratio_up(right) } else { 0.0 };
        if can_left && (!can_right || next_left >= next_right) {
            left -= 1;
            left_mass = next_left;
            cumulative += left_mass;
            if target <= cumulative {
                return left;
            }
        } else {
            right += 1;
            right_mass = next_right;
            cumulative += right_mass;
            if target <= cumulative {
                return right;
            }
        }
    }
}

/// A synthetic benchmark specification whose scaling law is known exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticGroundTruth {
    /// Latent success-probability family the problems are drawn from.
    pub latent: DistributionSpec,
    /// Left-tail law of `latent`, recorded so artifacts carry their own
    /// ground truth. [`SyntheticGroundTruth::new`] fills it; tampered
    /// values are rejected by [`SyntheticGroundTruth::validate`].
    pub true_tail: TailLaw,
    /// Number of problems to generate.
    pub num_problems: u64,
    /// Attempts per problem.
    pub samples_per_problem: u64,
    /// Master seed; every stochastic step derives substreams from it.
    pub seed: u64,
}

impl SyntheticGroundTruth {
    /// Build a specification, deriving `true_tail` from the latent family.
    ///
    /// # Errors
    ///
    /// Domain error for an invalid latent or zero sizes.
    pub fn new(
        latent: DistributionSpec,
        num_problems: u64,
        samples_per_problem: u64,
        seed: u64,
    ) -> Result<Self> {
        latent.validate()?;
        let truth = Self {
            latent,
            true_tail: latent.tail_law(),
            num_problems,
            samples_per_problem,
            seed,
        };
        truth.validate()?;
        Ok(truth)
    }

    /// Check sizes, the latent parameters, and that `true_tail` is exactly
    /// the latent's tail law (deserialized specifications may disagree).
    ///
    /// # Errors
    ///
    /// Domain error naming the violated invariant.
    pub fn validate(&self) -> Result<()> {
        self.latent.validate()?;
        if self.num_problems == 0 {
            return Err(Error::Domain("synthetic benchmark needs ≥ 1 problem".into()));
        }
        if self.samples_per_problem == 0 {
            return Err(Error::Domain(
                "synthetic benchmark needs ≥ 1 sample per problem".into(),
            ));
        }
        if self.true_tail != self.latent.tail_law() {
            return Err(Error::Domain(format!(
                "recorded tail law {:?} does not match the latent family's {:?}",
                self.true_tail,
                self.latent.tail_law()
            )));
        }
        Ok(())
    }

    /// The true scaling exponent, when the latent family has a power tail.
    pub fn true_b(&self) -> Option<f64> {
        self.true_tail.exponent_b
    }
}

/// Generate a benchmark: per problem i, draw pᵢ from the latent family and
/// then the success count from Binomial(samples_per_problem, pᵢ).
///
/// Each problem uses two substreams keyed by (seed, problem index) — one
/// for the latent draw, one for the count — so the output is deterministic
/// and independent of evaluation order.
///
/// # Errors
///
/// Domain error when the specification is invalid.
pub fn generate_benchmark(truth: &SyntheticGroundTruth) -> Result<BenchmarkData> {
    truth.validate()?;
    let attempts = truth.samples_per_problem;
    let problems: Vec<ProblemCounts> = (0..truth.num_problems)
        .into_par_iter()
        .map(|index| -> Result<ProblemCounts> {
            let p = truth
                .latent
                .sample(derive_seed(truth.seed, &[LANE_LATENT, index]), 1)?[0];
            let sampler = Binomial::new(attempts, p).map_err(|e| {
                Error::Numerical(format!("binomial(n={attempts}, p={p}): {e}"))
            })?;
            let mut rng =
                ChaCha12Rng::seed_from_u64(derive_seed(truth.seed, &[LANE_COUNTS, index]));
            Ok(ProblemCounts {
                problem_id: format!("synthetic-{index:06}"),
                num_attempts: attempts,
                num_successes: sampler.sample(&mut rng),
                censored: false,
            })
        })
        .collect::<Result<_>>()?;
    let mut metadata = BTreeMap::new();
    metadata.insert("latent".to_string(), truth.latent.to_string());
    metadata.insert("seed".to_string(), truth.seed.to_string());
    Ok(BenchmarkData {
        name: "synthetic".into(),
        problems,
        max_attempt_cap: None,
        metadata,
    })
}

/// Restrict a benchmark to fewer problems and a smaller per-problem budget.
///
/// Problems are chosen uniformly without replacement (kept in their
/// original order); within each chosen problem the retained success count
/// is a hypergeometric draw — the count obtained by keeping
/// `samples_per_problem` of its recorded attempts, selected without
/// replacement. Requesting every problem at the full budget therefore
/// returns the original counts unchanged.
///
/// # Errors
///
/// Domain error when a requested size exceeds what the data offers (the
/// budget is checked against the smallest per-problem attempt count so the
/// outcome cannot depend on which problems are selected), when a size is
/// zero, or when the data contains censored problems, whose recorded
/// attempts are not a complete sample to draw from.
pub fn subsample(
    data: &BenchmarkData,
    num_problems: u64,
    samples_per_problem: u64,
    seed: u64,
) -> Result<BenchmarkData> {
    if num_problems == 0 || samples_per_problem == 0 {
        return Err(Error::Domain("subsample sizes must be ≥ 1".into()));
    }
    if let Some(problem) = data.problems.iter().find(|p| p.censored) {
        return Err(Error::Domain(format!(
            "cannot subsample censored problem {:?}: its recorded attempts \
             are not a complete sample",
            problem.problem_id
        )));
    }
    let available = data.problems.len() as u64;
    if num_problems > available {
        return Err(Error::Domain(format!(
            "requested {num_problems} problems but the benchmark has {available}"
        )));
    }
    let budget = data
        .problems
        .iter()
        .map(|p| p.num_attempts)
        .min()
        .expect("non-empty: num_problems ≤ available was checked");
    if samples_per_problem > budget {
        return Err(Error::Domain(format!(
            "requested {samples_per_problem} samples per problem but the \
             smallest budget is {budget}"
        )));
    }

    let mut selector = ChaCha12Rng::seed_from_u64(derive_seed(seed, &[LANE_SELECT]));
    let mut chosen =
        rand::seq::index::sample(&mut selector, data.problems.len(), num_problems as usize)
            .into_vec();
    chosen.sort_unstable();

    let problems: Vec<ProblemCounts> = chosen
        .par_iter()
        .map(|&index| {
            let source = &data.problems[index];
            let num_successes = if samples_per_problem == source.num_attempts {
                source.num_successes
            } else {
                let mut rng =
                    ChaCha12Rng::seed_from_u64(derive_seed(seed, &[LANE_THIN, index as u64]));
                hypergeometric_draw(
                    &mut rng,
                    source.num_attempts,
                    source.num_successes,
                    samples_per_problem,
                )
            };
            ProblemCounts {
                problem_id: source.problem_id.clone(),
                num_attempts: samples_per_problem,
                num_successes,
                censored: false,
            }
        })
        .collect();
    Ok(BenchmarkData {
        name: data.name.clone(),
        problems,
        max_attempt_cap: data.max_attempt_cap,
        metadata: data.metadata.clone(),
    })
}

/// Grid, seeds, and estimator settings for [`backtest`].
#[derive(Debug, Clone, Serialize)]
pub struct BacktestConfig {
    /// Problem-count axis of the grid.
    pub problem_grid: Vec<u64>,
    /// Samples-per-problem axis of the grid.
    pub sample_grid: Vec<u64>,
    /// Master seeds; each (cell, seed) pair derives its own subsample.
    pub seeds: Vec<u64>,
    /// Estimators to run on every subsample.
    pub estimators: Vec<FitMethod>,
    /// Latent family the distributional estimators fit.
    pub fit_kind: CompoundKind,
    /// Optimizer budget for the distributional estimators.
    pub fit_config: FitConfig,
    /// Smallest k admitted to log-log regressions.
    pub k_min: u64,
}

impl Default for BacktestConfig {
    /// The default grid spans 32–512 problems and 10–10⁴ samples per
    /// problem — roughly three orders of magnitude of total inference
    /// budget — with 10 seeds and the two headline estimators.
    fn default() -> Self {
        Self {
            problem_grid: vec![32, 64, 128, 256, 512],
            sample_grid: vec![10, 30, 100, 300, 1000, 3000, 10000],
            seeds: (0..10).collect(),
            estimators: vec![FitMethod::LeastSquares, FitMethod::DistributionalDirect],
            fit_kind: CompoundKind::ScaledBetaBinomial,
            fit_config: FitConfig::default(),
            k_min: DEFAULT_K_MIN,
        }
    }
}

/// One (num_problems, samples_per_problem, estimator) cell of a backtest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestCell {
    pub num_problems: u64,
    pub samples_per_problem: u64,
    pub estimator: FitMethod,
    /// |b̂ − b| / b per seed, aligned with the report's seed list; `None`
    /// marks a seed on which the estimator failed.
    pub relative_errors: Vec<Option<f64>>,
    /// Median over the successful seeds; `None` when every seed failed.
    pub median_relative_error: Option<f64>,
    /// Number of seeds on which the estimator failed.
    pub failures: u64,
}

/// Exponent-recovery errors across the whole backtest grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    /// Ground-truth scaling exponent the errors are measured against.
    pub true_b: f64,
    /// Seed list shared by every cell's `relative_errors`.
    pub seeds: Vec<u64>,
    /// Cells in grid order: problem counts × sample budgets × estimators.
    pub grid: Vec<BacktestCell>,
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

/// Point estimate of the scaling exponent from one subsampled benchmark.
fn estimate_exponent(
    sub: &BenchmarkData,
    estimator: FitMethod,
    config: &BacktestConfig,
) -> Result<f64> {
    let budget = sub
        .problems
        .iter()
        .map(|p| p.num_attempts)
        .min()
        .unwrap_or(1);
    match estimator {
        FitMethod::LeastSquares => {
            let aggregate = aggregate_pass_curve(sub, &default_k_grid(budget))?;
            let points: Vec<(u64, f64)> = neg_log_curve(&aggregate.curve)
                .points
                .iter()
                .map(|p| (p.k, p.neg_log))
                .collect();
            Ok(fit_least_squares(&points, config.k_min)?.b)
        }
        FitMethod::DistributionalDirect => {
            Ok(fit_mle(sub, config.fit_kind, &config.fit_config)?.direct_tail_exponent)
        }
        FitMethod::DistributionalSimulated => {
            let fits = fit_distributional(
                sub,
                config.fit_kind,
                &forecast_k_grid(budget),
                &config.fit_config,
                config.k_min,
            )?;
            Ok(fits.simulated.b)
        }
    }
}

/// Backtest exponent estimators against a benchmark with known exponent.
///
/// For every (problem count, sample budget) cell and every seed, the data
/// is subsampled once and each estimator runs on that same subsample;
/// recorded is the relative error |b̂ − true_b| / true_b. An estimator
/// failure on one subsample (degenerate curve, failed fit, …) is recorded
/// as a failure mark on that seed — excluded from the cell median but
/// counted — rather than aborting the grid. A non-converged fit still
/// reports its exponent: the backtest judges estimates by their error, not
/// by the optimizer's self-diagnosis.
///
/// Cells are independent and run in parallel; the report is identical to a
/// sequential run because every draw comes from a (seed, cell)-keyed
/// substream.
///
/// # Errors
///
/// Domain error when the grid exceeds the data's size, fewer than 5 seeds
/// are supplied, a grid axis or the estimator list is empty, or `true_b`
/// is not a positive finite number.
pub fn backtest(
    data: &BenchmarkData,
    true_b: f64,
    config: &BacktestConfig,
) -> Result<BacktestReport> {
    if !(true_b > 0.0 && true_b.is_finite()) {
        return Err(Error::Domain(format!(
            "true exponent must be positive and finite, got {true_b}"
        )));
    }
    if config.seeds.len() < 5 {
        return Err(Error::Domain(format!(
            "backtest needs at least 5 seeds for stable medians, got {}",
            config.seeds.len()
        )));
    }
    if config.problem_grid.is_empty() || config.sample_grid.is_empty() {
        return Err(Error::Domain("backtest grid axes must be non-empty".into()));
    }
    if config.estimators.is_empty() {
        return Err(Error::Domain("backtest needs at least one estimator".into()));
    }
    let available = data.problems.len() as u64;
    if let Some(&too_many) = config.problem_grid.iter().find(|&&p| p == 0 || p > available) {
        return Err(Error::Domain(format!(
            "problem grid entry {too_many} is outside 1..={available}"
        )));
    }
    let budget = data.problems.iter().map(|p| p.num_attempts).min().unwrap_or(0);
    if let Some(&too_many) = config.sample_grid.iter().find(|&&s| s == 0 || s > budget) {
        return Err(Error::Domain(format!(
            "sample grid entry {too_many} is outside 1..={budget}"
        )));
    }

    let cells: Vec<(u64, u64)> = config
        .problem_grid
        .iter()
        .flat_map(|&p| config.sample_grid.iter().map(move |&s| (p, s)))
        .collect();

    // errors[cell][seed][estimator]
    let errors: Vec<Vec<Vec<Option<f64>>>> = cells
        .par_iter()
        .map(|&(num_problems, samples)| {
            config
                .seeds
                .iter()
                .map(|&seed| {
                    let stream = derive_seed(seed, &[LANE_CELL, num_problems, samples]);
                    let Ok(sub) = subsample(data, num_problems, samples, stream) else {
                        return vec![None; config.estimators.len()];
                    };
                    config
                        .estimators
                        .iter()
                        .map(|&estimator| {
                            estimate_exponent(&sub, estimator, config)
                                .ok()
                                .map(|b| (b - true_b).abs() / true_b)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut grid = Vec::with_capacity(cells.len() * config.estimators.len());
    for (cell_index, &(num_problems, samples_per_problem)) in cells.iter().enumerate() {
        for (estimator_index, &estimator) in config.estimators.iter().enumerate() {
            let relative_errors: Vec<Option<f64>> = (0..config.seeds.len())
                .map(|seed_index| errors[cell_index][seed_index][estimator_index])
                .collect();
            let successes: Vec<f64> = relative_errors.iter().flatten().copied().collect();
            let failures = (relative_errors.len() - successes.len()) as u64;
            grid.push(BacktestCell {
                num_problems,
                samples_per_problem,
                estimator,
                median_relative_error: median(successes),
                relative_errors,
                failures,
            });
        }
    }
    Ok(BacktestReport {
        true_b,
        seeds: config.seeds.clone(),
        grid,
    })
}

/// Write a backtest report as flat CSV: one row per cell × seed, with an
/// empty `relative_error` field and `failed=true` marking failures.
///
/// # Errors
///
/// Propagates I/O failures.
pub fn write_backtest_csv<W: Write>(report: &BacktestReport, mut writer: W) -> Result<()> {
    writeln!(
        writer,
        "num_problems,samples_per_problem,estimator,seed,relative_error,failed"
    )?;
    for cell in &report.grid {
        for (&seed, error) in report.seeds.iter().zip(&cell.relative_errors) {
            write!(
                writer,
                "{},{},{},{seed},",
                cell.num_problems,
                cell.samples_per_problem,
                cell.estimator.label()
            )?;
            match error {
                Some(value) => writeln!(writer, "{value},false")?,
                None => writeln!(writer, ",true")?,
            }
        }
    }
    Ok(())
}

/// One `(cell, seed)` row of the flat backtest CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestCsvRow {
    pub num_problems: u64,
    pub samples_per_problem: u64,
    pub estimator: FitMethod,
    pub seed: u64,
    /// `None` exactly when the estimator failed on this draw.
    pub relative_error: Option<f64>,
    pub failed: bool,
}

/// Read rows back from [`write_backtest_csv`] output. `#` comment lines are
/// skipped; each row's empty-error/failed fields must agree.
///
/// # Errors
///
/// Parse errors name the offending line and field.
pub fn read_backtest_csv<R: std::io::Read>(reader: R) -> Result<Vec<BacktestCsvRow>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let fail = |line: usize, message: String| Error::Parse { line, message };
    let headers = csv_reader
        .headers()
        .map_err(|e| fail(1, format!("bad CSV header: {e}")))?
        .clone();
    let expected = [
        "num_problems",
        "samples_per_problem",
        "estimator",
        "seed",
        "relative_error",
        "failed",
    ];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(fail(
            1,
            format!(
                "backtest CSV header must be {:?}, got {:?}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or_default();
            fail(line, format!("bad CSV record: {e}"))
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        let row: BacktestCsvRow = record
            .deserialize(Some(&headers))
            .map_err(|e| fail(line, format!("bad CSV row: {e}")))?;
        if row.failed == row.relative_error.is_some() {
            return Err(fail(
                line,
                "a row must have a relative error exactly when it did not fail".into(),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}
