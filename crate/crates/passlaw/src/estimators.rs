//! Per-problem and aggregate pass@k estimation.
//!
//! The central quantity is pass@k: the probability that at least one of k
//! attempts on a problem succeeds. Given n recorded attempts with c
//! successes, [`pass_at_k_unbiased`] evaluates the exact combinatorial
//! estimator 1 − C(n−c, k)/C(n, k); [`pass_at_k_naive`] provides the biased
//! plug-in 1 − (1 − c/n)^k purely as a comparator. Aggregate curves average
//! the unbiased estimator over problems, which is identically the expected
//! fraction of problems solved within k attempts ("coverage").
//!
//! [`fit_exponential_rate`] checks the per-problem scaling shape: with a
//! fixed single-attempt success probability p, −log pass@k decays like
//! (1−p)^k, so log(−log pass@k) regressed on k recovers −log(1−p) as the
//! (negated) slope.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{BenchmarkData, ProblemCounts};

/// Whether a curve tracks one problem or a benchmark-wide aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    PerProblem,
    Aggregate,
}

/// A pass@k trajectory over an increasing grid of k values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassCurve {
    /// Strictly increasing positive attempt budgets.
    pub k_values: Vec<u64>,
    /// pass@k estimates in [0, 1], non-decreasing in k.
    pub values: Vec<f64>,
    /// Per-problem or aggregate.
    pub kind: CurveKind,
}

impl PassCurve {
    /// Build a curve, checking the type invariants: equal lengths, strictly
    /// increasing positive k, values within [0, 1] and non-decreasing in k
    /// (up to a 1e-12 tolerance for floating-point jitter).
    ///
    /// # Errors
    ///
    /// Domain error describing the violated invariant.
    pub fn new(k_values: Vec<u64>, values: Vec<f64>, kind: CurveKind) -> Result<Self> {
        if k_values.len() != values.len() {
            return Err(Error::Domain(format!(
                "curve has {} k values but {} pass values",
                k_values.len(),
                values.len()
            )));
        }
        for window in k_values.windows(2) {
            if window[0] >= window[1] {
                return Err(Error::Domain(format!(
                    "k values must be strictly increasing, got {} then {}",
                    window[0], window[1]
                )));
            }
        }
        if k_values.first().is_some_and(|&k| k == 0) {
            return Err(Error::Domain("k values must be positive".into()));
        }
        for (&k, &value) in k_values.iter().zip(&values) {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Domain(format!(
                    "pass value at k={k} is {value}, outside [0, 1]"
                )));
            }
        }
        for (pair_k, pair_v) in k_values.windows(2).zip(values.windows(2)) {
            if pair_v[1] < pair_v[0] - 1e-12 {
                return Err(Error::Domain(format!(
                    "pass values must be non-decreasing in k, got {} at k={} after {} at k={}",
                    pair_v[1], pair_k[1], pair_v[0], pair_k[0]
                )));
            }
        }
        Ok(Self {
            k_values,
            values,
            kind,
        })
    }

    /// Write the curve as CSV: a `# kind=…` comment, a `k,value` header,
    /// then one row per point.
    ///
    /// # Errors
    ///
    /// Propagates I/O failures.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        let kind = match self.kind {
            CurveKind::PerProblem => "per_problem",
            CurveKind::Aggregate => "aggregate",
        };
        writeln!(writer, "# kind={kind}")?;
        writeln!(writer, "k,value")?;
        for (&k, &value) in self.k_values.iter().zip(&self.values) {
            writeln!(writer, "{k},{value}")?;
        }
        Ok(())
    }

    /// Read a curve back from [`Self::write_csv`] output.
    ///
    /// `#` comment lines are skipped except for `# kind=…`, which restores
    /// the curve kind. All type invariants are re-checked on construction.
    ///
    /// # Errors
    ///
    /// Parse errors name the offending line; domain errors surface invariant
    /// violations.
    pub fn read_csv<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        let mut kind = None;
        let mut header_seen = false;
        let mut k_values = Vec::new();
        let mut values = Vec::new();
        for (index, raw) in text.lines().enumerate() {
            let fail = |message: String| Error::Parse {
                line: index + 1,
                message,
            };
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(label) = comment.trim().strip_prefix("kind=") {
                    kind = Some(match label {
                        "per_problem" => CurveKind::PerProblem,
                        "aggregate" => CurveKind::Aggregate,
                        other => return Err(fail(format!("unknown curve kind {other:?}"))),
                    });
                }
                continue;
            }
            if !header_seen {
                if line != "k,value" {
                    return Err(fail(format!(
                        "curve CSV header must be \"k,value\", got {line:?}"
                    )));
                }
                header_seen = true;
                continue;
            }
            let (k_text, value_text) = line
                .split_once(',')
                .ok_or_else(|| fail(format!("expected \"k,value\" row, got {line:?}")))?;
            k_values.push(
                k_text
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| fail(format!("bad k {k_text:?}: {e}")))?,
            );
            values.push(
                value_text
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| fail(format!("bad pass value {value_text:?}: {e}")))?,
            );
        }
        let kind = kind.ok_or_else(|| Error::Parse {
            line: 0,
            message: "curve CSV is missing its \"# kind=…\" comment".into(),
        })?;
        Self::new(k_values, values, kind)
    }
}

/// Result of regressing log(−log pass@k) on k for one problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialRateFit {
    /// Estimated per-attempt log-failure rate −log(1 − pass@1).
    pub rate: f64,
    /// Coefficient of determination of the regression, in [0, 1].
    pub r_squared: f64,
    /// Number of points the regression used.
    pub usable_points: usize,
}

/// The default log-spaced attempt grid {1, 2, 3, 5, 7, 10, 15, 22, …}:
/// six points per decade, deduplicated, capped at `max_k`.
pub fn default_k_grid(max_k: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut exponent = 0u32;
    loop {
        let k = 10f64.powf(f64::from(exponent) / 6.0).round() as u64;
        if k > max_k {
            break;
        }
        if grid.last() != Some(&k) {
            grid.push(k);
        }
        exponent += 1;
    }
    grid
}

fn check_counts(n: u64, c: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("pass@k needs at least one attempt".into()));
    }
    if c > n {
        return Err(Error::Domain(format!(
            "successes ({c}) exceed attempts ({n})"
        )));
    }
    Ok(())
}

/// Unbiased pass@k from n attempts with c successes: 1 − C(n−c, k)/C(n, k).
///
/// The binomial ratio is evaluated as the running product
/// ∏_{i=n−c+1}^{n} (1 − k/i), which never overflows and is exactly 1.0 when
/// n − c < k (fewer failures than the budget: some success is guaranteed in
/// every size-k subset).
///
/// # Errors
///
/// Domain error when k = 0, k > n (the estimator is undefined beyond the
/// sample budget), or c > n.
pub fn pass_at_k_unbiased(n: u64, c: u64, k: u64) -> Result<f64> {
    check_counts(n, c)?;
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "pass@k needs 1 ≤ k ≤ n, got k={k} with n={n}"
        )));
    }
    if n - c < k {
        return Ok(1.0);
    }
    let mut failure_ratio = 1.0f64;
    for i in (n - c + 1)..=n {
        failure_ratio *= 1.0 - k as f64 / i as f64;
    }
    Ok(1.0 - failure_ratio)
}

/// Biased plug-in estimator 1 − (1 − c/n)^k, provided solely as the
/// comparator for the unbiased form.
///
/// # Errors
///
/// Domain error when k = 0 or c > n.
pub fn pass_at_k_naive(n: u64, c: u64, k: u64) -> Result<f64> {
    check_counts(n, c)?;
    if k == 0 {
        return Err(Error::Domain("pass@k needs k ≥ 1".into()));
    }
    let failure = 1.0 - c as f64 / n as f64;
    Ok(1.0 - failure.powi(i32::try_from(k.min(i32::MAX as u64)).expect("clamped")))
}

/// The pass@k curve of a single problem over the subset of `k_values` that
/// fit its sample budget.
///
/// # Errors
///
/// Domain error for censored problems (their counts do not identify pass@k)
/// or when no k value fits the budget.
pub fn per_problem_pass_curve(problem: &ProblemCounts, k_values: &[u64]) -> Result<PassCurve> {
    if problem.censored {
        return Err(Error::Domain(format!(
            "problem {:?} is censored; its pass@k is not estimable from counts",
            problem.problem_id
        )));
    }
    let usable: Vec<u64> = k_values
        .iter()
        .copied()
        .filter(|&k| k >= 1 && k <= problem.num_attempts)
        .collect();
    if usable.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no k value fits the {}-attempt budget of problem {:?}",
            problem.num_attempts, problem.problem_id
        )));
    }
    let values = usable
        .iter()
        .map(|&k| pass_at_k_unbiased(problem.num_attempts, problem.num_successes, k))
        .collect::<Result<Vec<f64>>>()?;
    PassCurve::new(usable, values, CurveKind::PerProblem)
}

/// Write named per-problem curves as one long-format CSV with header
/// `problem_id,k,value` and one row per curve point. Problem ids are quoted
/// as needed.
///
/// # Errors
///
/// Propagates I/O failures.
pub fn write_per_problem_curves_csv<W: Write>(
    curves: &[(String, PassCurve)],
    writer: W,
) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    csv_writer
        .write_record(["problem_id", "k", "value"])
        .map_err(to_io)?;
    for (problem_id, curve) in curves {
        for (&k, &value) in curve.k_values.iter().zip(&curve.values) {
            csv_writer
                .write_record([problem_id.as_str(), &k.to_string(), &value.to_string()])
                .map_err(to_io)?;
        }
    }
    csv_writer.flush()?;
    Ok(())
}

/// Read per-problem curves back from [`write_per_problem_curves_csv`]
/// output. Rows for one problem must be contiguous; `#` comment lines are
/// skipped.
///
/// # Errors
///
/// Parse errors name the offending line; curve invariant violations surface
/// as domain errors.
pub fn read_per_problem_curves_csv<R: Read>(reader: R) -> Result<Vec<(String, PassCurve)>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let fail = |line: usize, message: String| Error::Parse { line, message };
    let headers = csv_reader
        .headers()
        .map_err(|e| fail(1, format!("bad CSV header: {e}")))?;
    if headers.iter().collect::<Vec<_>>() != ["problem_id", "k", "value"] {
        return Err(fail(
            1,
            format!(
                "per-problem curve CSV header must be \"problem_id,k,value\", got {:?}",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut curves: Vec<(String, Vec<u64>, Vec<f64>)> = Vec::new();
    let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or_default();
            fail(line, format!("bad CSV record: {e}"))
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        let (id, k_text, value_text) = match (record.get(0), record.get(1), record.get(2)) {
            (Some(id), Some(k), Some(value)) if record.len() == 3 => (id, k, value),
            _ => return Err(fail(line, format!("expected 3 fields, got {}", record.len()))),
        };
        let k = k_text
            .parse::<u64>()
            .map_err(|e| fail(line, format!("bad k {k_text:?}: {e}")))?;
        let value = value_text
            .parse::<f64>()
            .map_err(|e| fail(line, format!("bad pass value {value_text:?}: {e}")))?;
        match curves.last_mut() {
            Some((current, k_values, values)) if current == id => {
                k_values.push(k);
                values.push(value);
            }
            _ => {
                if !seen.insert(id.to_string()) {
                    return Err(fail(
                        line,
                        format!("rows for problem {id:?} are not contiguous"),
                    ));
                }
                curves.push((id.to_string(), vec![k], vec![value]));
            }
        }
    }
    curves
        .into_iter()
        .map(|(id, k_values, values)| {
            let curve = PassCurve::new(k_values, values, CurveKind::PerProblem)?;
            Ok((id, curve))
        })
        .collect()
}

/// An aggregate curve plus records of what was left out to compute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    /// Mean-over-problems pass@k (the expected solved fraction at budget k).
    pub curve: PassCurve,
    /// k values dropped because they exceed some problem's sample budget.
    pub dropped_k: Vec<u64>,
    /// Censored problems excluded from the average (their pass@k is not
    /// estimable from counts).
    pub excluded_problems: Vec<String>,
}

/// Average the unbiased per-problem pass@k over all uncensored problems.
///
/// Any k exceeding the smallest per-problem budget is dropped and recorded
/// in `dropped_k`; censored problems are excluded and recorded by id.
///
/// # Errors
///
/// Insufficient-data error when no uncensored problems remain or no k value
/// fits every budget; domain error for invalid counts or an empty k grid.
pub fn aggregate_pass_curve(data: &BenchmarkData, k_values: &[u64]) -> Result<AggregateCurve> {
    if k_values.is_empty() {
        return Err(Error::Domain("aggregate curve needs at least one k".into()));
    }
    let excluded_problems: Vec<String> = data
        .problems
        .iter()
        .filter(|p| p.censored)
        .map(|p| p.problem_id.clone())
        .collect();
    let included: Vec<&ProblemCounts> = data.problems.iter().filter(|p| !p.censored).collect();
    if included.is_empty() {
        return Err(Error::InsufficientData(
            "no uncensored problems to aggregate".into(),
        ));
    }
    for problem in &included {
        check_counts(problem.num_attempts, problem.num_successes).map_err(|e| {
            Error::Domain(format!("problem {:?}: {e}", problem.problem_id))
        })?;
    }
    let budget = included
        .iter()
        .map(|p| p.num_attempts)
        .min()
        .expect("non-empty");
    let mut kept = Vec::new();
    let mut dropped_k = Vec::new();
    for &k in k_values {
        if k >= 1 && k <= budget {
            kept.push(k);
        } else {
            dropped_k.push(k);
        }
    }
    if kept.is_empty() {
        return Err(Error::InsufficientData(format!(
            "every requested k exceeds the smallest sample budget ({budget})"
        )));
    }

    // Per-problem rows in parallel; summation in fixed problem order.
    let rows: Vec<Vec<f64>> = included
        .par_iter()
        .map(|problem| {
            kept.iter()
                .map(|&k| {
                    pass_at_k_unbiased(problem.num_attempts, problem.num_successes, k)
                        .expect("bounds pre-checked")
                })
                .collect()
        })
        .collect();
    let count = rows.len() as f64;
    let values: Vec<f64> = (0..kept.len())
        .map(|column| rows.iter().map(|row| row[column]).sum::<f64>() / count)
        .collect();
    Ok(AggregateCurve {
        curve: PassCurve::new(kept, values, CurveKind::Aggregate)?,
        dropped_k,
        excluded_problems,
    })
}

/// Why a curve point was left out of a negative-log transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmitReason {
    /// pass@k = 0: −log is infinite.
    Infinite,
    /// pass@k = 1: −log collapses to zero and breaks log-log regression.
    Degenerate,
}

/// One usable point of a −log pass@k curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegLogPoint {
    pub k: u64,
    /// −ln pass@k (natural log).
    pub neg_log: f64,
}

/// A point omitted from the −log transform, with the reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmittedPoint {
    pub k: u64,
    pub reason: OmitReason,
}

/// −log pass@k with the unusable endpoints split out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegLogCurve {
    pub points: Vec<NegLogPoint>,
    pub omitted: Vec<OmittedPoint>,
}

/// Transform a pass curve to (k, −ln pass@k) pairs, omitting values of
/// exactly 0 (infinite) or 1 (degenerate zero) into a side list.
pub fn neg_log_curve(curve: &PassCurve) -> NegLogCurve {
    let mut points = Vec::new();
    let mut omitted = Vec::new();
    for (&k, &value) in curve.k_values.iter().zip(&curve.values) {
        if value == 0.0 {
            omitted.push(OmittedPoint {
                k,
                reason: OmitReason::Infinite,
            });
        } else if value == 1.0 {
            omitted.push(OmittedPoint {
                k,
                reason: OmitReason::Degenerate,
            });
        } else {
            points.push(NegLogPoint {
                k,
                neg_log: -value.ln(),
            });
        }
    }
    NegLogCurve { points, omitted }
}

/// Ordinary least squares of y on x: returns (slope, intercept, r²).
/// r² is clamped into [0, 1]; a zero-variance y yields r² = 1.
pub(crate) fn ordinary_least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut covariance = 0.0;
    let mut variance_x = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        covariance += (xi - mean_x) * (yi - mean_y);
        variance_x += (xi - mean_x) * (xi - mean_x);
    }
    let slope = covariance / variance_x;
    let intercept = mean_y - slope * mean_x;
    let mut residual = 0.0;
    let mut total = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let fitted = intercept + slope * xi;
        residual += (yi - fitted) * (yi - fitted);
        total += (yi - mean_y) * (yi - mean_y);
    }
    let r_squared = if total > 0.0 {
        (1.0 - residual / total).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, r_squared)
}

/// Fit the per-problem exponential law: regress log(−log pass@k) on k; the
/// negated slope estimates −log(1 − pass@1).
///
/// The regression prefers the late-k window where the exponential asymptote
/// holds — points with pass@k ≥ 0.9, relaxed to ≥ 0.5 and then to all
/// non-degenerate points whenever fewer than 3 survive a threshold.
///
/// # Errors
///
/// Domain error for aggregate curves; insufficient-data error with fewer
/// than 3 usable points; fit error if the recovered rate is not positive.
pub fn fit_exponential_rate(curve: &PassCurve) -> Result<ExponentialRateFit> {
    if curve.kind != CurveKind::PerProblem {
        return Err(Error::Domain(
            "exponential rate fit expects a per-problem curve".into(),
        ));
    }
    let usable: Vec<(f64, f64)> = curve
        .k_values
        .iter()
        .zip(&curve.values)
        .filter(|&(_, &v)| v > 0.0 && v < 1.0)
        .map(|(&k, &v)| (k as f64, v))
        .collect();
    let windowed: Vec<(f64, f64)> = [0.9, 0.5]
        .iter()
        .map(|&threshold| {
            usable
                .iter()
                .copied()
                .filter(|&(_, v)| v >= threshold)
                .collect::<Vec<_>>()
        })
        .find(|window| window.len() >= 3)
        .unwrap_or_else(|| usable.clone());
    if windowed.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "exponential rate fit needs ≥ 3 points strictly inside (0, 1), found {}",
            windowed.len()
        )));
    }
    let x: Vec<f64> = windowed.iter().map(|&(k, _)| k).collect();
    let y: Vec<f64> = windowed.iter().map(|&(_, v)| (-v.ln()).ln()).collect();
    let (slope, _, r_squared) = ordinary_least_squares(&x, &y);
    let rate = -slope;
    if !(rate > 0.0) {
        return Err(Error::FitFailed(format!(
            "recovered non-positive failure rate {rate}; curve is not exponential in k"
        )));
    }
    Ok(ExponentialRateFit {
        rate,
        r_squared,
        usable_points: windowed.len(),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    use super::*;

    fn problem(id: &str, n: u64, c: u64) -> ProblemCounts {
        ProblemCounts {
            problem_id: id.into(),
            num_attempts: n,
            num_successes: c,
            censored: false,
        }
    }

    fn benchmark(problems: Vec<ProblemCounts>) -> BenchmarkData {
        BenchmarkData {
            name: "test".into(),
            problems,
            max_attempt_cap: None,
            metadata: BTreeMap::new(),
        }
    }

    #[test]
    fn unbiased_reference_values() {
        assert_eq!(pass_at_k_unbiased(10, 0, 5).unwrap(), 0.0);
        // n=4, c=2, k=2: of the 6 two-attempt subsets exactly one is all
        // failures, so pass@2 = 5/6.
        let v = pass_at_k_unbiased(4, 2, 2).unwrap();
        assert!((v - 5.0 / 6.0).abs() < 1e-15);
        // Fewer failures than budget: certain success.
        assert_eq!(pass_at_k_unbiased(5, 3, 3).unwrap(), 1.0);
        assert_eq!(pass_at_k_unbiased(2, 1, 1).unwrap(), 0.5);
    }

    #[test]
    fn unbiased_rejects_out_of_range_k() {
        assert!(pass_at_k_unbiased(10, 2, 11).is_err());
        assert!(pass_at_k_unbiased(10, 2, 0).is_err());
        assert!(pass_at_k_unbiased(0, 0, 1).is_err());
        assert!(pass_at_k_unbiased(3, 4, 1).is_err());
    }

    #[test]
    fn naive_reference_values() {
        assert_eq!(pass_at_k_naive(10, 10, 3).unwrap(), 1.0);
        assert_eq!(pass_at_k_naive(10, 0, 7).unwrap(), 0.0);
        assert!((pass_at_k_naive(2, 1, 2).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn unbiased_boundary_at_full_budget() {
        for n in [1u64, 2, 7, 40] {
            assert_eq!(pass_at_k_unbiased(n, 0, n).unwrap(), 0.0);
            for c in 1..=n {
                assert_eq!(pass_at_k_unbiased(n, c, n).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn default_grid_matches_documented_prefix() {
        assert_eq!(
            default_k_grid(100),
            vec![1, 2, 3, 5, 7, 10, 15, 22, 32, 46, 68, 100]
        );
        assert_eq!(default_k_grid(4), vec![1, 2, 3]);
    }

    #[test]
    fn aggregate_is_mean_of_per_problem_values() {
        // Two problems tuned to per-problem pass@1 of 0.2 and 0.4.
        let data = benchmark(vec![problem("a", 10, 2), problem("b", 10, 4)]);
        let out = aggregate_pass_curve(&data, &[1]).unwrap();
        assert!((out.curve.values[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn aggregate_saturates_when_everything_solves() {
        let data = benchmark(vec![problem("a", 5, 5), problem("b", 9, 9)]);
        let out = aggregate_pass_curve(&data, &[1, 2, 5]).unwrap();
        assert_eq!(out.curve.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn aggregate_of_single_problem_equals_its_curve() {
        let counts = problem("solo", 40, 3);
        let grid = default_k_grid(40);
        let solo = per_problem_pass_curve(&counts, &grid).unwrap();
        let out = aggregate_pass_curve(&benchmark(vec![counts]), &grid).unwrap();
        assert_eq!(out.curve.k_values, solo.k_values);
        assert_eq!(out.curve.values, solo.values);
    }

    #[test]
    fn aggregate_matches_mean_of_per_problem_curves_exactly() {
        let problems = vec![
            problem("a", 30, 1),
            problem("b", 25, 5),
            problem("c", 40, 0),
            problem("d", 25, 25),
        ];
        let grid = default_k_grid(25);
        let curves: Vec<PassCurve> = problems
            .iter()
            .map(|p| per_problem_pass_curve(p, &grid).unwrap())
            .collect();
        let out = aggregate_pass_curve(&benchmark(problems), &grid).unwrap();
        for (i, &k) in out.curve.k_values.iter().enumerate() {
            let mean: f64 = curves
                .iter()
                .map(|c| {
                    let at = c.k_values.iter().position(|&ck| ck == k).unwrap();
                    c.values[at]
                })
                .sum::<f64>()
                / curves.len() as f64;
            assert_eq!(out.curve.values[i], mean);
        }
    }

    #[test]
    fn aggregate_drops_oversized_k_and_censored_problems() {
        let mut censored = problem("cens", 100, 1);
        censored.censored = true;
        let data = benchmark(vec![problem("a", 10, 2), censored]);
        let out = aggregate_pass_curve(&data, &[1, 5, 10, 20, 50]).unwrap();
        assert_eq!(out.curve.k_values, vec![1, 5, 10]);
        assert_eq!(out.dropped_k, vec![20, 50]);
        assert_eq!(out.excluded_problems, vec!["cens".to_string()]);
    }

    #[test]
    fn aggregate_rejects_empty_data() {
        assert!(aggregate_pass_curve(&benchmark(vec![]), &[1]).is_err());
    }

    #[test]
    fn neg_log_transform_splits_degenerate_points() {
        let curve = PassCurve::new(
            vec![1, 4, 10],
            vec![0.0, (-1.0f64).exp(), 1.0],
            CurveKind::Aggregate,
        )
        .unwrap();
        let transformed = neg_log_curve(&curve);
        assert_eq!(transformed.points.len(), 1);
        assert_eq!(transformed.points[0].k, 4);
        assert!((transformed.points[0].neg_log - 1.0).abs() < 1e-14);
        assert_eq!(
            transformed.omitted,
            vec![
                OmittedPoint {
                    k: 1,
                    reason: OmitReason::Infinite
                },
                OmittedPoint {
                    k: 10,
                    reason: OmitReason::Degenerate
                },
            ]
        );
    }

    fn exact_curve(p: f64, max_k: u64) -> PassCurve {
        let grid = default_k_grid(max_k);
        let values = grid
            .iter()
            .map(|&k| 1.0 - (1.0 - p).powi(k as i32))
            .collect();
        PassCurve::new(grid, values, CurveKind::PerProblem).unwrap()
    }

    #[test]
    fn exponential_rate_recovers_known_probabilities() {
        let fit = fit_exponential_rate(&exact_curve(0.1, 100)).unwrap();
        let expected = -(0.9f64.ln());
        assert!(
            (fit.rate - expected).abs() <= 0.01 * expected,
            "rate {} vs {expected}",
            fit.rate
        );
        assert!(fit.r_squared >= 0.999);

        let fit = fit_exponential_rate(&exact_curve(0.5, 100)).unwrap();
        let expected = -(0.5f64.ln());
        assert!((fit.rate - expected).abs() <= 0.01 * expected);
        assert!(fit.r_squared >= 0.999);
    }

    #[test]
    fn exponential_rate_needs_non_degenerate_points() {
        let constant = PassCurve::new(
            vec![1, 2, 3, 4],
            vec![1.0, 1.0, 1.0, 1.0],
            CurveKind::PerProblem,
        )
        .unwrap();
        assert!(matches!(
            fit_exponential_rate(&constant),
            Err(Error::InsufficientData(_))
        ));
        let aggregate = exact_curve(0.2, 50);
        let aggregate = PassCurve::new(aggregate.k_values, aggregate.values, CurveKind::Aggregate)
            .unwrap();
        assert!(matches!(
            fit_exponential_rate(&aggregate),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn unbiased_estimator_is_unbiased_and_naive_is_not() {
        // Fixed truth p = 0.3, n = 10, k = 5; the unbiased estimator's mean
        // must sit within 4 standard errors of 1 − 0.7⁵ while the plug-in's
        // systematic bias dwarfs its own standard error band.
        let (p, n, k, reps) = (0.3f64, 10u64, 5u64, 20_000usize);
        let truth = 1.0 - (1.0 - p).powi(k as i32);
        let mut rng = ChaCha12Rng::seed_from_u64(1514);
        let mut unbiased = Vec::with_capacity(reps);
        let mut naive = Vec::with_capacity(reps);
        for _ in 0..reps {
            let c = (0..n).filter(|_| rng.gen::<f64>() < p).count() as u64;
            unbiased.push(pass_at_k_unbiased(n, c, k).unwrap());
            naive.push(pass_at_k_naive(n, c, k).unwrap());
        }
        let stats = |xs: &[f64]| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (xs.len() - 1) as f64;
            (mean, (var / xs.len() as f64).sqrt())
        };
        let (mean_unbiased, se_unbiased) = stats(&unbiased);
        let (mean_naive, se_naive) = stats(&naive);
        assert!(
            (mean_unbiased - truth).abs() <= 4.0 * se_unbiased,
            "unbiased mean {mean_unbiased} vs truth {truth} (se {se_unbiased})"
        );
        assert!(
            (mean_naive - truth).abs() > 4.0 * se_naive,
            "naive mean {mean_naive} should be visibly biased away from {truth}"
        );
    }

    #[test]
    fn csv_serialization_layout() {
        let curve = PassCurve::new(vec![1, 10], vec![0.25, 0.5], CurveKind::Aggregate).unwrap();
        let mut out = Vec::new();
        curve.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "# kind=aggregate\nk,value\n1,0.25\n10,0.5\n"
        );
    }

    #[test]
    fn curve_csv_round_trips_with_extra_comments() {
        let curve =
            PassCurve::new(vec![1, 7, 100], vec![0.125, 0.5, 0.53125], CurveKind::PerProblem)
                .unwrap();
        let mut out = Vec::new();
        out.extend_from_slice(b"# seed=42\n");
        curve.write_csv(&mut out).unwrap();
        let back = PassCurve::read_csv(out.as_slice()).unwrap();
        assert_eq!(back, curve);

        let missing_kind = "k,value\n1,0.5\n";
        let err = PassCurve::read_csv(missing_kind.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("kind"), "{err}");

        let bad_row = "# kind=aggregate\nk,value\n1,0.5\ntwo,0.6\n";
        let err = PassCurve::read_csv(bad_row.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
    }

    #[test]
    fn per_problem_curves_csv_round_trips_quoted_ids() {
        let curves = vec![
            (
                "suite,hard/01".to_string(),
                PassCurve::new(vec![1, 2], vec![0.1, 0.19], CurveKind::PerProblem).unwrap(),
            ),
            (
                "plain".to_string(),
                PassCurve::new(vec![1], vec![1.0], CurveKind::PerProblem).unwrap(),
            ),
        ];
        let mut out = Vec::new();
        out.extend_from_slice(b"# seed=7\n");
        write_per_problem_curves_csv(&curves, &mut out).unwrap();
        let back = read_per_problem_curves_csv(out.as_slice()).unwrap();
        assert_eq!(back, curves);

        let split = "problem_id,k,value\na,1,0.5\nb,1,0.5\na,2,0.6\n";
        let err = read_per_problem_curves_csv(split.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("contiguous"), "{err}");
    }

    proptest::proptest! {
        #[test]
        fn unbiased_is_monotone_in_k(n in 1u64..200, c_seed in 0u64..200) {
            let c = c_seed % (n + 1);
            let mut previous = 0.0;
            for k in 1..=n {
                let value = pass_at_k_unbiased(n, c, k).unwrap();
                proptest::prop_assert!(value + 1e-12 >= previous);
                proptest::prop_assert!((0.0..=1.0).contains(&value));
                previous = value;
            }
        }

        #[test]
        fn full_budget_boundary(n in 1u64..300, c_seed in 0u64..300) {
            let c = c_seed % (n + 1);
            let value = pass_at_k_unbiased(n, c, n).unwrap();
            if c == 0 {
                proptest::prop_assert_eq!(value, 0.0);
            } else {
                proptest::prop_assert_eq!(value, 1.0);
            }
        }
    }
}
