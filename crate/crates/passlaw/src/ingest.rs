//! Attempt-log parsing, validation, and the canonical per-problem counts.
//!
//! Raw evaluation data arrives either as one record per attempt (the natural
//! shape of repeated-sampling runs) or as per-problem summaries (the natural
//! shape of Best-of-N-style reports). Both are normalized into
//! [`BenchmarkData`], an ordered collection of [`ProblemCounts`] that every
//! estimator downstream consumes.
//!
//! JSONL streams may begin with an optional header line of the form
//! `{"benchmark": {"name": …, "max_attempt_cap": …, "metadata": …}}`
//! carrying dataset-level fields; [`write_per_problem_jsonl`] always emits
//! one, which is what makes the write→parse round trip lossless. Lines
//! starting with `#` in CSV input are treated as comments. Unknown JSON keys
//! are ignored for forward compatibility.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One Bernoulli attempt at one problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    /// Opaque problem key.
    pub problem_id: String,
    /// Position of this attempt within the problem's sample budget.
    pub attempt_index: u64,
    /// Whether the attempt solved the problem.
    pub success: bool,
}

/// Aggregated attempt counts for a single problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemCounts {
    /// Opaque problem key.
    pub problem_id: String,
    /// Total attempts n on this problem.
    pub num_attempts: u64,
    /// Successful attempts c (0 ≤ c ≤ n).
    pub num_successes: u64,
    /// True when sampling stopped at the first success or at an attempt cap,
    /// in which case `num_successes` is at most 1.
    #[serde(default)]
    pub censored: bool,
}

/// A named benchmark: ordered per-problem counts plus provenance metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkData {
    /// Dataset name (may be empty when the input carried none).
    pub name: String,
    /// Per-problem counts in first-appearance order.
    pub problems: Vec<ProblemCounts>,
    /// Sampling cap implied by the collection protocol, if any.
    pub max_attempt_cap: Option<u64>,
    /// Free-form provenance keys (model name, temperature, …).
    pub metadata: BTreeMap<String, String>,
}

/// Supported input schemas for [`parse_attempt_log`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    /// One JSON object per attempt: `problem_id`, `attempt_index`, `success`.
    PerAttemptJsonl,
    /// One JSON object per problem: `problem_id`, `num_attempts`,
    /// `num_successes`, optional `censored`.
    PerProblemJsonl,
    /// CSV with header `problem_id,num_attempts,num_successes,censored`.
    PerProblemCsv,
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderLine {
    benchmark: HeaderFields,
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderFields {
    #[serde(default)]
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_attempt_cap: Option<u64>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

/// Parse a raw attempt log into canonical per-problem counts.
///
/// Per-attempt records are aggregated (n = record count, c = success count);
/// per-problem rows pass through. First-appearance order of problems is
/// preserved.
///
/// # Errors
///
/// Parse errors name the offending line: malformed rows, duplicate
/// `(problem_id, attempt_index)` pairs, per-problem rows with
/// `num_successes > num_attempts` or `num_attempts = 0`, and I/O failures.
pub fn parse_attempt_log<R: Read>(reader: R, format: LogFormat) -> Result<BenchmarkData> {
    match format {
        LogFormat::PerAttemptJsonl => parse_per_attempt_jsonl(reader),
        LogFormat::PerProblemJsonl => parse_per_problem_jsonl(reader),
        LogFormat::PerProblemCsv => parse_per_problem_csv(reader),
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Iterate non-blank JSONL lines, peeling off an optional leading header.
fn jsonl_lines<R: Read>(
    reader: R,
    header: &mut Option<HeaderFields>,
) -> Result<Vec<(usize, String)>> {
    let mut rows = Vec::new();
    let mut first_content = true;
    for (index, line) in BufReader::new(reader).lines().enumerate() {
        let line_number = index + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if first_content {
            first_content = false;
            if let Ok(parsed) = serde_json::from_str::<HeaderLine>(trimmed) {
                *header = Some(parsed.benchmark);
                continue;
            }
        }
        rows.push((line_number, trimmed.to_owned()));
    }
    Ok(rows)
}

fn benchmark_from(header: Option<HeaderFields>, problems: Vec<ProblemCounts>) -> BenchmarkData {
    let header = header.unwrap_or(HeaderFields {
        name: String::new(),
        max_attempt_cap: None,
        metadata: BTreeMap::new(),
    });
    BenchmarkData {
        name: header.name,
        problems,
        max_attempt_cap: header.max_attempt_cap,
        metadata: header.metadata,
    }
}

fn parse_per_attempt_jsonl<R: Read>(reader: R) -> Result<BenchmarkData> {
    let mut header = None;
    let rows = jsonl_lines(reader, &mut header)?;

    let mut problems: Vec<ProblemCounts> = Vec::new();
    let mut slot_by_id: HashMap<String, usize> = HashMap::new();
    let mut seen_attempts: Vec<HashMap<u64, usize>> = Vec::new();
    for (line_number, row) in rows {
        let record: AttemptRecord = serde_json::from_str(&row)
            .map_err(|e| parse_error(line_number, format!("bad attempt record: {e}")))?;
        let slot = match slot_by_id.get(&record.problem_id) {
            Some(&slot) => slot,
            None => {
                slot_by_id.insert(record.problem_id.clone(), problems.len());
                problems.push(ProblemCounts {
                    problem_id: record.problem_id.clone(),
                    num_attempts: 0,
                    num_successes: 0,
                    censored: false,
                });
                seen_attempts.push(HashMap::new());
                problems.len() - 1
            }
        };
        if let Some(previous) = seen_attempts[slot].insert(record.attempt_index, line_number) {
            return Err(parse_error(
                line_number,
                format!(
                    "duplicate attempt ({}, {}) first seen on line {previous}",
                    record.problem_id, record.attempt_index
                ),
            ));
        }
        problems[slot].num_attempts += 1;
        problems[slot].num_successes += u64::from(record.success);
    }
    Ok(benchmark_from(header, problems))
}

fn check_problem_row(row: &ProblemCounts, line_number: usize) -> Result<()> {
    if row.num_attempts == 0 {
        return Err(parse_error(
            line_number,
            format!("problem {:?} has zero attempts", row.problem_id),
        ));
    }
    if row.num_successes > row.num_attempts {
        return Err(parse_error(
            line_number,
            format!(
                "problem {:?} reports more successes ({}) than attempts ({})",
                row.problem_id, row.num_successes, row.num_attempts
            ),
        ));
    }
    Ok(())
}

fn parse_per_problem_jsonl<R: Read>(reader: R) -> Result<BenchmarkData> {
    let mut header = None;
    let rows = jsonl_lines(reader, &mut header)?;

    let mut problems = Vec::with_capacity(rows.len());
    for (line_number, row) in rows {
        let counts: ProblemCounts = serde_json::from_str(&row)
            .map_err(|e| parse_error(line_number, format!("bad problem row: {e}")))?;
        check_problem_row(&counts, line_number)?;
        problems.push(counts);
    }
    Ok(benchmark_from(header, problems))
}

const CSV_HEADER: [&str; 4] = ["problem_id", "num_attempts", "num_successes", "censored"];

fn parse_per_problem_csv<R: Read>(reader: R) -> Result<BenchmarkData> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| parse_error(1, format!("bad CSV header: {e}")))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(parse_error(
            1,
            format!(
                "CSV header must be {:?}, got {:?}",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut problems = Vec::new();
    for record in csv_reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or_default();
            parse_error(line, format!("bad CSV record: {e}"))
        })?;
        let line_number = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        let counts: ProblemCounts = record
            .deserialize(Some(&headers))
            .map_err(|e| parse_error(line_number, format!("bad CSV row: {e}")))?;
        check_problem_row(&counts, line_number)?;
        problems.push(counts);
    }
    Ok(benchmark_from(None, problems))
}

/// Check every type invariant; returns one description per violation, each
/// naming the offending problem and the rule it breaks. An empty list means
/// the data is fully valid.
pub fn validate(data: &BenchmarkData) -> Vec<String> {
    let mut violations = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for problem in &data.problems {
        let id = problem.problem_id.as_str();
        if let Some(count) = seen.get_mut(id) {
            *count += 1;
            if *count == 2 {
                violations.push(format!("problem {id:?}: duplicate problem_id"));
            }
        } else {
            seen.insert(id, 1);
        }
        if problem.num_attempts == 0 {
            violations.push(format!("problem {id:?}: num_attempts must be positive"));
        }
        if problem.num_successes > problem.num_attempts {
            violations.push(format!(
                "problem {id:?}: num_successes {} exceeds num_attempts {}",
                problem.num_successes, problem.num_attempts
            ));
        }
        if problem.censored && problem.num_successes > 1 {
            violations.push(format!(
                "problem {id:?}: censored rows stop at the first success, so num_successes must be ≤ 1 (got {})",
                problem.num_successes
            ));
        }
        if let Some(cap) = data.max_attempt_cap {
            if problem.num_attempts > cap {
                violations.push(format!(
                    "problem {id:?}: num_attempts {} exceeds max_attempt_cap {cap}",
                    problem.num_attempts
                ));
            }
        }
    }
    violations
}

/// Write `data` as per-problem JSONL with a leading benchmark header line;
/// parsing the output reproduces `data` exactly.
///
/// # Errors
///
/// Propagates I/O and serialization failures.
pub fn write_per_problem_jsonl<W: Write>(data: &BenchmarkData, mut writer: W) -> Result<()> {
    let header = HeaderLine {
        benchmark: HeaderFields {
            name: data.name.clone(),
            max_attempt_cap: data.max_attempt_cap,
            metadata: data.metadata.clone(),
        },
    };
    let mut line = serde_json::to_string(&header).map_err(io_error)?;
    line.push('\n');
    writer.write_all(line.as_bytes())?;
    for problem in &data.problems {
        let mut line = serde_json::to_string(problem).map_err(io_error)?;
        line.push('\n');
        writer.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Write `data` as per-problem CSV (header row, then one row per problem).
/// Dataset-level fields (name, cap, metadata) are not representable in CSV
/// and are dropped; use JSONL when they must survive a round trip.
///
/// # Errors
///
/// Propagates I/O and serialization failures.
pub fn write_per_problem_csv<W: Write>(data: &BenchmarkData, writer: W) -> Result<()> {
    let mut csv_writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    csv_writer
        .write_record(CSV_HEADER)
        .map_err(|e| io_error(std::io::Error::other(e)))?;
    for problem in &data.problems {
        csv_writer
            .serialize(problem)
            .map_err(|e| io_error(std::io::Error::other(e)))?;
    }
    csv_writer
        .flush()
        .map_err(|e| io_error(std::io::Error::other(e)))?;
    Ok(())
}

fn io_error(e: impl Into<std::io::Error>) -> Error {
    Error::Io(e.into())
}
